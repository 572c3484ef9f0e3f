#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "nevae/train.hpp"

namespace nevae {

// Flat `key = value` run-config files: one pair per line, '#' comments,
// blank lines ignored. Unknown keys are rejected.
std::map<std::string, std::string> parse_key_value_file(const std::filesystem::path& path);

// Applies recognized keys onto a TrainConfig (see README for the schema).
void apply_train_config(const std::map<std::string, std::string>& kv, TrainConfig& config);

// Fully-resolved effective config in the same key schema.
std::map<std::string, std::string> train_config_to_kv(const TrainConfig& config);

}  // namespace nevae
