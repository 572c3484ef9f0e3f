#pragma once

#include <filesystem>

#include "nevae/model.hpp"

namespace nevae {

// Versioned binary container: 8-byte magic "NEVAE001", u32 n_z, layer spec for
// encoder then decoder (count, then in/out/activation per layer), decoder head
// tag, then parameter tensors in declared order as 64-bit little-endian
// floats.
inline constexpr char kCheckpointMagic[8] = {'N', 'E', 'V', 'A', 'E', '0', '0', '1'};

void save_checkpoint(const std::filesystem::path& path, const Model& model);
Model load_checkpoint(const std::filesystem::path& path);

}  // namespace nevae
