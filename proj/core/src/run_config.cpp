#include "nevae/run_config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace nevae {

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

double parse_double(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': cannot parse '" + value + "' as a number");
    }
}

std::uint64_t parse_uint(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        const unsigned long long v = std::stoull(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': cannot parse '" + value + "' as an integer");
    }
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1" || value == "yes") return true;
    if (value == "false" || value == "0" || value == "no") return false;
    throw ConfigError("config key '" + key + "': cannot parse '" + value + "' as a bool");
}

std::vector<std::size_t> parse_size_list(const std::string& key, const std::string& value) {
    std::vector<std::size_t> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(parse_uint(key, item));
    }
    return out;
}

AnnealSchedule parse_anneal(const std::string& value) {
    // start:end:epochs
    std::stringstream ss(value);
    std::string a, b, c;
    if (!std::getline(ss, a, ':') || !std::getline(ss, b, ':') || !std::getline(ss, c))
        throw ConfigError("config key 'anneal': expected start:end:epochs, got '" + value + "'");
    AnnealSchedule s;
    s.start_weight = parse_double("anneal", trim(a));
    s.end_weight = parse_double("anneal", trim(b));
    s.epochs = parse_uint("anneal", trim(c));
    return s;
}

}  // namespace

std::map<std::string, std::string> parse_key_value_file(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config file " + path.string());
    std::map<std::string, std::string> kv;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path.string() + ":" + std::to_string(lineno) +
                              ": expected 'key = value', got '" + line + "'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": empty key");
        kv[key] = value;
    }
    return kv;
}

void apply_train_config(const std::map<std::string, std::string>& kv, TrainConfig& config) {
    for (const auto& [key, value] : kv) {
        if (key == "epochs") config.epochs = parse_uint(key, value);
        else if (key == "batch_size") config.batch_size = parse_uint(key, value);
        else if (key == "lr") config.lr = parse_double(key, value);
        else if (key == "seed") config.seed = parse_uint(key, value);
        else if (key == "variant") config.loss.variant = variant_from_name(value);
        else if (key == "beta") config.loss.beta = parse_double(key, value);
        else if (key == "cap_c") config.loss.cap_c = parse_double(key, value);
        else if (key == "ne_weight") config.loss.ne_weight = parse_double(key, value);
        else if (key == "reencode_binarize") config.loss.reencode_binarize = parse_bool(key, value);
        else if (key == "anneal") {
            if (value == "none") config.loss.anneal.reset();
            else config.loss.anneal = parse_anneal(value);
        }
        else if (key == "nz") config.n_z = parse_uint(key, value);
        else if (key == "hidden") config.hidden = parse_size_list(key, value);
        else if (key == "aggressive") config.aggressive = parse_bool(key, value);
        else if (key == "aggressive_max_inner") config.aggressive_max_inner = parse_uint(key, value);
        else if (key == "aggressive_stop_window") config.aggressive_stop_window = parse_uint(key, value);
        else if (key == "reset_moments_after_aggressive")
            config.reset_moments_after_aggressive = parse_bool(key, value);
        else if (key == "eval_every") config.eval_every = parse_uint(key, value);
        else if (key == "eval_seed") config.eval.seed = parse_uint(key, value);
        else if (key == "mi_samples") config.eval.mi_samples = parse_uint(key, value);
        else if (key == "mi_mixture_cap") config.eval.mi_mixture_cap = parse_uint(key, value);
        else if (key == "checkpoint_every") config.checkpoint_every = parse_uint(key, value);
        else if (key == "curve_subset_cap") config.curve_subset_cap = parse_uint(key, value);
        else throw ConfigError("unknown config key '" + key + "'");
    }
    if (config.epochs > 0 && config.batch_size == 0)
        throw ConfigError("batch_size must be >= 1");
    if (config.n_z == 0) throw ConfigError("nz must be >= 1");
}

std::map<std::string, std::string> train_config_to_kv(const TrainConfig& config) {
    auto fmt = [](double v) {
        std::ostringstream os;
        os << v;
        return os.str();
    };
    std::map<std::string, std::string> kv;
    kv["epochs"] = std::to_string(config.epochs);
    kv["batch_size"] = std::to_string(config.batch_size);
    kv["lr"] = fmt(config.lr);
    kv["seed"] = std::to_string(config.seed);
    kv["variant"] = variant_name(config.loss.variant);
    kv["beta"] = fmt(config.loss.beta);
    kv["cap_c"] = fmt(config.loss.cap_c);
    kv["ne_weight"] = fmt(config.loss.ne_weight);
    kv["reencode_binarize"] = config.loss.reencode_binarize ? "true" : "false";
    kv["anneal"] = config.loss.anneal
                       ? fmt(config.loss.anneal->start_weight) + ":" +
                             fmt(config.loss.anneal->end_weight) + ":" +
                             std::to_string(config.loss.anneal->epochs)
                       : "none";
    kv["nz"] = std::to_string(config.n_z);
    std::string hidden;
    for (std::size_t i = 0; i < config.hidden.size(); ++i)
        hidden += (i ? "," : "") + std::to_string(config.hidden[i]);
    kv["hidden"] = hidden;
    kv["aggressive"] = config.aggressive ? "true" : "false";
    kv["aggressive_max_inner"] = std::to_string(config.aggressive_max_inner);
    kv["aggressive_stop_window"] = std::to_string(config.aggressive_stop_window);
    kv["reset_moments_after_aggressive"] =
        config.reset_moments_after_aggressive ? "true" : "false";
    kv["eval_every"] = std::to_string(config.eval_every);
    kv["eval_seed"] = std::to_string(config.eval.seed);
    kv["mi_samples"] = std::to_string(config.eval.mi_samples);
    kv["mi_mixture_cap"] = std::to_string(config.eval.mi_mixture_cap);
    kv["checkpoint_every"] = std::to_string(config.checkpoint_every);
    kv["curve_subset_cap"] = std::to_string(config.curve_subset_cap);
    return kv;
}

}  // namespace nevae
