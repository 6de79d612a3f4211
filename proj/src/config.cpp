#include "emgf/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace emgf {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

std::size_t parse_size(const std::string& key, const std::string& v) {
    std::size_t out = 0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size())
        throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
    return out;
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
    std::uint64_t out = 0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size())
        throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
    return out;
}

double parse_double(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const double out = std::stod(v, &used);
        if (used == v.size()) return out;
    } catch (const std::exception&) {
    }
    throw ConfigError(key + ": expected a number, got '" + v + "'");
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

struct Field {
    std::function<void(ExperimentConfig&, const std::string&, const std::string&)> set;
    std::function<std::string(const ExperimentConfig&)> get;
};

template <typename T>
Field size_field(T ExperimentConfig::*part, std::size_t T::*member) {
    return {[=](ExperimentConfig& c, const std::string& k, const std::string& v) { (c.*part).*member = parse_size(k, v); },
            [=](const ExperimentConfig& c) { return std::to_string((c.*part).*member); }};
}

template <typename T>
Field double_field(T ExperimentConfig::*part, double T::*member) {
    return {[=](ExperimentConfig& c, const std::string& k, const std::string& v) { (c.*part).*member = parse_double(k, v); },
            [=](const ExperimentConfig& c) { return format_double((c.*part).*member); }};
}

template <typename T>
Field u64_field(T ExperimentConfig::*part, std::uint64_t T::*member) {
    return {[=](ExperimentConfig& c, const std::string& k, const std::string& v) { (c.*part).*member = parse_u64(k, v); },
            [=](const ExperimentConfig& c) { return std::to_string((c.*part).*member); }};
}

template <typename T>
Field string_field(T ExperimentConfig::*part, std::string T::*member) {
    return {[=](ExperimentConfig& c, const std::string&, const std::string& v) { (c.*part).*member = v; },
            [=](const ExperimentConfig& c) { return (c.*part).*member; }};
}

const std::vector<std::pair<std::string, Field>>& fields() {
    using E = ExperimentConfig;
    using M = ModelConfig;
    using T = TrainConfig;
    static const std::vector<std::pair<std::string, Field>> table = {
        {"model.dim", size_field(&E::model, &M::dim)},
        {"model.heads", size_field(&E::model, &M::heads)},
        {"model.dep_layers", size_field(&E::model, &M::dep_layers)},
        {"model.con_layers", size_field(&E::model, &M::con_layers)},
        {"model.sem_layers", size_field(&E::model, &M::sem_layers)},
        {"model.kge_width", size_field(&E::model, &M::kge_width)},
        {"model.kge_buckets", size_field(&E::model, &M::kge_buckets)},
        {"model.dropout", double_field(&E::model, &M::dropout)},
        {"model.embedding_seed", u64_field(&E::model, &M::embedding_seed)},
        {"model.embedding_file", string_field(&E::model, &M::embedding_file)},
        {"fusion.blocks", size_field(&E::model, &M::fusion_blocks)},
        {"fusion.factor_dim", size_field(&E::model, &M::factor_dim)},
        {"fusion.channels",
         {[](E& c, const std::string&, const std::string& v) { c.model.channels = parse_channels(v); },
          [](const E& c) { return format_channels(c.model.channels); }}},
        {"triplet.margin", double_field(&E::model, &M::margin)},
        {"triplet.anchor_c", double_field(&E::model, &M::anchor_c)},
        {"train.lr", double_field(&E::train, &T::lr)},
        {"train.batch_size", size_field(&E::train, &T::batch_size)},
        {"train.beta", double_field(&E::train, &T::beta)},
        {"train.epochs", size_field(&E::train, &T::epochs)},
        {"train.seed", u64_field(&E::train, &T::seed)},
        {"train.adam_beta1", double_field(&E::train, &T::adam_beta1)},
        {"train.adam_beta2", double_field(&E::train, &T::adam_beta2)},
        {"train.adam_eps", double_field(&E::train, &T::adam_eps)},
        {"data.train", string_field(&E::train, &T::train_data)},
        {"data.eval", string_field(&E::train, &T::eval_data)},
    };
    return table;
}

const Field& field(const std::string& key) {
    for (const auto& [name, f] : fields())
        if (name == key) return f;
    throw ConfigError("unknown config key '" + key + "'");
}

}  // namespace

void TrainConfig::validate() const {
    if (!(lr > 0.0)) throw ConfigError("train.lr must be positive");
    if (batch_size == 0) throw ConfigError("train.batch_size must be positive");
    if (!(beta >= 0.0)) throw ConfigError("train.beta must be non-negative");
    if (epochs == 0) throw ConfigError("train.epochs must be positive");
    if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0 && adam_beta2 >= 0.0 && adam_beta2 < 1.0))
        throw ConfigError("Adam betas must lie in [0, 1)");
    if (!(adam_eps > 0.0)) throw ConfigError("train.adam_eps must be positive");
}

const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys = [] {
        std::vector<std::string> k;
        for (const auto& [name, f] : fields()) k.push_back(name);
        return k;
    }();
    return keys;
}

void set_value(ExperimentConfig& config, const std::string& key, const std::string& value) {
    field(key).set(config, key, value);
}

std::string get_value(const ExperimentConfig& config, const std::string& key) { return field(key).get(config); }

void apply_config_text(ExperimentConfig& config, std::istream& in, const std::string& source) {
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(source + ":" + std::to_string(line_no) + ": expected 'key = value'");
        try {
            set_value(config, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
        } catch (const ConfigError& e) {
            throw ConfigError(source + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path.string());
    ExperimentConfig config;
    apply_config_text(config, in, path.string());
    return config;
}

std::string to_text(const ExperimentConfig& config) {
    std::string out;
    for (const auto& [name, f] : fields()) out += name + " = " + f.get(config) + "\n";
    return out;
}

}  // namespace emgf
