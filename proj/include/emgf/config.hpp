#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "emgf/model.hpp"

namespace emgf {

struct TrainConfig {
    double lr = 2e-5;
    std::size_t batch_size = 16;
    double beta = 0.12;
    std::size_t epochs = 20;
    std::uint64_t seed = 0;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    std::string train_data;
    std::string eval_data;

    void validate() const;
};

struct ExperimentConfig {
    ModelConfig model;
    TrainConfig train;
};

/// Every recognised key, in the order to_text() writes them.
const std::vector<std::string>& config_keys();

/// Throws ConfigError on an unknown key or unparsable value.
void set_value(ExperimentConfig& config, const std::string& key, const std::string& value);
std::string get_value(const ExperimentConfig& config, const std::string& key);

/// "key = value" lines; '#' starts a comment; blank lines are ignored.
/// Later assignments override earlier ones.
void apply_config_text(ExperimentConfig& config, std::istream& in, const std::string& source);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Round-trippable key = value listing of every setting.
std::string to_text(const ExperimentConfig& config);

}  // namespace emgf
