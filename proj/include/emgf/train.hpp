#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "emgf/config.hpp"
#include "emgf/metrics.hpp"
#include "emgf/model.hpp"

namespace emgf {

class Adam {
public:
    Adam(ParameterStore& store, double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);
    /// Applies one update from the accumulated gradients.
    void step();
    std::size_t steps() const { return t_; }

private:
    ParameterStore& store_;
    double lr_, beta1_, beta2_, eps_;
    std::size_t t_ = 0;
    std::vector<std::vector<double>> m_, v_;
};

struct BatchRecord {
    std::size_t epoch = 0;
    std::size_t batch = 0;
    std::size_t instances = 0;
    double total = 0.0;        // sum of the per-instance tape losses
    double class_loss = 0.0;   // batch mean L_c
    double triplet = 0.0;      // batch mean L_triplet
};

struct EpochRecord {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double class_loss = 0.0;
    double triplet = 0.0;
    double eval_accuracy = 0.0;
    double eval_macro_f1 = 0.0;
};

/// One tab-separated metrics line (no newline).
std::string format_epoch(const EpochRecord& r);
inline constexpr const char* kMetricsHeader = "# epoch\ttrain_loss\tL_c\tL_triplet\teval_acc\teval_macro_f1";

using ParameterSnapshot = std::vector<std::vector<double>>;
ParameterSnapshot snapshot(const ParameterStore& store);
void restore(ParameterStore& store, const ParameterSnapshot& values);

struct TrainResult {
    std::vector<EpochRecord> epochs;
    std::vector<BatchRecord> batches;
    std::size_t best_epoch = 0;
    double best_macro_f1 = -1.0;
    ParameterSnapshot best;
};

struct TrainHooks {
    std::ostream* metrics_log = nullptr;  // receives the header and one line per epoch
    std::function<void(const EpochRecord&)> on_epoch;
};

/// Mini-batch training with per-epoch evaluation on `eval_set` (the training
/// set when empty). Throws NumericError when a loss turns non-finite.
TrainResult train(Model& model, const std::vector<PreparedInstance>& train_set,
                  const std::vector<PreparedInstance>& eval_set, const TrainConfig& config, const TrainHooks& hooks = {});

/// Dropout off; `threads` = 0 picks the hardware concurrency.
EvalReport evaluate(const Model& model, const std::vector<PreparedInstance>& data, std::size_t threads = 0);

/// Mean over instances of L_c + beta * L_triplet, without gradients.
struct LossBreakdown {
    double total = 0.0;
    double class_loss = 0.0;
    double triplet = 0.0;
};
LossBreakdown mean_loss(const Model& model, const std::vector<PreparedInstance>& data, double beta);

/// Text checkpoint: a version line, the full config, then every parameter
/// with its shape.
void save_checkpoint(const std::filesystem::path& path, const ExperimentConfig& config, const ParameterStore& store);
struct LoadedModel {
    ExperimentConfig config;
    Model model;
};
LoadedModel load_checkpoint(const std::filesystem::path& path);

}  // namespace emgf
