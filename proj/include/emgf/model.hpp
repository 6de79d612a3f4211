#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "emgf/dataset.hpp"
#include "emgf/encoders.hpp"
#include "emgf/fusion.hpp"
#include "emgf/parameters.hpp"
#include "emgf/triplet.hpp"

namespace emgf {

struct ModelConfig {
    std::size_t dim = 16;
    std::size_t heads = 2;
    std::size_t dep_layers = 3;
    std::size_t con_layers = 3;
    std::size_t sem_layers = 3;
    std::size_t kge_width = 0;  // 0: no external knowledge vectors
    std::size_t kge_buckets = 256;
    std::size_t fusion_blocks = 6;
    std::size_t factor_dim = 16;
    std::vector<Channel> channels = {Channel::dep, Channel::con, Channel::sem, Channel::kge};
    double dropout = 0.3;
    double margin = 0.2;
    double anchor_c = 1.0;
    std::uint64_t embedding_seed = 0;
    std::string embedding_file;

    /// Throws ConfigError on non-positive sizes or an out-of-range dropout.
    void validate() const;
};

/// Per-instance structures that do not depend on parameters.
struct PreparedInstance {
    AspectInstance source;
    Tensor embeddings;             // n×d, frozen
    Tensor dep_adjacency;          // n×n 0/1 with self-loops
    std::vector<Tensor> con_slices;  // con_layers × n×n, bottom-up
    DualViewGraph views;
    Tensor pooling;                // 1×n aspect mean
    std::size_t gold = 0;

    std::size_t size() const { return source.size(); }
};

struct ForwardOptions {
    bool train = false;
    std::mt19937_64* rng = nullptr;  // dropout stream; required when train is set
    /// Overrides anchor selection, e.g. to hold anchors fixed across the
    /// perturbed evaluations of a finite-difference check.
    std::optional<std::vector<std::size_t>> anchors;
    /// Skip anchor selection and the triplet term (prediction only).
    bool triplet = true;
};

struct ForwardResult {
    Tensor logits;       // 1×3
    Tensor probs;        // 1×3
    Tensor class_loss;   // 1×1
    Tensor triplet;      // 1×1
    std::vector<std::size_t> anchors;
    FusionState fusion;

    std::size_t predicted() const;
};

class Model {
public:
    Model(ModelConfig config, std::uint64_t seed);

    const ModelConfig& config() const { return config_; }
    ParameterStore& parameters() { return store_; }
    const ParameterStore& parameters() const { return store_; }
    const EmbeddingProvider& embeddings() const { return embeddings_; }

    /// Validates the record and caches its embeddings and graphs.
    PreparedInstance prepare(const AspectInstance& instance) const;
    std::vector<PreparedInstance> prepare(const std::vector<AspectInstance>& instances) const;

    ForwardResult forward(const PreparedInstance& inst, const ForwardOptions& options = {}) const;
    /// A^sem in evaluation mode.
    Tensor semantic_attention(const PreparedInstance& inst) const;

private:
    ModelConfig config_;
    EmbeddingProvider embeddings_;
    ParameterStore store_;
    Tensor marker_;
    GcnStack dep_, con_, sem_;
    AttentionConfig attention_;
    KnowledgeParams knowledge_;
    std::vector<EmsfBlock> blocks_;
    Tensor classifier_w_;  // d_f×3
    Tensor classifier_b_;  // 1×3
};

/// softmax(r·W + b) as a 1×3 row.
Tensor classify(const Tensor& r, const Tensor& w, const Tensor& b);

/// -log(max(p[gold], 1e-12)).
Tensor class_loss(const Tensor& probs, std::size_t gold);

}  // namespace emgf
