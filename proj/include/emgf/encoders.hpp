#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "emgf/dataset.hpp"
#include "emgf/parameters.hpp"
#include "emgf/tensor.hpp"

namespace emgf {

/// Frozen per-token vectors standing in for a contextual encoder.
///
/// In hashed mode every token string maps to a fixed pseudo-random vector
/// (unit variance per coordinate) derived from the token bytes and a seed. In
/// file mode vectors come from a whitespace-separated table
/// ("token v1 v2 ... vd" per line); unknown tokens fall back to the hashed
/// vector and a single warning is logged.
class EmbeddingProvider {
public:
    static EmbeddingProvider hashed(std::size_t dim, std::uint64_t seed);
    static EmbeddingProvider from_file(const std::filesystem::path& path, std::uint64_t seed);

    std::size_t dim() const { return dim_; }
    bool file_backed() const { return !table_.empty(); }
    std::vector<double> lookup(const std::string& token) const;
    /// Constant n×d matrix for a token sequence.
    Tensor embed(std::span<const std::string> tokens) const;

private:
    std::size_t dim_ = 0;
    std::uint64_t seed_ = 0;
    std::unordered_map<std::string, std::vector<double>> table_;
    std::shared_ptr<std::atomic<bool>> warned_ = std::make_shared<std::atomic<bool>>(false);
};

std::uint64_t fnv1a(std::string_view text);

/// H^ctx: frozen token embeddings plus a trainable marker vector (1×d) added
/// to every aspect row.
Tensor encode_tokens(const Tensor& embeddings, AspectSpan aspect, const Tensor& aspect_marker);
Tensor encode_tokens(const EmbeddingProvider& provider, const AspectInstance& instance, const Tensor& aspect_marker);

enum class GcnKind { dep, con, sem };

struct GcnStack {
    GcnKind kind = GcnKind::dep;
    std::vector<Tensor> weights;  // d×d per layer
    std::vector<Tensor> biases;   // 1×d per layer

    std::size_t layers() const { return weights.size(); }
    static GcnStack create(GcnKind kind, std::size_t layers, std::size_t dim, const std::string& prefix,
                           ParameterStore& store, std::mt19937_64& rng);
};

/// Stacked update h_i = relu(sum_j Â_ij h_j W + b) with Â the row-normalized
/// adjacency (sem adjacency is used as given; its rows already sum to 1).
/// `adjacency` holds either one matrix shared by all layers or exactly one
/// per layer, bottom-up; con stacks require one per layer.
Tensor gcn_forward(const Tensor& input, std::span<const Tensor> adjacency, const GcnStack& stack);

struct AttentionConfig {
    std::size_t heads = 1;
    std::vector<Tensor> query;  // d×(d/heads) per head
    std::vector<Tensor> key;

    static AttentionConfig create(std::size_t dim, std::size_t heads, ParameterStore& store, std::mt19937_64& rng);
};

/// A^sem: per-head scaled dot-product scores, averaged over heads, then
/// row-softmax.
Tensor attention_matrix(const Tensor& context, const AttentionConfig& config);

struct KnowledgeParams {
    std::size_t buckets = 0;
    Tensor projection;  // kge_width×d, undefined when no external vectors are configured
    Tensor bias;        // 1×d
    Tensor defaults;    // buckets×d learned per-token defaults

    static KnowledgeParams create(std::size_t kge_width, std::size_t dim, std::size_t buckets, ParameterStore& store,
                                  std::mt19937_64& rng);
};

/// H^kge: projected knowledge vectors when the instance carries them, the
/// learned default row of each token's hash bucket otherwise.
Tensor knowledge_channel(const AspectInstance& instance, const KnowledgeParams& params);

}  // namespace emgf
