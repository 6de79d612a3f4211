#include "emgf/encoders.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

namespace emgf {

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::vector<double> hashed_vector(const std::string& token, std::size_t dim, std::uint64_t seed) {
    std::uint64_t state = fnv1a(token) ^ (seed * 0xD1B54A32D192ED03ULL);
    std::vector<double> v(dim);
    // Uniform on [-sqrt(3), sqrt(3)]: zero mean, unit variance.
    const double half_width = std::sqrt(3.0);
    for (double& x : v) {
        const double unit = static_cast<double>(splitmix64(state) >> 11) * 0x1.0p-53;
        x = (2.0 * unit - 1.0) * half_width;
    }
    return v;
}

}  // namespace

std::uint64_t fnv1a(std::string_view text) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

EmbeddingProvider EmbeddingProvider::hashed(std::size_t dim, std::uint64_t seed) {
    if (dim == 0) throw ConfigError("embedding dimension must be positive");
    EmbeddingProvider p;
    p.dim_ = dim;
    p.seed_ = seed;
    return p;
}

EmbeddingProvider EmbeddingProvider::from_file(const std::filesystem::path& path, std::uint64_t seed) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open embedding table " + path.string());
    EmbeddingProvider p;
    p.seed_ = seed;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream fields(line);
        std::string token;
        if (!(fields >> token)) continue;
        std::vector<double> v;
        double x;
        while (fields >> x) v.push_back(x);
        if (!fields.eof())
            throw DataError(path.string() + ":" + std::to_string(line_no) + ": non-numeric embedding value");
        if (p.dim_ == 0) p.dim_ = v.size();
        if (v.empty() || v.size() != p.dim_)
            throw DataError(path.string() + ":" + std::to_string(line_no) + ": expected " + std::to_string(p.dim_) +
                            " values, got " + std::to_string(v.size()));
        p.table_[token] = std::move(v);
    }
    if (p.table_.empty()) throw DataError("embedding table " + path.string() + " is empty");
    return p;
}

std::vector<double> EmbeddingProvider::lookup(const std::string& token) const {
    if (!table_.empty()) {
        if (auto it = table_.find(token); it != table_.end()) return it->second;
        if (!warned_->exchange(true))
            std::cerr << "warning: token '" << token << "' missing from embedding table; using hashed vectors\n";
    }
    return hashed_vector(token, dim_, seed_);
}

Tensor EmbeddingProvider::embed(std::span<const std::string> tokens) const {
    std::vector<double> data;
    data.reserve(tokens.size() * dim_);
    for (const auto& t : tokens) {
        const auto v = lookup(t);
        data.insert(data.end(), v.begin(), v.end());
    }
    return Tensor({tokens.size(), dim_}, std::move(data));
}

Tensor encode_tokens(const Tensor& embeddings, AspectSpan aspect, const Tensor& aspect_marker) {
    const std::size_t n = embeddings.rows();
    std::vector<double> mask(n, 0.0);
    for (std::size_t i = aspect.begin; i < aspect.end && i < n; ++i) mask[i] = 1.0;
    return add(embeddings, matmul(Tensor::column_vector(std::move(mask)), aspect_marker));
}

Tensor encode_tokens(const EmbeddingProvider& provider, const AspectInstance& instance, const Tensor& aspect_marker) {
    return encode_tokens(provider.embed(instance.tokens), instance.aspect, aspect_marker);
}

GcnStack GcnStack::create(GcnKind kind, std::size_t layers, std::size_t dim, const std::string& prefix,
                          ParameterStore& store, std::mt19937_64& rng) {
    GcnStack s;
    s.kind = kind;
    for (std::size_t l = 0; l < layers; ++l) {
        s.weights.push_back(store.xavier(prefix + ".W" + std::to_string(l), dim, dim, rng));
        s.biases.push_back(store.constant(prefix + ".b" + std::to_string(l), {1, dim}, 0.0));
    }
    return s;
}

Tensor gcn_forward(const Tensor& input, std::span<const Tensor> adjacency, const GcnStack& stack) {
    const std::size_t layers = stack.layers();
    if (adjacency.empty()) throw ConfigError("gcn_forward: no adjacency given");
    if (stack.kind == GcnKind::con && adjacency.size() != layers)
        throw ConfigError("gcn_forward: con stack has " + std::to_string(layers) + " layers but " +
                          std::to_string(adjacency.size()) + " adjacency slices");
    if (adjacency.size() != 1 && adjacency.size() != layers)
        throw ConfigError("gcn_forward: " + std::to_string(adjacency.size()) + " adjacency matrices for " +
                          std::to_string(layers) + " layers");

    std::vector<Tensor> normalized;
    for (const Tensor& a : adjacency) {
        if (stack.kind == GcnKind::sem || a.requires_grad()) {
            normalized.push_back(a);
            continue;
        }
        Tensor t = a.detach();
        for (std::size_t i = 0; i < t.rows(); ++i) {
            double deg = 0.0;
            for (std::size_t j = 0; j < t.cols(); ++j) deg += t.at(i, j);
            if (deg == 0.0) continue;
            for (std::size_t j = 0; j < t.cols(); ++j) t.at(i, j) /= deg;
        }
        normalized.push_back(std::move(t));
    }

    Tensor h = input;
    for (std::size_t l = 0; l < layers; ++l) {
        const Tensor& a = normalized[normalized.size() == 1 ? 0 : l];
        h = relu(add_row(matmul(matmul(a, h), stack.weights[l]), stack.biases[l]));
    }
    return h;
}

AttentionConfig AttentionConfig::create(std::size_t dim, std::size_t heads, ParameterStore& store,
                                        std::mt19937_64& rng) {
    if (heads == 0 || dim % heads != 0)
        throw ConfigError("attention: " + std::to_string(heads) + " heads do not divide width " + std::to_string(dim));
    AttentionConfig c;
    c.heads = heads;
    const std::size_t head_dim = dim / heads;
    for (std::size_t h = 0; h < heads; ++h) {
        c.query.push_back(store.xavier("attention.query" + std::to_string(h), dim, head_dim, rng));
        c.key.push_back(store.xavier("attention.key" + std::to_string(h), dim, head_dim, rng));
    }
    return c;
}

Tensor attention_matrix(const Tensor& context, const AttentionConfig& config) {
    if (config.heads == 0 || config.query.size() != config.heads || config.key.size() != config.heads)
        throw ConfigError("attention: inconsistent head configuration");
    const double head_dim = static_cast<double>(config.query.front().cols());
    Tensor scores;
    for (std::size_t h = 0; h < config.heads; ++h) {
        Tensor s = matmul(matmul(context, config.query[h]), transpose(matmul(context, config.key[h])));
        scores = scores.defined() ? add(scores, s) : s;
    }
    return softmax_rows(scale(scores, 1.0 / (static_cast<double>(config.heads) * std::sqrt(head_dim))));
}

KnowledgeParams KnowledgeParams::create(std::size_t kge_width, std::size_t dim, std::size_t buckets,
                                        ParameterStore& store, std::mt19937_64& rng) {
    if (buckets == 0) throw ConfigError("knowledge: bucket count must be positive");
    KnowledgeParams p;
    p.buckets = buckets;
    if (kge_width > 0) p.projection = store.xavier("knowledge.projection", kge_width, dim, rng);
    p.bias = store.constant("knowledge.bias", {1, dim}, 0.0);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> init(buckets * dim);
    for (double& x : init) x = normal(rng);
    p.defaults = store.add("knowledge.defaults", Tensor({buckets, dim}, std::move(init)));
    return p;
}

Tensor knowledge_channel(const AspectInstance& instance, const KnowledgeParams& params) {
    if (!instance.knowledge.empty()) {
        const std::size_t width = instance.knowledge_width();
        for (const auto& row : instance.knowledge)
            if (row.size() != width) throw DataError("knowledge vectors have inconsistent widths");
        if (!params.projection.defined())
            throw DataError("instance carries knowledge vectors but the model has no knowledge projection");
        if (params.projection.rows() != width)
            throw DataError("knowledge width " + std::to_string(width) + " does not match the model's " +
                            std::to_string(params.projection.rows()));
        std::vector<double> flat;
        flat.reserve(instance.size() * width);
        for (const auto& row : instance.knowledge) flat.insert(flat.end(), row.begin(), row.end());
        return add_row(matmul(Tensor({instance.size(), width}, std::move(flat)), params.projection), params.bias);
    }
    std::vector<std::size_t> rows;
    rows.reserve(instance.size());
    for (const auto& t : instance.tokens) rows.push_back(fnv1a(t) % params.buckets);
    return gather_rows(params.defaults, rows);
}

}  // namespace emgf
