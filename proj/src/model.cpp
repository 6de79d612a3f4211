#include "emgf/model.hpp"

#include <algorithm>

#include "emgf/projection.hpp"

namespace emgf {

namespace {

EmbeddingProvider make_provider(const ModelConfig& c) {
    if (c.embedding_file.empty()) return EmbeddingProvider::hashed(c.dim, c.embedding_seed);
    auto p = EmbeddingProvider::from_file(c.embedding_file, c.embedding_seed);
    if (p.dim() != c.dim)
        throw ConfigError("embedding table width " + std::to_string(p.dim()) + " differs from model.dim " +
                          std::to_string(c.dim));
    return p;
}

}  // namespace

void ModelConfig::validate() const {
    auto positive = [](std::size_t v, const char* key) {
        if (v == 0) throw ConfigError(std::string(key) + " must be positive");
    };
    positive(dim, "model.dim");
    positive(heads, "model.heads");
    positive(dep_layers, "model.dep_layers");
    positive(con_layers, "model.con_layers");
    positive(sem_layers, "model.sem_layers");
    positive(kge_buckets, "model.kge_buckets");
    positive(fusion_blocks, "fusion.blocks");
    positive(factor_dim, "fusion.factor_dim");
    if (dim % heads != 0) throw ConfigError("model.heads must divide model.dim");
    if (channels.empty()) throw ConfigError("fusion.channels is empty");
    if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("model.dropout must lie in [0, 1)");
    if (!(margin >= 0.0)) throw ConfigError("triplet.margin must be non-negative");
    if (!(anchor_c > 0.0)) throw ConfigError("triplet.anchor_c must be positive");
}

std::size_t ForwardResult::predicted() const {
    const auto p = probs.data();
    return static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
}

Tensor classify(const Tensor& r, const Tensor& w, const Tensor& b) { return softmax_rows(add_row(matmul(r, w), b)); }

Tensor class_loss(const Tensor& probs, std::size_t gold) { return scale(log_clamped(pick(probs, 0, gold), 1e-12), -1.0); }

Model::Model(ModelConfig config, std::uint64_t seed) : config_(std::move(config)) {
    config_.validate();
    embeddings_ = make_provider(config_);
    std::mt19937_64 rng(seed);
    const std::size_t d = config_.dim;
    marker_ = store_.add("context.marker", Tensor::zeros({1, d}));
    std::normal_distribution<double> normal(0.0, 1.0);
    for (double& x : marker_.data()) x = normal(rng);
    attention_ = AttentionConfig::create(d, config_.heads, store_, rng);
    dep_ = GcnStack::create(GcnKind::dep, config_.dep_layers, d, "dep", store_, rng);
    con_ = GcnStack::create(GcnKind::con, config_.con_layers, d, "con", store_, rng);
    sem_ = GcnStack::create(GcnKind::sem, config_.sem_layers, d, "sem", store_, rng);
    knowledge_ = KnowledgeParams::create(config_.kge_width, d, config_.kge_buckets, store_, rng);
    for (std::size_t i = 0; i < config_.fusion_blocks; ++i)
        blocks_.push_back(EmsfBlock::create(i, d, config_.factor_dim, store_, rng));
    classifier_w_ = store_.xavier("classifier.W", config_.factor_dim, kNumClasses, rng);
    classifier_b_ = store_.constant("classifier.b", {1, kNumClasses}, 0.0);
}

PreparedInstance Model::prepare(const AspectInstance& instance) const {
    const ParsedInstance parsed = parse_structures(instance);
    if (instance.knowledge_width() != 0 && instance.knowledge_width() != config_.kge_width)
        throw DataError("instance knowledge width " + std::to_string(instance.knowledge_width()) +
                        " does not match model.kge_width " + std::to_string(config_.kge_width));
    PreparedInstance p;
    p.source = instance;
    p.embeddings = embeddings_.embed(instance.tokens);
    p.dep_adjacency = parsed.dep.to_tensor();
    const ConGraphStack stack = build_con_stack(parsed.tree, config_.con_layers);
    for (const Adjacency& a : stack.slices) p.con_slices.push_back(a.to_tensor());
    p.views = DualViewGraph{stack.slices.front(), parsed.dep};
    p.pooling = aspect_pooling(instance.size(), instance.aspect.begin, instance.aspect.end);
    p.gold = static_cast<std::size_t>(instance.polarity);
    return p;
}

std::vector<PreparedInstance> Model::prepare(const std::vector<AspectInstance>& instances) const {
    std::vector<PreparedInstance> out;
    out.reserve(instances.size());
    for (std::size_t i = 0; i < instances.size(); ++i) {
        try {
            out.push_back(prepare(instances[i]));
        } catch (const DataError& e) {
            throw DataError("instance " + std::to_string(i) + ": " + e.what());
        }
    }
    return out;
}

Tensor Model::semantic_attention(const PreparedInstance& inst) const {
    return attention_matrix(encode_tokens(inst.embeddings, inst.source.aspect, marker_), attention_);
}

ForwardResult Model::forward(const PreparedInstance& inst, const ForwardOptions& options) const {
    if (options.train && options.rng == nullptr) throw ConfigError("forward: training mode needs a dropout stream");
    ForwardResult out;
    Tensor ctx = encode_tokens(inst.embeddings, inst.source.aspect, marker_);
    if (options.train) ctx = dropout(ctx, config_.dropout, *options.rng, true);

    const Tensor a_sem = attention_matrix(ctx, attention_);
    const Tensor dep_adj[] = {inst.dep_adjacency};
    const Tensor sem_adj[] = {a_sem};
    const Tensor h_dep = gcn_forward(ctx, dep_adj, dep_);
    const Tensor h_con = gcn_forward(ctx, inst.con_slices, con_);
    const Tensor h_sem = gcn_forward(ctx, sem_adj, sem_);

    if (options.triplet) {
        out.anchors = options.anchors ? *options.anchors : select_anchors(a_sem, config_.anchor_c);
        out.triplet = triplet_loss(h_con, h_dep, build_triplets(inst.views, out.anchors, config_.margin));
    } else {
        out.triplet = Tensor::scalar(0.0);
    }

    std::vector<ChannelInput> channels;
    for (Channel c : config_.channels) {
        switch (c) {
        case Channel::dep: channels.push_back({c, purify(h_dep, h_sem)}); break;
        case Channel::con: channels.push_back({c, purify(h_con, h_sem)}); break;
        case Channel::sem: channels.push_back({c, h_sem}); break;
        case Channel::kge: channels.push_back({c, knowledge_channel(inst.source, knowledge_)}); break;
        }
    }
    out.fusion = run_cascade(blocks_, channels, inst.pooling);
    out.logits = add_row(matmul(out.fusion.r, classifier_w_), classifier_b_);
    out.probs = softmax_rows(out.logits);
    out.class_loss = class_loss(out.probs, inst.gold);
    return out;
}

}  // namespace emgf
