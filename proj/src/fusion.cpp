#include "emgf/fusion.hpp"

#include <algorithm>
#include <sstream>

namespace emgf {

std::string channel_name(Channel c) {
    switch (c) {
    case Channel::dep: return "dep";
    case Channel::con: return "con";
    case Channel::sem: return "sem";
    case Channel::kge: return "kge";
    }
    return "?";
}

std::vector<Channel> parse_channels(const std::string& text) {
    std::vector<Channel> out;
    std::string item;
    std::string normalized = text;
    std::replace(normalized.begin(), normalized.end(), '|', ',');
    std::istringstream in(normalized);
    while (std::getline(in, item, ',')) {
        item.erase(0, item.find_first_not_of(" \t"));
        item.erase(item.find_last_not_of(" \t") + 1);
        if (item.empty()) continue;
        auto it = std::find_if(kAllChannels.begin(), kAllChannels.end(), [&](Channel c) { return channel_name(c) == item; });
        if (it == kAllChannels.end()) throw ConfigError("unknown channel '" + item + "' (expected dep, con, sem, kge)");
        out.push_back(*it);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    if (out.empty()) throw ConfigError("channel set is empty");
    return out;
}

std::string format_channels(std::span<const Channel> channels) {
    std::string out;
    for (Channel c : channels) {
        if (!out.empty()) out += ',';
        out += channel_name(c);
    }
    return out;
}

EmsfBlock EmsfBlock::create(std::size_t index, std::size_t dim, std::size_t factor_dim, ParameterStore& store,
                            std::mt19937_64& rng) {
    EmsfBlock b;
    const std::string prefix = "fusion.block" + std::to_string(index) + ".";
    for (Channel c : kAllChannels)
        b.maps[static_cast<std::size_t>(c)] = store.xavier(prefix + "U_" + channel_name(c), dim, factor_dim, rng);
    b.state_map = store.xavier(prefix + "U_state", factor_dim, factor_dim, rng);
    b.gain = store.constant(prefix + "gain", {1, factor_dim}, 1.0);
    b.bias = store.constant(prefix + "bias", {1, factor_dim}, 0.0);
    return b;
}

Tensor emsf_block(const EmsfBlock& block, const std::optional<Tensor>& state, std::span<const ChannelInput> channels) {
    if (channels.empty()) throw ConfigError("emsf_block: no channels");
    Tensor product;
    for (const ChannelInput& ch : channels) {
        const Tensor& map = block.maps[static_cast<std::size_t>(ch.channel)];
        if (ch.features.cols() != map.rows())
            throw ShapeError("emsf_block: " + channel_name(ch.channel) + " features " +
                             shape_to_string(ch.features.shape()) + " vs map " + shape_to_string(map.shape()));
        const Tensor factor = matmul(ch.features, map);
        product = product.defined() ? mul(product, factor) : factor;
    }
    if (state) product = mul(product, matmul(*state, block.state_map));
    const Tensor normalized = scale_rows(product, safe_reciprocal(l2norm_rows(product), 1e-12));
    const Tensor fused = add_row(scale_cols(normalized, block.gain), block.bias);
    return state ? add(*state, fused) : fused;
}

FusionState run_cascade(std::span<const EmsfBlock> blocks, std::span<const ChannelInput> channels, const Tensor& pooling) {
    if (blocks.empty()) throw ConfigError("run_cascade: at least one block is required");
    FusionState out;
    std::optional<Tensor> state;
    Tensor total;
    for (const EmsfBlock& b : blocks) {
        state = emsf_block(b, state, channels);
        out.block_outputs.push_back(*state);
        total = total.defined() ? add(total, *state) : *state;
    }
    out.r = matmul(pooling, scale(total, 1.0 / static_cast<double>(blocks.size())));
    return out;
}

Tensor aspect_pooling(std::size_t n, std::size_t begin, std::size_t end) {
    if (begin >= end || end > n)
        throw DataError("aspect span [" + std::to_string(begin) + ", " + std::to_string(end) + ") invalid for " +
                        std::to_string(n) + " tokens");
    Tensor p = Tensor::zeros({1, n});
    for (std::size_t i = begin; i < end; ++i) p.at(0, i) = 1.0 / static_cast<double>(end - begin);
    return p;
}

}  // namespace emgf
