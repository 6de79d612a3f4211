#pragma once

#include <array>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "emgf/parameters.hpp"
#include "emgf/tensor.hpp"

namespace emgf {

enum class Channel { dep = 0, con = 1, sem = 2, kge = 3 };
inline constexpr std::size_t kNumChannels = 4;
inline constexpr std::array<Channel, kNumChannels> kAllChannels = {Channel::dep, Channel::con, Channel::sem, Channel::kge};

std::string channel_name(Channel c);
/// "dep,con" or "dep|con"; result is sorted, duplicates removed. Throws
/// ConfigError on unknown names or an empty set.
std::vector<Channel> parse_channels(const std::string& text);
std::string format_channels(std::span<const Channel> channels);

struct ChannelInput {
    Channel channel;
    Tensor features;  // n×d
};

struct EmsfBlock {
    std::array<Tensor, kNumChannels> maps;  // d×d_f per channel, indexed by Channel
    Tensor state_map;                       // d_f×d_f
    Tensor gain;                            // 1×d_f
    Tensor bias;                            // 1×d_f

    std::size_t factor_dim() const { return state_map.cols(); }
    static EmsfBlock create(std::size_t index, std::size_t dim, std::size_t factor_dim, ParameterStore& store,
                            std::mt19937_64& rng);
};

/// fused = affine(l2-normalized rows of the Hadamard product of every present
/// channel mapped to width d_f, times state·U_state when a state is given);
/// returns state + fused with a state, fused without.
Tensor emsf_block(const EmsfBlock& block, const std::optional<Tensor>& state, std::span<const ChannelInput> channels);

struct FusionState {
    std::vector<Tensor> block_outputs;  // Z^1 .. Z^l, each n×d_f
    Tensor r;                           // 1×d_f
};

/// Chains the blocks (each after the first receives the previous output as
/// its state), averages the block outputs, and pools the average with the
/// 1×n `pooling` row (aspect-row mean weights).
FusionState run_cascade(std::span<const EmsfBlock> blocks, std::span<const ChannelInput> channels, const Tensor& pooling);

/// 1×n row holding 1/|span| on aspect positions.
Tensor aspect_pooling(std::size_t n, std::size_t begin, std::size_t end);

}  // namespace emgf
