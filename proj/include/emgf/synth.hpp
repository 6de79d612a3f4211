#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "emgf/dataset.hpp"

namespace emgf {

struct SynthOptions {
    std::size_t instances = 64;
    std::size_t vocab = 50;  // words per lexicon
    std::uint64_t seed = 0;
    bool knowledge = false;  // attach 4-wide lexicon-category vectors
    bool compact = false;    // fixed 6-token sentences
};

inline constexpr std::size_t kSynthKnowledgeWidth = 4;

/// Two-clause sentences "A op , but has a op' A' ." in which each aspect heads
/// its own clause's opinion word. The label is the lexicon class of the
/// opinion word in the target aspect's clause; the other clause always
/// carries a different class.
std::vector<AspectInstance> synthesize(const SynthOptions& options);

/// Lexicon class of a generated opinion word ("pos3" -> positive).
std::optional<Polarity> lexicon_class(std::string_view token);

}  // namespace emgf
