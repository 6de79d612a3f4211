#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "emgf/graph.hpp"

namespace emgf {

inline constexpr std::size_t kNoParent = std::numeric_limits<std::size_t>::max();

struct ConNode {
    std::string label;  // phrase label, or the word itself for leaves
    bool is_word = false;
    std::size_t parent = kNoParent;
    std::vector<std::size_t> children;
    std::size_t begin = 0;  // token span [begin, end)
    std::size_t end = 0;
    std::size_t height = 0;  // words are 0; phrases are 1 + max child height
};

/// A phrase-structure tree stored as a flat node arena. Node 0 is the root.
class ConTree {
public:
    const ConNode& node(std::size_t i) const { return nodes_[i]; }
    const ConNode& root() const { return nodes_.front(); }
    std::size_t node_count() const { return nodes_.size(); }
    std::size_t token_count() const { return words_.size(); }
    std::size_t height() const { return root().height; }
    /// Node index of the i-th word.
    std::size_t word_node(std::size_t token) const { return words_[token]; }

    std::vector<std::string> leaves() const;
    /// PTB bracket form, single spaces between children.
    std::string to_string() const;

    friend bool operator==(const ConTree& a, const ConTree& b);
    friend ConTree parse_bracketed(std::string_view text);

private:
    std::vector<ConNode> nodes_;
    std::vector<std::size_t> words_;
};

bool operator==(const ConTree& a, const ConTree& b);

/// Parses a PTB-style bracketed tree, e.g. "(S (NP Looks) (VP nice))".
/// Throws DataError on unbalanced brackets or trailing input.
ConTree parse_bracketed(std::string_view text);

/// Parses and checks that the leaves equal `tokens`; a mismatch names the
/// first divergent position.
ConTree parse_bracketed(std::string_view text, std::span<const std::string> tokens);

/// Token partition at one tree level: tokens i and j are linked when their
/// highest ancestor of height <= level is the same node. Level 0 gives the
/// identity; any level >= height() gives all ones.
Adjacency phrase_partition(const ConTree& tree, std::size_t level);

/// Levels 1, 3, 5, ... counted up from the leaves' parents, clamped at the
/// root so a shallow tree repeats its root level.
std::vector<std::size_t> select_levels(const ConTree& tree, std::size_t count);

struct ConGraphStack {
    std::vector<Adjacency> slices;  // bottom-up: slices[0] is the finest
    std::vector<std::size_t> levels;
};

ConGraphStack build_con_stack(const ConTree& tree, std::size_t count);

}  // namespace emgf
