#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "emgf/tensor.hpp"

namespace emgf {

/// Square 0/1 matrix over token indices.
class Adjacency {
public:
    Adjacency() = default;
    explicit Adjacency(std::size_t n) : n_(n), cells_(n * n, 0) {}

    std::size_t size() const { return n_; }
    bool at(std::size_t i, std::size_t j) const { return cells_[i * n_ + j] != 0; }
    void set(std::size_t i, std::size_t j, bool on = true) { cells_[i * n_ + j] = on ? 1 : 0; }
    void link(std::size_t i, std::size_t j) {
        set(i, j);
        set(j, i);
    }

    std::size_t count() const;
    std::size_t degree(std::size_t i) const;
    bool symmetric() const;

    /// Constant n×n tensor of the 0/1 entries.
    Tensor to_tensor() const;
    /// Constant n×n tensor with each row divided by its degree (rows of
    /// all zeros stay zero).
    Tensor row_normalized() const;

    friend bool operator==(const Adjacency&, const Adjacency&) = default;

private:
    std::size_t n_ = 0;
    std::vector<std::uint8_t> cells_;
};

/// Throws DataError unless `heads` (1-based, 0 = root) is a single-rooted
/// tree over its tokens.
void validate_dep_heads(std::span<const std::size_t> heads);

/// Undirected dependency adjacency with self-loops.
Adjacency build_dep_adj(std::span<const std::size_t> heads);

}  // namespace emgf
