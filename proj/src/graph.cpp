#include "emgf/graph.hpp"

#include <string>

#include "emgf/errors.hpp"

namespace emgf {

std::size_t Adjacency::count() const {
    std::size_t c = 0;
    for (auto v : cells_) c += v;
    return c;
}

std::size_t Adjacency::degree(std::size_t i) const {
    std::size_t d = 0;
    for (std::size_t j = 0; j < n_; ++j) d += cells_[i * n_ + j];
    return d;
}

bool Adjacency::symmetric() const {
    for (std::size_t i = 0; i < n_; ++i)
        for (std::size_t j = i + 1; j < n_; ++j)
            if (at(i, j) != at(j, i)) return false;
    return true;
}

Tensor Adjacency::to_tensor() const {
    std::vector<double> data(cells_.begin(), cells_.end());
    return Tensor({n_, n_}, std::move(data));
}

Tensor Adjacency::row_normalized() const {
    Tensor t = to_tensor();
    for (std::size_t i = 0; i < n_; ++i) {
        const std::size_t d = degree(i);
        if (d == 0) continue;
        for (std::size_t j = 0; j < n_; ++j) t.at(i, j) /= static_cast<double>(d);
    }
    return t;
}

void validate_dep_heads(std::span<const std::size_t> heads) {
    const std::size_t n = heads.size();
    if (n == 0) throw DataError("dep_heads: empty");
    std::size_t roots = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (heads[i] > n)
            throw DataError("dep_heads: token " + std::to_string(i) + " has head " + std::to_string(heads[i]) +
                            " beyond sentence length " + std::to_string(n));
        if (heads[i] == i + 1) throw DataError("dep_heads: token " + std::to_string(i) + " is its own head");
        if (heads[i] == 0) ++roots;
    }
    if (roots != 1) throw DataError("dep_heads: expected exactly one root, found " + std::to_string(roots));
    // Every token must reach the root within n steps.
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t cur = i, steps = 0;
        while (heads[cur] != 0) {
            cur = heads[cur] - 1;
            if (++steps > n) throw DataError("dep_heads: cycle through token " + std::to_string(i));
        }
    }
}

Adjacency build_dep_adj(std::span<const std::size_t> heads) {
    validate_dep_heads(heads);
    Adjacency adj(heads.size());
    for (std::size_t i = 0; i < heads.size(); ++i) {
        adj.set(i, i);
        if (heads[i] != 0) adj.link(i, heads[i] - 1);
    }
    return adj;
}

}  // namespace emgf
