#pragma once

// Generators shared by the unit and acceptance suites.

#include <algorithm>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "emgf/con_tree.hpp"
#include "emgf/dataset.hpp"
#include "emgf/graph.hpp"
#include "emgf/triplet.hpp"

namespace emgf::testing {

/// Random PTB-style tree over words w0..w{n-1} with random fan-out and unary
/// chains, so subtrees have uneven heights.
inline std::string random_tree_string(std::size_t n, std::mt19937_64& rng) {
    static const char* labels[] = {"S", "NP", "VP", "PP", "ADJP", "SBAR", "NN", "JJ"};
    std::uniform_int_distribution<int> pick_label(0, 7);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto build = [&](auto&& self, std::size_t begin, std::size_t end) -> std::string {
        std::string inner;
        if (end - begin == 1) {
            inner = "w" + std::to_string(begin);
            if (unit(rng) < 0.3) return inner;  // bare word directly under its parent
        } else {
            std::size_t parts = std::uniform_int_distribution<std::size_t>(2, std::min<std::size_t>(4, end - begin))(rng);
            std::vector<std::size_t> cuts;
            std::vector<std::size_t> pool;
            for (std::size_t c = begin + 1; c < end; ++c) pool.push_back(c);
            std::shuffle(pool.begin(), pool.end(), rng);
            cuts.assign(pool.begin(), pool.begin() + (parts - 1));
            std::sort(cuts.begin(), cuts.end());
            cuts.push_back(end);
            std::size_t prev = begin;
            for (std::size_t c : cuts) {
                if (!inner.empty()) inner += ' ';
                inner += self(self, prev, c);
                prev = c;
            }
        }
        std::string node = std::string("(") + labels[pick_label(rng)] + " " + inner + ")";
        while (unit(rng) < 0.25) node = std::string("(") + labels[pick_label(rng)] + " " + node + ")";
        return node;
    };
    std::string tree = build(build, 0, n);
    if (tree.front() != '(') tree = "(S " + tree + ")";
    return tree;
}

inline std::vector<std::string> word_tokens(std::size_t n) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back("w" + std::to_string(i));
    return out;
}

/// Random symmetric 0/1 matrix with unit diagonal.
inline Adjacency random_symmetric(std::size_t n, double density, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Adjacency a(n);
    for (std::size_t i = 0; i < n; ++i) {
        a.set(i, i);
        for (std::size_t j = i + 1; j < n; ++j)
            if (unit(rng) < density) a.link(i, j);
    }
    return a;
}

/// Equivalence-relation check by brute force over all triples.
inline bool is_equivalence(const Adjacency& a) {
    const std::size_t n = a.size();
    for (std::size_t i = 0; i < n; ++i) {
        if (!a.at(i, i)) return false;
        for (std::size_t j = 0; j < n; ++j) {
            if (a.at(i, j) != a.at(j, i)) return false;
            for (std::size_t k = 0; k < n; ++k)
                if (a.at(i, j) && a.at(j, k) && !a.at(i, k)) return false;
        }
    }
    return true;
}

inline bool refines(const Adjacency& fine, const Adjacency& coarse) {
    for (std::size_t i = 0; i < fine.size(); ++i)
        for (std::size_t j = 0; j < fine.size(); ++j)
            if (fine.at(i, j) && !coarse.at(i, j)) return false;
    return true;
}

/// Classifies every non-anchor slot by asking the three labeling scenarios
/// in turn: a same-view neighbor, the anchor's own homologue, or the homologue
/// of a same-view neighbor is pos; anything else is neg.
inline std::pair<std::set<Slot>, std::set<Slot>> enumerate_scenarios(const DualViewGraph& g, Slot anchor) {
    std::set<Slot> pos, neg;
    const Adjacency& own = anchor.view == View::con ? g.con : g.dep;
    for (View v : {View::con, View::dep})
        for (std::size_t j = 0; j < g.size(); ++j) {
            const Slot s{v, j};
            if (s == anchor) continue;
            const bool same_view = s.view == anchor.view;
            const bool connected = same_view && own.at(anchor.index, j);
            const bool homologous = !same_view && j == anchor.index;
            const bool homolog_of_neighbor = !same_view && own.at(anchor.index, j);
            (connected || homologous || homolog_of_neighbor ? pos : neg).insert(s);
        }
    return {pos, neg};
}

/// Hand parse of "Looks nice , but has a horribly cheap feel ." with the
/// clause split at "but".
inline const char* kLooksNiceTree =
    "(S (S (NP (NNS Looks)) (ADJP (JJ nice))) (, ,) (CC but) "
    "(VP (VBZ has) (NP (DT a) (ADJP (RB horribly) (JJ cheap)) (NN feel))) (. .))";

inline std::vector<std::string> looks_nice_tokens() {
    return {"Looks", "nice", ",", "but", "has", "a", "horribly", "cheap", "feel", "."};
}

}  // namespace emgf::testing
