#include "emgf/triplet.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace emgf {

std::string view_name(View v) { return v == View::con ? "con" : "dep"; }

void validate(const DualViewGraph& graph) {
    if (graph.con.size() != graph.dep.size())
        throw DataError("dual-view graph: con has " + std::to_string(graph.con.size()) + " nodes, dep has " +
                        std::to_string(graph.dep.size()));
    for (View v : {View::con, View::dep}) {
        const Adjacency& a = graph.view(v);
        if (!a.symmetric()) throw DataError("dual-view graph: " + view_name(v) + " view is not symmetric");
        for (std::size_t i = 0; i < a.size(); ++i)
            if (!a.at(i, i)) throw DataError("dual-view graph: " + view_name(v) + " view lacks self-loop " + std::to_string(i));
    }
}

std::size_t anchor_count(std::size_t n, double c) {
    if (n == 0) throw DataError("anchor selection on an empty sentence");
    const double ln = std::log(static_cast<double>(n));
    const long k = std::lround(c * ln * ln);
    return static_cast<std::size_t>(std::clamp<long>(k, 1, static_cast<long>(n)));
}

std::vector<double> anchor_scores(const Tensor& a_sem) {
    const std::size_t n = a_sem.rows();
    if (n == 0) throw DataError("anchor selection on an empty sentence");
    if (a_sem.cols() != n) throw ShapeError("anchor_scores: attention matrix " + shape_to_string(a_sem.shape()));
    std::vector<double> scores(n);
    for (std::size_t i = 0; i < n; ++i) {
        double total = 0.0, best = a_sem.at(i, 0);
        for (std::size_t j = 0; j < n; ++j) {
            total += a_sem.at(i, j);
            best = std::max(best, a_sem.at(i, j));
        }
        scores[i] = total / static_cast<double>(n) + best;
    }
    return scores;
}

std::vector<std::size_t> top_k(std::span<const double> scores, std::size_t k) {
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    k = std::min(k, order.size());
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                      [&](std::size_t a, std::size_t b) { return scores[a] > scores[b] || (scores[a] == scores[b] && a < b); });
    order.resize(k);
    return order;
}

std::vector<std::size_t> select_anchors(const Tensor& a_sem, double c) {
    const auto scores = anchor_scores(a_sem);
    return top_k(scores, anchor_count(scores.size(), c));
}

PosNeg label_pos_neg(const DualViewGraph& graph, Slot anchor) {
    const std::size_t n = graph.size();
    if (anchor.index >= n)
        throw DataError("anchor index " + std::to_string(anchor.index) + " out of range for " + std::to_string(n) + " tokens");
    const Adjacency& own = graph.view(anchor.view);

    std::vector<bool> pos_token(n, false);
    pos_token[anchor.index] = true;
    for (std::size_t j = 0; j < n; ++j)
        if (own.at(anchor.index, j)) pos_token[j] = true;

    PosNeg out;
    for (View v : {View::con, View::dep})
        for (std::size_t j = 0; j < n; ++j) {
            const Slot s{v, j};
            if (s == anchor) continue;
            (pos_token[j] ? out.pos : out.neg).push_back(s);
        }
    return out;
}

TripletSet build_triplets(const DualViewGraph& graph, std::span<const std::size_t> anchor_indices, double margin) {
    TripletSet t;
    t.k = anchor_indices.size();
    t.margin = margin;
    for (View v : {View::con, View::dep})
        for (std::size_t i : anchor_indices) {
            t.anchors.push_back({v, i});
            t.labels.push_back(label_pos_neg(graph, {v, i}));
        }
    return t;
}

namespace {

std::size_t slot_row(Slot s, std::size_t n) { return static_cast<std::size_t>(s.view) * n + s.index; }

// Per-anchor mean distance to one of its labeled sets, as a K×1 column.
Tensor mean_distances(const Tensor& features, std::size_t n, const TripletSet& t, bool positive) {
    const std::size_t anchors = t.anchors.size();
    std::vector<std::size_t> left, right;
    std::vector<std::size_t> owner;
    for (std::size_t a = 0; a < anchors; ++a)
        for (Slot s : positive ? t.labels[a].pos : t.labels[a].neg) {
            left.push_back(slot_row(t.anchors[a], n));
            right.push_back(slot_row(s, n));
            owner.push_back(a);
        }
    if (left.empty()) return Tensor::zeros({anchors, 1});
    std::vector<double> counts(anchors, 0.0);
    for (std::size_t a : owner) counts[a] += 1.0;
    Tensor averaging = Tensor::zeros({anchors, left.size()});
    for (std::size_t p = 0; p < owner.size(); ++p) averaging.at(owner[p], p) = 1.0 / counts[owner[p]];
    const Tensor dist = l2norm_rows(sub(gather_rows(features, left), gather_rows(features, right)));
    return matmul(averaging, dist);
}

}  // namespace

Tensor triplet_loss(const Tensor& h_con, const Tensor& h_dep, const TripletSet& triplets) {
    if (h_con.shape() != h_dep.shape())
        throw ShapeError("triplet_loss: " + shape_to_string(h_con.shape()) + " vs " + shape_to_string(h_dep.shape()));
    if (triplets.anchors.empty()) return Tensor::scalar(0.0);
    const std::size_t n = h_con.rows();
    const Tensor features = concat_rows(h_con, h_dep);
    const Tensor pos = mean_distances(features, n, triplets, true);
    const Tensor neg = mean_distances(features, n, triplets, false);
    return sum(relu(add_scalar(sub(pos, neg), triplets.margin)));
}

}  // namespace emgf
