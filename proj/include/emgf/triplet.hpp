#pragma once

#include <compare>
#include <span>
#include <string>
#include <vector>

#include "emgf/graph.hpp"
#include "emgf/tensor.hpp"

namespace emgf {

enum class View { con = 0, dep = 1 };

std::string view_name(View v);

/// One (view, token) position among the 2n nodes of the dual-view graph.
struct Slot {
    View view = View::con;
    std::size_t index = 0;

    friend auto operator<=>(const Slot&, const Slot&) = default;
};

/// Two graphs over the same tokens; token i in one view is homologous to
/// token i in the other.
struct DualViewGraph {
    Adjacency con;
    Adjacency dep;

    std::size_t size() const { return con.size(); }
    const Adjacency& view(View v) const { return v == View::con ? con : dep; }
};

/// Throws DataError unless both views have the same size and are symmetric
/// with unit diagonal.
void validate(const DualViewGraph& graph);

/// clamp(round(c * ln(n)^2), 1, n); requires n >= 1.
std::size_t anchor_count(std::size_t n, double c);

/// Row mean plus row max of each attention row.
std::vector<double> anchor_scores(const Tensor& a_sem);

/// Indices of the k largest scores, highest first; equal scores go to the
/// lower index.
std::vector<std::size_t> top_k(std::span<const double> scores, std::size_t k);

std::vector<std::size_t> select_anchors(const Tensor& a_sem, double c);

struct PosNeg {
    std::vector<Slot> pos;  // sorted
    std::vector<Slot> neg;  // sorted
};

PosNeg label_pos_neg(const DualViewGraph& graph, Slot anchor);

struct TripletSet {
    std::vector<Slot> anchors;
    std::vector<PosNeg> labels;  // parallel to anchors
    std::size_t k = 0;           // anchors per view
    double margin = 0.2;
};

/// Anchors are the given token indices in the con view followed by the same
/// indices in the dep view.
TripletSet build_triplets(const DualViewGraph& graph, std::span<const std::size_t> anchor_indices, double margin);

/// Sum over anchors of relu(mean pos distance - mean neg distance + margin),
/// with Euclidean distances between slot features; an empty set contributes
/// a zero mean.
Tensor triplet_loss(const Tensor& h_con, const Tensor& h_dep, const TripletSet& triplets);

}  // namespace emgf
