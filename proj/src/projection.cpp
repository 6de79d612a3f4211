#include "emgf/projection.hpp"

namespace emgf {

std::vector<double> project(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size())
        throw ShapeError("project: lengths " + std::to_string(x.size()) + " and " + std::to_string(y.size()));
    double xy = 0.0, yy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        xy += x[i] * y[i];
        yy += y[i] * y[i];
    }
    std::vector<double> out(y.size(), 0.0);
    if (yy < kDegenerateNorm * kDegenerateNorm) return out;
    for (std::size_t i = 0; i < y.size(); ++i) out[i] = xy / yy * y[i];
    return out;
}

Tensor project_rows(const Tensor& x, const Tensor& y) {
    if (x.shape() != y.shape())
        throw ShapeError("project_rows: " + shape_to_string(x.shape()) + " vs " + shape_to_string(y.shape()));
    const Tensor coef = mul(row_dot(x, y), safe_reciprocal(row_dot(y, y), kDegenerateNorm * kDegenerateNorm));
    return scale_rows(y, coef);
}

Tensor purify(const Tensor& h_syn, const Tensor& h_sem) {
    return project_rows(h_syn, sub(h_syn, project_rows(h_syn, h_sem)));
}

}  // namespace emgf
