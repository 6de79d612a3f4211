#pragma once

#include <span>
#include <vector>

#include "emgf/tensor.hpp"

namespace emgf {

/// Directions shorter than this are treated as degenerate.
inline constexpr double kDegenerateNorm = 1e-12;

/// Component of x along y; the zero vector when |y| < kDegenerateNorm.
std::vector<double> project(std::span<const double> x, std::span<const double> y);

/// Row-wise project() on two m×n tensors, differentiable in both.
Tensor project_rows(const Tensor& x, const Tensor& y);

/// Row-wise project(x, x - project(x, y)): the part of each syntactic row that
/// is orthogonal to the matching semantic row.
Tensor purify(const Tensor& h_syn, const Tensor& h_sem);

}  // namespace emgf
