#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "emgf/tensor.hpp"

namespace emgf {

struct GradCheckOptions {
    double eps = 1e-5;
    double tolerance = 1e-4;
    /// Denominator floor of the relative error, so that components whose true
    /// gradient is ~0 are judged on absolute error instead of amplified noise.
    double magnitude_floor = 1e-6;
};

struct GradCheckEntry {
    std::string name;
    std::size_t worst_index = 0;
    double analytic = 0.0;
    double numeric = 0.0;
    double max_rel_error = 0.0;
};

struct GradCheckReport {
    std::vector<GradCheckEntry> inputs;
    double max_rel_error = 0.0;
    bool passed = true;
};

/// |a - n| / max(|a|, |n|, floor)
double relative_error(double analytic, double numeric, double floor);

/// Compares the tape gradient of the scalar `f` w.r.t. every entry of every
/// input against central differences (f(x+eps) - f(x-eps)) / (2 eps).
/// `f` must rebuild its graph from the inputs on each call and be deterministic.
/// Inputs are restored to their original values on return.
GradCheckReport grad_check(const std::function<Tensor()>& f, std::span<Tensor> inputs,
                           const GradCheckOptions& options = {},
                           std::span<const std::string> names = {});

}  // namespace emgf
