#include "emgf/grad_check.hpp"

#include <algorithm>
#include <cmath>

namespace emgf {

double relative_error(double analytic, double numeric, double floor) {
    const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
    return std::abs(analytic - numeric) / denom;
}

GradCheckReport grad_check(const std::function<Tensor()>& f, std::span<Tensor> inputs,
                           const GradCheckOptions& options, std::span<const std::string> names) {
    std::vector<bool> saved_flags;
    for (Tensor& t : inputs) {
        saved_flags.push_back(t.requires_grad());
        t.set_requires_grad(true);
        t.zero_grad();
    }

    {
        Tape tape;
        Tape::Scope scope(tape);
        Tensor out = f();
        if (out.size() != 1)
            throw ShapeError("grad_check: function output must be scalar, got " + shape_to_string(out.shape()));
        tape.backward(out);
    }

    std::vector<std::vector<double>> analytic;
    for (Tensor& t : inputs) analytic.emplace_back(t.grad().begin(), t.grad().end());

    auto evaluate = [&f] {
        Tape::NoGrad no_grad;
        return f().item();
    };

    GradCheckReport report;
    for (std::size_t k = 0; k < inputs.size(); ++k) {
        GradCheckEntry entry;
        entry.name = k < names.size() ? names[k] : "input" + std::to_string(k);
        auto values = inputs[k].data();
        for (std::size_t i = 0; i < values.size(); ++i) {
            const double original = values[i];
            values[i] = original + options.eps;
            const double plus = evaluate();
            values[i] = original - options.eps;
            const double minus = evaluate();
            values[i] = original;
            const double numeric = (plus - minus) / (2.0 * options.eps);
            const double err = relative_error(analytic[k][i], numeric, options.magnitude_floor);
            if (err > entry.max_rel_error || i == 0) {
                entry.max_rel_error = std::max(err, entry.max_rel_error);
                entry.worst_index = i;
                entry.analytic = analytic[k][i];
                entry.numeric = numeric;
            }
        }
        report.max_rel_error = std::max(report.max_rel_error, entry.max_rel_error);
        report.inputs.push_back(std::move(entry));
    }
    report.passed = report.max_rel_error < options.tolerance;

    for (std::size_t k = 0; k < inputs.size(); ++k) {
        inputs[k].zero_grad();
        if (!saved_flags[k]) inputs[k].set_requires_grad(false);
    }
    return report;
}

}  // namespace emgf
