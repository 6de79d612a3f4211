#include "emgf/model_check.hpp"

#include <cmath>

namespace emgf {

namespace {

GroupCheck& group_for(std::vector<GroupCheck>& groups, const std::string& name) {
    const std::string g = parameter_group(name);
    for (auto& existing : groups)
        if (existing.group == g) return existing;
    groups.push_back({});
    groups.back().group = g;
    return groups.back();
}

double norm(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

}  // namespace

ModelCheckReport check_model_gradients(Model& model, const PreparedInstance& instance, double beta,
                                       const GradCheckOptions& options) {
    ForwardOptions fwd;
    {
        Tape::NoGrad no_grad;
        fwd.anchors = model.forward(instance).anchors;
    }
    auto loss = [&] {
        const auto out = model.forward(instance, fwd);
        return add(out.class_loss, scale(out.triplet, beta));
    };

    ModelCheckReport report;
    auto& params = model.parameters().all();

    model.parameters().zero_grad();
    {
        Tape tape;
        Tensor t;
        {
            Tape::Scope scope(tape);
            t = scale(model.forward(instance, fwd).triplet, beta);
        }
        tape.backward(t);
    }
    for (const auto& p : params) {
        GroupCheck& g = group_for(report.groups, p.name);
        g.triplet_grad_norm = std::hypot(g.triplet_grad_norm, norm(p.value.grad()));
    }

    model.parameters().zero_grad();
    {
        Tape tape;
        Tensor t;
        {
            Tape::Scope scope(tape);
            t = loss();
        }
        tape.backward(t);
    }
    for (const auto& p : params) {
        GroupCheck& g = group_for(report.groups, p.name);
        g.grad_norm = std::hypot(g.grad_norm, norm(p.value.grad()));
    }

    std::vector<Tensor> inputs;
    std::vector<std::string> names;
    for (const auto& p : params) {
        inputs.push_back(p.value);
        names.push_back(p.name);
    }
    const GradCheckReport fd = grad_check(loss, inputs, options, names);
    for (const auto& entry : fd.inputs) {
        GroupCheck& g = group_for(report.groups, entry.name);
        g.parameters += 1;
        if (entry.max_rel_error >= g.max_rel_error) {
            g.max_rel_error = entry.max_rel_error;
            g.worst_parameter = entry.name;
            g.worst_index = entry.worst_index;
            g.analytic = entry.analytic;
            g.numeric = entry.numeric;
        }
    }
    report.parameters = fd.inputs;
    report.max_rel_error = fd.max_rel_error;
    report.passed = fd.passed;
    return report;
}

}  // namespace emgf
