#pragma once

#include <string>
#include <vector>

#include "emgf/grad_check.hpp"
#include "emgf/model.hpp"

namespace emgf {

struct GroupCheck {
    std::string group;
    std::size_t parameters = 0;
    double max_rel_error = 0.0;
    std::string worst_parameter;
    std::size_t worst_index = 0;
    double analytic = 0.0;
    double numeric = 0.0;
    double grad_norm = 0.0;          // of L_c + beta * L_triplet
    double triplet_grad_norm = 0.0;  // of beta * L_triplet alone
};

struct ModelCheckReport {
    std::vector<GroupCheck> groups;  // in parameter registration order
    std::vector<GradCheckEntry> parameters;
    double max_rel_error = 0.0;
    bool passed = true;
};

/// Finite-difference check of L_c + beta * L_triplet with respect to every
/// model parameter, in evaluation mode with anchors held at their initial
/// selection.
ModelCheckReport check_model_gradients(Model& model, const PreparedInstance& instance, double beta,
                                       const GradCheckOptions& options = {});

}  // namespace emgf
