#pragma once

#include <array>
#include <cstddef>
#include <string>

#include "emgf/dataset.hpp"

namespace emgf {

/// confusion[gold][predicted]
using Confusion = std::array<std::array<std::size_t, kNumClasses>, kNumClasses>;

struct ClassScores {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::size_t support = 0;
};

struct EvalReport {
    Confusion confusion{};
    std::size_t total = 0;
    double accuracy = 0.0;
    double macro_f1 = 0.0;
    std::array<ClassScores, kNumClasses> per_class{};

    /// Multi-line human-readable table.
    std::string to_string() const;
};

/// Scores with 0/0 taken as 0. Throws DataError on an empty matrix.
EvalReport report_from_confusion(const Confusion& confusion);

/// Element-wise sum of two confusion matrices.
Confusion merge(const Confusion& a, const Confusion& b);

}  // namespace emgf
