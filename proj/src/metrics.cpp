#include "emgf/metrics.hpp"

#include <cstdio>

namespace emgf {

EvalReport report_from_confusion(const Confusion& confusion) {
    EvalReport r;
    r.confusion = confusion;
    std::size_t correct = 0;
    for (std::size_t g = 0; g < kNumClasses; ++g)
        for (std::size_t p = 0; p < kNumClasses; ++p) {
            r.total += confusion[g][p];
            if (g == p) correct += confusion[g][p];
        }
    if (r.total == 0) throw DataError("cannot score an empty evaluation set");
    r.accuracy = static_cast<double>(correct) / static_cast<double>(r.total);
    double f1_sum = 0.0;
    for (std::size_t c = 0; c < kNumClasses; ++c) {
        std::size_t predicted = 0, support = 0;
        for (std::size_t k = 0; k < kNumClasses; ++k) {
            predicted += confusion[k][c];
            support += confusion[c][k];
        }
        const double tp = static_cast<double>(confusion[c][c]);
        ClassScores& s = r.per_class[c];
        s.support = support;
        s.precision = predicted ? tp / static_cast<double>(predicted) : 0.0;
        s.recall = support ? tp / static_cast<double>(support) : 0.0;
        s.f1 = s.precision + s.recall > 0.0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
        f1_sum += s.f1;
    }
    r.macro_f1 = f1_sum / static_cast<double>(kNumClasses);
    return r;
}

Confusion merge(const Confusion& a, const Confusion& b) {
    Confusion out{};
    for (std::size_t g = 0; g < kNumClasses; ++g)
        for (std::size_t p = 0; p < kNumClasses; ++p) out[g][p] = a[g][p] + b[g][p];
    return out;
}

std::string EvalReport::to_string() const {
    char buf[160];
    std::string out;
    std::snprintf(buf, sizeof buf, "instances %zu  accuracy %.4f  macro_f1 %.4f\n", total, accuracy, macro_f1);
    out += buf;
    out += "class       precision  recall  f1      support\n";
    for (std::size_t c = 0; c < kNumClasses; ++c) {
        const auto& s = per_class[c];
        std::snprintf(buf, sizeof buf, "%-10s  %.4f     %.4f  %.4f  %zu\n",
                      std::string(polarity_name(static_cast<Polarity>(c))).c_str(), s.precision, s.recall, s.f1, s.support);
        out += buf;
    }
    out += "confusion (rows gold, cols predicted)\n";
    for (std::size_t g = 0; g < kNumClasses; ++g) {
        std::snprintf(buf, sizeof buf, "  %6zu %6zu %6zu\n", confusion[g][0], confusion[g][1], confusion[g][2]);
        out += buf;
    }
    return out;
}

}  // namespace emgf
