// Acceptance suite: one PASS/FAIL line per criterion. Pass criterion numbers
// as arguments to run a subset.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "emgf/con_tree.hpp"
#include "emgf/config.hpp"
#include "emgf/model_check.hpp"
#include "emgf/projection.hpp"
#include "emgf/synth.hpp"
#include "emgf/train.hpp"
#include "emgf/triplet.hpp"
#include "../test_support.hpp"

using namespace emgf;
namespace fs = std::filesystem;

namespace {

// Pinned tolerances and budgets.
constexpr double kGradTolerance = 1e-4;
constexpr double kGradEps = 1e-5;
constexpr double kGradSeconds = 120.0;
constexpr double kOrthogonalityTol = 1e-9;
constexpr double kComplementTol = 1e-9;
constexpr std::size_t kProjectionPairs = 500;
constexpr std::size_t kLabelGraphs = 200;
constexpr std::size_t kLabelMaxNodes = 12;
constexpr std::size_t kTrees = 100;
constexpr std::size_t kTreeMaxTokens = 15;
constexpr std::size_t kExtensibilityEpochs = 100;
constexpr std::size_t kExtensibilitySeeds = 3;
constexpr double kExtensibilitySlack = 0.02;
constexpr std::size_t kOverfitInstances = 64;
constexpr std::size_t kOverfitEpochs = 200;
constexpr double kOverfitAccuracy = 0.95;
constexpr double kOverfitSeconds = 600.0;
constexpr double kMetricTol = 1e-15;
constexpr double kDecompositionTol = 1e-10;
constexpr std::size_t kDeterminismEpochs = 30;

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

ExperimentConfig synthetic_config() {
    return load_config(fs::path(EMGF_SOURCE_DIR) / "configs" / "synthetic.cfg");
}

std::vector<AspectInstance> planted(std::size_t n, std::uint64_t seed, bool compact = false) {
    SynthOptions o;
    o.instances = n;
    o.seed = seed;
    o.knowledge = true;
    o.compact = compact;
    return synthesize(o);
}

Outcome gradient_integrity() {
    const auto t0 = std::chrono::steady_clock::now();
    const ExperimentConfig cfg = synthetic_config();
    Model model(cfg.model, 0);
    const auto inst = model.prepare(planted(1, 0, true));
    if (inst[0].size() != 6) return {false, "instance is not 6 tokens"};
    GradCheckOptions options;
    options.eps = kGradEps;
    options.tolerance = kGradTolerance;
    const auto report = check_model_gradients(model, inst[0], cfg.train.beta, options);
    const double secs = seconds_since(t0);
    std::string worst;
    bool every_group = true;
    for (const auto& g : report.groups) {
        every_group &= g.max_rel_error < kGradTolerance;
        worst += fmt(" %s=%.1e", g.group.c_str(), g.max_rel_error);
    }
    return {every_group && report.passed && secs < kGradSeconds,
            fmt("%zu groups, max rel err %.2e, %.1fs;", report.groups.size(), report.max_rel_error, secs) + worst};
}

Outcome orthogonal_projection() {
    std::mt19937_64 rng(2);
    std::normal_distribution<double> normal(0.0, 1.0);
    double worst_dot = 0.0, worst_diff = 0.0;
    for (std::size_t k = 0; k < kProjectionPairs; ++k) {
        const std::size_t d = 2 + rng() % 63;
        const double scale_x = std::exp(normal(rng)), scale_y = std::exp(normal(rng));
        std::vector<double> x(d), y(d);
        for (auto& v : x) v = scale_x * normal(rng);
        for (auto& v : y) v = scale_y * normal(rng);
        const Tensor out = purify(Tensor({1, d}, x), Tensor({1, d}, y));
        double xy = 0, yy = 0, xx = 0;
        for (std::size_t j = 0; j < d; ++j) xy += x[j] * y[j], yy += y[j] * y[j], xx += x[j] * x[j];
        double dot = 0;
        for (std::size_t j = 0; j < d; ++j) {
            dot += out.at(0, j) * y[j];
            worst_diff = std::max(worst_diff, std::abs(out.at(0, j) - (x[j] - xy / yy * y[j])));
        }
        worst_dot = std::max(worst_dot, std::abs(dot) / std::sqrt(xx * yy));
    }
    return {worst_dot <= kOrthogonalityTol && worst_diff <= kComplementTol,
            fmt("%zu pairs, max |<p,y>|/(|x||y|) %.1e, max |p - (x - proj)| %.1e", kProjectionPairs, worst_dot, worst_diff)};
}

Outcome triplet_labeling() {
    std::size_t anchors = 0, mismatches = 0, partition_failures = 0;
    for (std::uint64_t seed = 0; seed < kLabelGraphs; ++seed) {
        std::mt19937_64 rng(1000 + seed);
        const std::size_t n = 1 + rng() % kLabelMaxNodes;
        std::uniform_real_distribution<double> density(0.0, 0.9);
        const DualViewGraph g{testing::random_symmetric(n, density(rng), rng),
                              testing::random_symmetric(n, density(rng), rng)};
        for (View v : {View::con, View::dep})
            for (std::size_t i = 0; i < n; ++i) {
                const Slot anchor{v, i};
                const PosNeg pn = label_pos_neg(g, anchor);
                const auto [pos, neg] = testing::enumerate_scenarios(g, anchor);
                ++anchors;
                if (std::set<Slot>(pn.pos.begin(), pn.pos.end()) != pos ||
                    std::set<Slot>(pn.neg.begin(), pn.neg.end()) != neg)
                    ++mismatches;
                std::set<Slot> cover(pn.pos.begin(), pn.pos.end());
                bool disjoint = true;
                for (Slot s : pn.neg) disjoint &= cover.insert(s).second;
                disjoint &= cover.insert(anchor).second;
                if (!disjoint || cover.size() != 2 * n) ++partition_failures;
            }
    }
    return {mismatches == 0 && partition_failures == 0,
            fmt("%zu graphs, %zu anchors, %zu label mismatches, %zu partition failures", kLabelGraphs, anchors,
                mismatches, partition_failures)};
}

Outcome anchor_sizing() {
    // k = clamp(round(c * ln(n)^2), 1, n), tabulated by hand.
    struct Row {
        std::size_t n;
        std::size_t k[3];
    };
    const double cs[3] = {0.5, 1.0, 2.0};
    const Row table[] = {{1, {1, 1, 1}}, {2, {1, 1, 1}}, {5, {1, 3, 5}}, {20, {4, 9, 18}}, {100, {11, 21, 42}}};
    std::size_t wrong = 0;
    for (const Row& r : table)
        for (int j = 0; j < 3; ++j) {
            const Tensor uniform = Tensor::full({r.n, r.n}, 1.0 / static_cast<double>(r.n));
            const auto chosen = select_anchors(uniform, cs[j]);
            bool ok = chosen.size() == r.k[j];
            for (std::size_t i = 0; ok && i < chosen.size(); ++i) ok = chosen[i] == i;  // index-ordered tie-break
            wrong += ok ? 0 : 1;
        }
    return {wrong == 0, fmt("15 (n, c) cells, %zu wrong", wrong)};
}

Outcome constituent_stack() {
    std::size_t slices = 0, bad_equivalence = 0, bad_refinement = 0;
    for (std::uint64_t seed = 0; seed < kTrees; ++seed) {
        std::mt19937_64 rng(500 + seed);
        const std::size_t n = 1 + rng() % kTreeMaxTokens;
        const ConTree tree = parse_bracketed(testing::random_tree_string(n, rng), testing::word_tokens(n));
        const std::size_t count = 1 + rng() % 6;
        const ConGraphStack stack = build_con_stack(tree, count);
        for (std::size_t l = 0; l < stack.slices.size(); ++l) {
            ++slices;
            if (!testing::is_equivalence(stack.slices[l])) ++bad_equivalence;
            if (l + 1 < stack.slices.size() && !testing::refines(stack.slices[l], stack.slices[l + 1])) ++bad_refinement;
        }
    }
    return {bad_equivalence == 0 && bad_refinement == 0,
            fmt("%zu trees, %zu slices, %zu not equivalences, %zu refinement violations", kTrees, slices, bad_equivalence,
                bad_refinement)};
}

Outcome extensibility() {
    const auto t0 = std::chrono::steady_clock::now();
    double sum_by_size[5] = {0}, count_by_size[5] = {0};
    std::string failures;
    for (unsigned mask = 1; mask < 16; ++mask) {
        std::vector<Channel> channels;
        for (std::size_t c = 0; c < kNumChannels; ++c)
            if (mask & (1u << c)) channels.push_back(kAllChannels[c]);
        double acc = 0.0;
        for (std::size_t s = 0; s < kExtensibilitySeeds; ++s) {
            ExperimentConfig cfg = synthetic_config();
            cfg.model.channels = channels;
            cfg.train.epochs = kExtensibilityEpochs;
            cfg.train.seed = s;
            try {
                Model model(cfg.model, s);
                const auto data = model.prepare(planted(kOverfitInstances, 100 + s));
                acc += train(model, data, {}, cfg.train).epochs.back().eval_accuracy;
            } catch (const std::exception& e) {
                failures += " " + format_channels(channels) + ": " + e.what();
            }
        }
        sum_by_size[channels.size()] += acc / kExtensibilitySeeds;
        count_by_size[channels.size()] += 1;
    }
    double m[5] = {0};
    for (int k = 1; k <= 4; ++k) m[k] = sum_by_size[k] / count_by_size[k];
    bool monotone = true;
    for (int k = 1; k < 4; ++k) monotone &= m[k + 1] >= m[k] - kExtensibilitySlack;
    return {failures.empty() && monotone,
            fmt("M1 %.3f, M2 %.3f, M3 %.3f, M4 %.3f (slack %.2f), %.0fs", m[1], m[2], m[3], m[4], kExtensibilitySlack,
                seconds_since(t0)) +
                failures};
}

// Criteria 7 and 9 share one training run.
struct OverfitRun {
    TrainResult result;
    double seconds = 0.0;
    double beta = 0.0;
    std::string error;
};

const OverfitRun& overfit_run() {
    static const OverfitRun run = [] {
        OverfitRun r;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            ExperimentConfig cfg = synthetic_config();
            cfg.train.epochs = kOverfitEpochs;
            r.beta = cfg.train.beta;
            Model model(cfg.model, cfg.train.seed);
            const auto data = model.prepare(planted(kOverfitInstances, 7));
            r.result = train(model, data, {}, cfg.train);
        } catch (const std::exception& e) {
            r.error = e.what();
        }
        r.seconds = seconds_since(t0);
        return r;
    }();
    return run;
}

Outcome overfit() {
    const OverfitRun& run = overfit_run();
    if (!run.error.empty()) return {false, run.error};
    double best = 0.0;
    std::size_t first_epoch = 0;
    bool reached = false;
    for (const auto& e : run.result.epochs) {
        best = std::max(best, e.eval_accuracy);
        if (!reached && e.eval_accuracy >= kOverfitAccuracy) reached = true, first_epoch = e.epoch;
    }
    return {reached && run.seconds < kOverfitSeconds,
            fmt("train accuracy %.3f first reached >= %.2f at epoch %zu (final %.3f), %.1fs", best, kOverfitAccuracy,
                first_epoch, run.result.epochs.back().eval_accuracy, run.seconds)};
}

Outcome metric_correctness() {
    struct Case {
        Confusion c;
        long an, ad, fn, fd;
    };
    // Exact fractions for accuracy and macro-F1.
    const Case cases[] = {
        {{{{5, 0, 0}, {0, 5, 0}, {0, 0, 5}}}, 1, 1, 1, 1},
        {{{{4, 1, 0}, {1, 4, 0}, {0, 0, 5}}}, 13, 15, 13, 15},
        {{{{5, 0, 0}, {5, 0, 0}, {5, 0, 0}}}, 1, 3, 1, 6},
        {{{{0, 3, 0}, {0, 0, 0}, {2, 0, 1}}}, 1, 6, 1, 6},
        {{{{3, 5, 6}, {2, 3, 0}, {1, 2, 3}}}, 9, 25, 11, 30},
        {{{{8, 3, 6}, {0, 7, 7}, {7, 6, 7}}}, 22, 51, 79, 180},
        {{{{9, 3, 6}, {1, 7, 3}, {0, 4, 8}}}, 24, 41, 17809, 30450},
        {{{{6, 7, 6}, {1, 4, 1}, {1, 6, 9}}}, 19, 41, 4487, 9936},
        {{{{6, 1, 0}, {5, 3, 1}, {7, 8, 3}}}, 6, 17, 1999, 5775},
        {{{{9, 2, 9}, {1, 8, 0}, {7, 3, 2}}}, 19, 41, 4330, 9361},
    };
    std::size_t wrong = 0;
    double f1_case2 = 0.0;
    for (std::size_t i = 0; i < std::size(cases); ++i) {
        const auto& k = cases[i];
        const EvalReport r = report_from_confusion(k.c);
        if (i == 1) f1_case2 = r.macro_f1;
        if (std::abs(r.accuracy - double(k.an) / double(k.ad)) > kMetricTol ||
            std::abs(r.macro_f1 - double(k.fn) / double(k.fd)) > kMetricTol)
            ++wrong;
    }
    return {wrong == 0, fmt("10 matrices, %zu wrong; [[4,1,0],[1,4,0],[0,0,5]] macro-F1 %.4f", wrong, f1_case2)};
}

Outcome loss_decomposition() {
    const OverfitRun& run = overfit_run();
    if (!run.error.empty()) return {false, run.error};
    double worst = 0.0;
    for (const auto& b : run.result.batches)
        worst = std::max(worst, std::abs(b.total - (b.class_loss + run.beta * b.triplet)));
    return {!run.result.batches.empty() && worst <= kDecompositionTol,
            fmt("%zu batches, max |total - (L_c + beta L_triplet)| %.1e", run.result.batches.size(), worst)};
}

Outcome determinism() {
    const fs::path dir = fs::temp_directory_path() / "emgf_acceptance";
    fs::create_directories(dir);
    std::string contents[2];
    for (int k = 0; k < 2; ++k) {
        const fs::path log = dir / ("metrics" + std::to_string(k) + ".tsv");
        {
            ExperimentConfig cfg = synthetic_config();
            cfg.train.epochs = kDeterminismEpochs;
            cfg.train.seed = 11;
            Model model(cfg.model, cfg.train.seed);
            std::ofstream out(log, std::ios::binary);
            TrainHooks hooks;
            hooks.metrics_log = &out;
            train(model, model.prepare(planted(32, 11)), {}, cfg.train, hooks);
        }
        std::ifstream in(log, std::ios::binary);
        std::ostringstream s;
        s << in.rdbuf();
        contents[k] = s.str();
    }
    fs::remove_all(dir);
    return {!contents[0].empty() && contents[0] == contents[1],
            fmt("two %zu-epoch runs, logs of %zu and %zu bytes, %s", kDeterminismEpochs, contents[0].size(),
                contents[1].size(), contents[0] == contents[1] ? "identical" : "different")};
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
        {"gradient integrity", gradient_integrity},
        {"orthogonal projection", orthogonal_projection},
        {"triplet labeling oracle", triplet_labeling},
        {"anchor sizing", anchor_sizing},
        {"constituent stack", constituent_stack},
        {"extensibility M1-M4", extensibility},
        {"overfit", overfit},
        {"metric correctness", metric_correctness},
        {"loss decomposition", loss_decomposition},
        {"determinism", determinism},
    };
    std::set<std::size_t> only;
    for (int i = 1; i < argc; ++i) only.insert(std::stoul(argv[i]));

    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        if (!only.empty() && !only.count(i + 1)) continue;
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        std::printf("[%s] %2zu %-24s %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str());
        std::fflush(stdout);
        failed += o.pass ? 0 : 1;
    }
    return failed == 0 ? 0 : 1;
}
