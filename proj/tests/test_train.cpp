#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "emgf/model_check.hpp"
#include "emgf/synth.hpp"
#include "emgf/train.hpp"

using namespace emgf;

namespace {

struct ConfusionCase {
    Confusion confusion;
    long acc_num, acc_den, f1_num, f1_den;
};

// Expected values are exact fractions worked out independently.
const ConfusionCase kConfusionTable[] = {
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

ExperimentConfig small_config() {
    ExperimentConfig c;
    c.model.dim = 8;
    c.model.heads = 2;
    c.model.factor_dim = 8;
    c.model.fusion_blocks = 2;
    c.model.dep_layers = c.model.con_layers = c.model.sem_layers = 2;
    c.model.kge_width = kSynthKnowledgeWidth;
    c.model.kge_buckets = 16;
    c.train.lr = 3e-3;
    c.train.batch_size = 8;
    c.train.epochs = 3;
    return c;
}

std::vector<AspectInstance> synth_data(std::size_t n, std::uint64_t seed, bool compact = false) {
    SynthOptions o;
    o.instances = n;
    o.seed = seed;
    o.knowledge = true;
    o.compact = compact;
    return synthesize(o);
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

}  // namespace

TEST(Metrics, FixedConfusionTable) {
    for (const auto& c : kConfusionTable) {
        const EvalReport r = report_from_confusion(c.confusion);
        EXPECT_NEAR(r.accuracy, static_cast<double>(c.acc_num) / c.acc_den, 1e-15);
        EXPECT_NEAR(r.macro_f1, static_cast<double>(c.f1_num) / c.f1_den, 1e-15);
    }
}

TEST(Metrics, HandComputedPerClass) {
    const EvalReport r = report_from_confusion({{{4, 1, 0}, {1, 4, 0}, {0, 0, 5}}});
    EXPECT_DOUBLE_EQ(r.per_class[0].precision, 0.8);
    EXPECT_DOUBLE_EQ(r.per_class[1].recall, 0.8);
    EXPECT_DOUBLE_EQ(r.per_class[2].f1, 1.0);
    EXPECT_NEAR(r.macro_f1, 0.8667, 5e-5);
    EXPECT_EQ(r.total, 15u);
}

TEST(Metrics, EmptyConfusionIsDataError) { EXPECT_THROW(report_from_confusion(Confusion{}), DataError); }

TEST(Classify, ZeroWeightsAreUniform) {
    const Tensor p = classify(Tensor::row_vector({1, 2}), Tensor::zeros({2, 3}), Tensor::zeros({1, 3}));
    for (double x : p.data()) EXPECT_NEAR(x, 1.0 / 3, 1e-15);
    EXPECT_NEAR(class_loss(p, 1).item(), std::log(3.0), 1e-12);
}

TEST(Classify, LargeBiasDominates) {
    const Tensor p = classify(Tensor::row_vector({1, 2}), Tensor::zeros({2, 3}), Tensor::row_vector({10, 0, 0}));
    EXPECT_GT(p.at(0, 0), 0.9999);
}

TEST(Classify, ArgmaxInvariantToLogitShift) {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> normal(0, 1);
    for (int i = 0; i < 50; ++i) {
        const Tensor b = Tensor::row_vector({normal(rng), normal(rng), normal(rng)});
        const Tensor p1 = classify(Tensor::row_vector({0}), Tensor::zeros({1, 3}), b);
        const Tensor p2 = classify(Tensor::row_vector({0}), Tensor::zeros({1, 3}), add_scalar(b, 5.0 * normal(rng)));
        const auto am = [](const Tensor& t) { return std::max_element(t.data().begin(), t.data().end()) - t.data().begin(); };
        EXPECT_EQ(am(p1), am(p2));
    }
}

TEST(Classify, ZeroProbabilityIsClamped) {
    EXPECT_NEAR(class_loss(Tensor::row_vector({1, 0, 0}), 2).item(), -std::log(1e-12), 1e-9);
    EXPECT_DOUBLE_EQ(class_loss(Tensor::row_vector({0, 1, 0}), 1).item(), 0.0);
}

TEST(Config, RoundTripsThroughText) {
    ExperimentConfig c = small_config();
    c.model.channels = parse_channels("con,kge");
    c.train.beta = 0.07;
    c.train.train_data = "data/train.jsonl";
    std::istringstream in(to_text(c));
    ExperimentConfig back;
    apply_config_text(back, in, "test");
    EXPECT_EQ(to_text(back), to_text(c));
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
    ExperimentConfig c;
    EXPECT_THROW(set_value(c, "model.width", "3"), ConfigError);
    EXPECT_THROW(set_value(c, "model.dim", "-3"), ConfigError);
    EXPECT_THROW(set_value(c, "train.lr", "fast"), ConfigError);
    std::istringstream in("# comment\n\nmodel.dim = 12  # trailing\nnot a pair\n");
    try {
        apply_config_text(c, in, "f.cfg");
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("f.cfg:4"), std::string::npos);
    }
    EXPECT_EQ(c.model.dim, 12u);
}

TEST(Config, PresetFilesLoad) {
    for (const char* name : {"synthetic", "laptop", "restaurant", "twitter", "mams"}) {
        const auto path = std::filesystem::path(EMGF_SOURCE_DIR) / "configs" / (std::string(name) + ".cfg");
        const ExperimentConfig c = load_config(path);
        EXPECT_NO_THROW(c.model.validate()) << name;
        EXPECT_NO_THROW(c.train.validate()) << name;
    }
    EXPECT_EQ(load_config(std::filesystem::path(EMGF_SOURCE_DIR) / "configs/twitter.cfg").model.sem_layers, 1u);
}

TEST(Synth, RecordsAreValidAndRoundTrip) {
    const auto data = synth_data(64, 7);
    ASSERT_EQ(data.size(), 64u);
    std::ostringstream out;
    write_dataset(out, data);
    std::istringstream in(out.str());
    const auto back = read_dataset(in);
    ASSERT_EQ(back.size(), data.size());
    for (std::size_t i = 0; i < data.size(); ++i) EXPECT_EQ(to_json_line(back[i]), to_json_line(data[i]));
}

TEST(Synth, SameSeedIsByteIdentical) {
    std::ostringstream a, b, c;
    write_dataset(a, synth_data(64, 7));
    write_dataset(b, synth_data(64, 7));
    write_dataset(c, synth_data(64, 8));
    EXPECT_EQ(a.str(), b.str());
    EXPECT_NE(a.str(), c.str());
}

TEST(Synth, MajorityLexiconBaselineIsPerfect) {
    // Baseline: vote among lexicon words attached to the aspect in the
    // dependency tree.
    for (bool compact : {false, true}) {
        const auto data = synth_data(500, 11, compact);
        std::size_t correct = 0;
        for (const auto& inst : data) {
            std::map<Polarity, int> votes;
            for (std::size_t i = 0; i < inst.size(); ++i)
                if (inst.dep_heads[i] != 0 && inst.aspect.contains(inst.dep_heads[i] - 1))
                    if (auto c = lexicon_class(inst.tokens[i])) votes[*c]++;
            Polarity best = Polarity::neutral;
            int best_votes = -1;
            for (auto [p, v] : votes)
                if (v > best_votes) best = p, best_votes = v;
            correct += best == inst.polarity;
        }
        EXPECT_EQ(correct, data.size()) << (compact ? "compact" : "full");
    }
}

TEST(Synth, LabelsCoverAllClassesAndDistractorDiffers) {
    const auto data = synth_data(300, 12);
    std::map<Polarity, int> counts;
    for (const auto& inst : data) {
        counts[inst.polarity]++;
        int opinions = 0;
        std::set<Polarity> classes;
        for (const auto& t : inst.tokens)
            if (auto c = lexicon_class(t)) opinions++, classes.insert(*c);
        EXPECT_EQ(opinions, 2);
        EXPECT_EQ(classes.size(), 2u);
    }
    EXPECT_EQ(counts.size(), 3u);
}

TEST(Synth, CompactInstancesHaveSixTokens) {
    for (const auto& inst : synth_data(20, 3, true)) EXPECT_EQ(inst.size(), 6u);
}

TEST(Model, ForwardShapesAndProbabilities) {
    const auto cfg = small_config();
    Model model(cfg.model, 1);
    const auto prepared = model.prepare(synth_data(5, 1));
    for (const auto& p : prepared) {
        const auto out = model.forward(p);
        EXPECT_EQ(out.probs.shape(), (Shape{1, 3}));
        double s = 0;
        for (double x : out.probs.data()) s += x;
        EXPECT_NEAR(s, 1.0, 1e-12);
        EXPECT_EQ(out.fusion.block_outputs.size(), cfg.model.fusion_blocks);
        EXPECT_EQ(out.anchors.size(), anchor_count(p.size(), cfg.model.anchor_c));
        EXPECT_GE(out.triplet.item(), 0.0);
    }
}

TEST(Model, PrepareRejectsWrongKnowledgeWidth) {
    auto cfg = small_config();
    cfg.model.kge_width = 3;
    Model model(cfg.model, 1);
    EXPECT_THROW(model.prepare(synth_data(2, 1)), DataError);
}

TEST(Model, GradCheckSmallConfig) {
    auto cfg = small_config();
    Model model(cfg.model, 5);
    const auto prepared = model.prepare(synth_data(1, 5, true));
    const auto report = check_model_gradients(model, prepared[0], 0.12);
    for (const auto& g : report.groups) EXPECT_LT(g.max_rel_error, 1e-4) << g.group << " " << g.worst_parameter;
    EXPECT_TRUE(report.passed);
}

TEST(Model, ZeroBetaLeavesNoTripletGradient) {
    auto cfg = small_config();
    Model model(cfg.model, 6);
    const auto prepared = model.prepare(synth_data(1, 6, true));
    const auto report = check_model_gradients(model, prepared[0], 0.0, {1e-5, 1e-4, 1e-6});
    for (const auto& g : report.groups) EXPECT_EQ(g.triplet_grad_norm, 0.0) << g.group;
}

TEST(Model, TripletGradientReachesOnlyEncoders) {
    auto cfg = small_config();
    Model model(cfg.model, 6);
    const auto prepared = model.prepare(synth_data(1, 6, true));
    const auto report = check_model_gradients(model, prepared[0], 0.12);
    for (const auto& g : report.groups) {
        const bool upstream = g.group == "context" || g.group == "dep" || g.group == "con" || g.group == "attention";
        if (!upstream) EXPECT_EQ(g.triplet_grad_norm, 0.0) << g.group;
    }
}

TEST(Model, SingleChannelFusionGradsOnlyThatChannel) {
    auto cfg = small_config();
    cfg.model.channels = {Channel::sem};
    Model model(cfg.model, 7);
    const auto prepared = model.prepare(synth_data(1, 7, true));
    const auto report = check_model_gradients(model, prepared[0], 0.12);
    EXPECT_TRUE(report.passed);
    for (const auto& p : model.parameters().all()) {
        if (parameter_group(p.name) != "fusion" || p.name.find(".U_") == std::string::npos) continue;
        if (p.name.ends_with("U_sem") || p.name.ends_with("U_state")) continue;
        const auto entry = std::find_if(report.parameters.begin(), report.parameters.end(),
                                        [&](const GradCheckEntry& e) { return e.name == p.name; });
        ASSERT_NE(entry, report.parameters.end());
        EXPECT_EQ(entry->analytic, 0.0) << p.name;
        EXPECT_EQ(entry->numeric, 0.0) << p.name;
    }
}

TEST(Train, TotalLossDecomposesPerBatch) {
    auto cfg = small_config();
    Model model(cfg.model, 2);
    const auto prepared = model.prepare(synth_data(20, 2));
    const auto result = train(model, prepared, {}, cfg.train);
    ASSERT_EQ(result.batches.size(), 9u);
    for (const auto& b : result.batches) EXPECT_NEAR(b.total, b.class_loss + cfg.train.beta * b.triplet, 1e-10);
    for (const auto& e : result.epochs) EXPECT_GE(e.train_loss, 0.0);
}

TEST(Train, SameSeedGivesIdenticalLog) {
    auto cfg = small_config();
    const auto data = synth_data(16, 3);
    std::string logs[2];
    for (auto& log : logs) {
        Model model(cfg.model, 9);
        std::ostringstream out;
        TrainHooks hooks;
        hooks.metrics_log = &out;
        train(model, model.prepare(data), {}, cfg.train, hooks);
        log = out.str();
    }
    EXPECT_EQ(logs[0], logs[1]);
    EXPECT_EQ(std::count(logs[0].begin(), logs[0].end(), '\n'), 4);
}

TEST(Train, BetaShiftsFirstBatchByWeightedTriplet) {
    auto cfg = small_config();
    cfg.train.batch_size = 64;
    cfg.train.epochs = 1;
    const auto data = synth_data(12, 4);
    std::vector<BatchRecord> first;
    for (double beta : {0.0, 0.12}) {
        cfg.train.beta = beta;
        Model model(cfg.model, 4);
        first.push_back(train(model, model.prepare(data), {}, cfg.train).batches.front());
    }
    EXPECT_DOUBLE_EQ(first[0].class_loss, first[1].class_loss);
    EXPECT_DOUBLE_EQ(first[0].total, first[0].class_loss);
    EXPECT_NEAR(first[1].total - first[0].total, 0.12 * first[1].triplet, 1e-12);
}

TEST(Train, OneStepDecreasesSingleInstanceLoss) {
    int failures = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        auto cfg = small_config();
        cfg.model.dropout = 0.0;
        cfg.train.lr = 1e-3;
        cfg.train.epochs = 1;
        cfg.train.seed = seed;
        Model model(cfg.model, seed);
        const auto prepared = model.prepare(synth_data(1, seed + 50));
        const double before = mean_loss(model, prepared, cfg.train.beta).total;
        train(model, prepared, {}, cfg.train);
        const double after = mean_loss(model, prepared, cfg.train.beta).total;
        failures += after >= before;
    }
    EXPECT_LE(failures, 2);
}

TEST(Train, NonFiniteParametersAbort) {
    auto cfg = small_config();
    Model model(cfg.model, 2);
    const auto prepared = model.prepare(synth_data(4, 2));
    model.parameters().all().front().value.data()[0] = std::nan("");
    EXPECT_THROW(train(model, prepared, {}, cfg.train), NumericError);
}

TEST(Evaluate, InvariantToOrderAndThreads) {
    auto cfg = small_config();
    Model model(cfg.model, 3);
    auto prepared = model.prepare(synth_data(30, 3));
    const EvalReport a = evaluate(model, prepared, 1);
    std::reverse(prepared.begin(), prepared.end());
    const EvalReport b = evaluate(model, prepared, 4);
    EXPECT_EQ(a.confusion, b.confusion);
    EXPECT_EQ(a.accuracy, b.accuracy);
    EXPECT_THROW(evaluate(model, {}), DataError);
}

TEST(Checkpoint, RoundTripPreservesPredictions) {
    auto cfg = small_config();
    cfg.model.channels = parse_channels("dep,sem,kge");
    Model model(cfg.model, 8);
    const auto data = synth_data(6, 8);
    const auto prepared = model.prepare(data);
    train(model, prepared, {}, cfg.train);
    const auto path = std::filesystem::temp_directory_path() / "emgf_test_checkpoint.txt";
    save_checkpoint(path, cfg, model.parameters());
    const auto loaded = load_checkpoint(path);
    EXPECT_EQ(to_text(loaded.config), to_text(cfg));
    const auto reprepared = loaded.model.prepare(data);
    for (std::size_t i = 0; i < data.size(); ++i)
        EXPECT_EQ(model.forward(prepared[i]).logits.at(0, 0), loaded.model.forward(reprepared[i]).logits.at(0, 0));
    std::filesystem::remove(path);
}

TEST(Checkpoint, RejectsForeignFiles) {
    const auto path = std::filesystem::temp_directory_path() / "emgf_test_not_checkpoint.txt";
    std::ofstream(path) << "hello\n";
    EXPECT_THROW(load_checkpoint(path), DataError);
    std::filesystem::remove(path);
}
