#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>

#include "emgf/config.hpp"
#include "emgf/model_check.hpp"
#include "emgf/synth.hpp"
#include "emgf/train.hpp"

using namespace emgf;

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kData = 2, kNumeric = 3 };

struct CommonFlags {
    std::string config_path;
    std::vector<std::string> overrides;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> channels;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--config", f.config_path, "Config file (key = value lines)")->check(CLI::ExistingFile);
    cmd->add_option("--set", f.overrides, "Override a config key, e.g. --set train.lr=0.01 (repeatable)");
    cmd->add_option("--seed", f.seed, "Overrides train.seed");
    cmd->add_option("--channels", f.channels, "Overrides fusion.channels, e.g. dep,con");
}

ExperimentConfig resolve(const CommonFlags& f) {
    ExperimentConfig c = f.config_path.empty() ? ExperimentConfig{} : load_config(f.config_path);
    for (const auto& o : f.overrides) {
        const auto eq = o.find('=');
        if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + o + "'");
        set_value(c, o.substr(0, eq), o.substr(eq + 1));
    }
    if (f.seed) c.train.seed = *f.seed;
    if (f.channels) set_value(c, "fusion.channels", *f.channels);
    c.model.validate();
    return c;
}

std::vector<AspectInstance> load_or_fail(const std::string& path) {
    if (path.empty()) throw ConfigError("no dataset given (--data or data.train)");
    DatasetSummary summary;
    std::ifstream in(path);
    if (!in) throw DataError("cannot open dataset " + path);
    auto data = read_dataset(in, &summary);
    if (data.empty()) throw DataError(path + ": no usable records");
    return data;
}

int cmd_synth(std::size_t instances, std::size_t vocab, std::uint64_t seed, bool knowledge, bool compact,
              const std::string& out) {
    SynthOptions o{instances, vocab, seed, knowledge, compact};
    const auto data = synthesize(o);
    write_dataset(out, data);
    std::printf("wrote %zu instances to %s\n", data.size(), out.c_str());
    return kOk;
}

int cmd_prepare(const std::string& path, const CommonFlags& flags) {
    const ExperimentConfig cfg = resolve(flags);
    DatasetSummary summary;
    std::ifstream in(path);
    if (!in) throw DataError("cannot open dataset " + path);
    const auto data = read_dataset(in, &summary);
    std::size_t tokens = 0, longest = 0, with_knowledge = 0;
    std::map<std::size_t, std::size_t> heights;
    for (std::size_t i = 0; i < data.size(); ++i) {
        ParsedInstance parsed;
        try {
            parsed = parse_structures(data[i]);
        } catch (const DataError& e) {
            throw DataError("record " + std::to_string(i) + ": " + e.what());
        }
        build_con_stack(parsed.tree, cfg.model.con_layers);
        tokens += data[i].size();
        longest = std::max(longest, data[i].size());
        with_knowledge += data[i].knowledge.empty() ? 0 : 1;
        heights[parsed.tree.height()]++;
    }
    std::printf("records\t%zu\nexcluded_conflict\t%zu\n", data.size(), summary.excluded_conflict);
    for (std::size_t c = 0; c < kNumClasses; ++c)
        std::printf("label_%s\t%zu\n", std::string(polarity_name(static_cast<Polarity>(c))).c_str(),
                    summary.label_counts[c]);
    std::printf("mean_tokens\t%.2f\nmax_tokens\t%zu\nwith_knowledge\t%zu\n",
                data.empty() ? 0.0 : static_cast<double>(tokens) / data.size(), longest, with_knowledge);
    for (auto [h, n] : heights) std::printf("tree_height_%zu\t%zu\n", h, n);
    return kOk;
}

int cmd_train(const CommonFlags& flags, std::string data_path, std::string eval_path, std::optional<std::size_t> epochs,
              std::optional<double> lr, std::optional<double> beta, const std::string& log_path,
              const std::string& checkpoint_path, std::size_t repeats) {
    ExperimentConfig cfg = resolve(flags);
    if (epochs) cfg.train.epochs = *epochs;
    if (lr) cfg.train.lr = *lr;
    if (beta) cfg.train.beta = *beta;
    if (!data_path.empty()) cfg.train.train_data = data_path;
    if (!eval_path.empty()) cfg.train.eval_data = eval_path;
    cfg.train.validate();
    if (repeats == 0) throw ConfigError("--repeats must be positive");

    const auto train_raw = load_or_fail(cfg.train.train_data);
    const auto eval_raw = cfg.train.eval_data.empty() ? std::vector<AspectInstance>{} : load_or_fail(cfg.train.eval_data);

    double acc_sum = 0.0, f1_sum = 0.0;
    const std::uint64_t base_seed = cfg.train.seed;
    for (std::size_t r = 0; r < repeats; ++r) {
        ExperimentConfig run = cfg;
        run.train.seed = base_seed + r;
        Model model(run.model, run.train.seed);
        const auto train_set = model.prepare(train_raw);
        const auto eval_set = model.prepare(eval_raw);

        std::ofstream log;
        TrainHooks hooks;
        if (!log_path.empty()) {
            const std::string p = repeats == 1 ? log_path : log_path + "." + std::to_string(r);
            log.open(p);
            if (!log) throw DataError("cannot write metrics log " + p);
            hooks.metrics_log = &log;
        } else {
            hooks.on_epoch = [](const EpochRecord& e) { std::printf("%s\n", format_epoch(e).c_str()); };
            std::printf("%s\n", kMetricsHeader);
        }
        const TrainResult result = train(model, train_set, eval_set, run.train, hooks);
        restore(model.parameters(), result.best);
        if (!checkpoint_path.empty()) {
            const std::string p = repeats == 1 ? checkpoint_path : checkpoint_path + "." + std::to_string(r);
            save_checkpoint(p, run, model.parameters());
        }
        const EvalReport report = evaluate(model, eval_set.empty() ? train_set : eval_set);
        std::printf("run %zu seed %llu best_epoch %zu\n%s", r, static_cast<unsigned long long>(run.train.seed),
                    result.best_epoch, report.to_string().c_str());
        acc_sum += report.accuracy;
        f1_sum += report.macro_f1;
    }
    if (repeats > 1)
        std::printf("mean over %zu runs: accuracy %.4f macro_f1 %.4f\n", repeats, acc_sum / repeats, f1_sum / repeats);
    return kOk;
}

int cmd_eval(const std::string& checkpoint, const std::string& data_path, std::size_t threads) {
    const LoadedModel loaded = load_checkpoint(checkpoint);
    const auto data = loaded.model.prepare(load_or_fail(data_path));
    std::printf("%s", evaluate(loaded.model, data, threads).to_string().c_str());
    return kOk;
}

int cmd_gradcheck(const CommonFlags& flags, const std::string& data_path, std::size_t index,
                  std::optional<double> beta, double tolerance, bool per_parameter) {
    ExperimentConfig cfg = resolve(flags);
    if (beta) cfg.train.beta = *beta;
    std::vector<AspectInstance> source;
    if (data_path.empty()) {
        SynthOptions o;
        o.instances = 1;
        o.seed = cfg.train.seed;
        o.compact = true;
        o.knowledge = cfg.model.kge_width == kSynthKnowledgeWidth;
        source = synthesize(o);
        index = 0;
    } else {
        source = load_or_fail(data_path);
        if (index >= source.size()) throw ConfigError("--index out of range");
    }
    if (source[index].size() > 8)
        std::fprintf(stderr, "warning: %zu tokens; finite differences will be slow\n", source[index].size());
    Model model(cfg.model, cfg.train.seed);
    const auto inst = model.prepare(source[index]);
    GradCheckOptions options;
    options.tolerance = tolerance;
    const auto report = check_model_gradients(model, inst, cfg.train.beta, options);

    std::printf("%-12s %6s %12s %12s %12s  %s\n", "group", "params", "max_rel_err", "grad_norm", "triplet_norm", "worst");
    for (const auto& g : report.groups)
        std::printf("%-12s %6zu %12.3e %12.3e %12.3e  %s[%zu] analytic %.6e numeric %.6e\n", g.group.c_str(),
                    g.parameters, g.max_rel_error, g.grad_norm, g.triplet_grad_norm, g.worst_parameter.c_str(),
                    g.worst_index, g.analytic, g.numeric);
    if (per_parameter)
        for (const auto& p : report.parameters)
            std::printf("  %-28s %12.3e  [%zu] analytic %.6e numeric %.6e\n", p.name.c_str(), p.max_rel_error,
                        p.worst_index, p.analytic, p.numeric);
    if (cfg.train.beta == 0.0) std::printf("note: beta = 0, the triplet path contributes no gradient\n");
    if (!report.passed) {
        std::printf("FAILED: max relative error %.3e >= %.1e\n", report.max_rel_error, tolerance);
        for (const auto& p : report.parameters)
            if (p.max_rel_error >= tolerance)
                std::printf("  offending %s index %zu (analytic %.6e, numeric %.6e)\n", p.name.c_str(), p.worst_index,
                            p.analytic, p.numeric);
        return kNumeric;
    }
    std::printf("passed: max relative error %.3e < %.1e\n", report.max_rel_error, tolerance);
    return kOk;
}

std::string slot_list(const std::vector<Slot>& slots) {
    std::string out;
    for (const Slot& s : slots) out += (out.empty() ? "" : " ") + view_name(s.view) + ":" + std::to_string(s.index);
    return out.empty() ? "-" : out;
}

int cmd_anchors(const CommonFlags& flags, const std::string& data_path, const std::string& checkpoint,
                std::optional<double> c, std::size_t limit) {
    std::optional<LoadedModel> loaded;
    ExperimentConfig cfg;
    if (!checkpoint.empty()) {
        loaded.emplace(load_checkpoint(checkpoint));
        cfg = loaded->config;
    } else {
        cfg = resolve(flags);
    }
    if (c) cfg.model.anchor_c = *c;
    if (!(cfg.model.anchor_c > 0.0)) throw ConfigError("--c must be positive");
    std::optional<Model> fresh;
    if (!loaded) fresh.emplace(cfg.model, cfg.train.seed);
    const Model& model = loaded ? loaded->model : *fresh;

    const auto data = load_or_fail(data_path);
    Tape::NoGrad no_grad;
    for (std::size_t i = 0; i < data.size() && (limit == 0 || i < limit); ++i) {
        const PreparedInstance inst = model.prepare(data[i]);
        const Tensor a_sem = model.semantic_attention(inst);
        const auto scores = anchor_scores(a_sem);
        const std::size_t k = anchor_count(inst.size(), cfg.model.anchor_c);
        const auto anchors = top_k(scores, k);
        std::printf("instance %zu  n %zu  k %zu  anchors", i, inst.size(), k);
        for (std::size_t a : anchors) std::printf(" %zu", a);
        std::printf("\n  %-4s %-16s %10s\n", "idx", "token", "score");
        for (std::size_t t = 0; t < inst.size(); ++t)
            std::printf("  %-4zu %-16s %10.6f\n", t, inst.source.tokens[t].c_str(), scores[t]);
        const TripletSet triplets = build_triplets(inst.views, anchors, cfg.model.margin);
        for (std::size_t a = 0; a < triplets.anchors.size(); ++a) {
            const Slot s = triplets.anchors[a];
            std::printf("  anchor %s:%zu\n    pos %s\n    neg %s\n", view_name(s.view).c_str(), s.index,
                        slot_list(triplets.labels[a].pos).c_str(), slot_list(triplets.labels[a].neg).c_str());
        }
    }
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-granularity graph fusion for aspect-level sentiment classification"};
    app.require_subcommand(1, 1);

    CommonFlags prep_flags, train_flags, grad_flags, anchor_flags;

    auto* synth = app.add_subcommand("synth", "Generate a planted-signal dataset");
    std::size_t synth_instances = 64, synth_vocab = 50;
    std::uint64_t synth_seed = 0;
    bool synth_knowledge = false, synth_compact = false;
    std::string synth_out;
    synth->add_option("--instances", synth_instances, "Number of records")->check(CLI::PositiveNumber);
    synth->add_option("--vocab", synth_vocab, "Words per lexicon")->check(CLI::PositiveNumber);
    synth->add_option("--seed", synth_seed, "Generator seed");
    synth->add_flag("--knowledge", synth_knowledge, "Attach 4-wide knowledge vectors");
    synth->add_flag("--compact", synth_compact, "Fixed 6-token sentences");
    synth->add_option("--out", synth_out, "Output JSONL path")->required();

    auto* prepare = app.add_subcommand("prepare", "Validate a dataset and summarise its structures");
    std::string prep_data;
    prepare->add_option("--data", prep_data, "Dataset JSONL")->required();
    add_common(prepare, prep_flags);

    auto* train_cmd = app.add_subcommand("train", "Train a model");
    std::string train_data, train_eval, train_log, train_ckpt;
    std::optional<std::size_t> train_epochs;
    std::optional<double> train_lr, train_beta;
    std::size_t train_repeats = 1;
    add_common(train_cmd, train_flags);
    train_cmd->add_option("--data", train_data, "Training JSONL (overrides data.train)");
    train_cmd->add_option("--eval-data", train_eval, "Evaluation JSONL (overrides data.eval; default: training set)");
    train_cmd->add_option("--epochs", train_epochs, "Overrides train.epochs");
    train_cmd->add_option("--lr", train_lr, "Overrides train.lr");
    train_cmd->add_option("--beta", train_beta, "Overrides train.beta");
    train_cmd->add_option("--metrics-log", train_log, "Write the per-epoch metrics log here instead of stdout");
    train_cmd->add_option("--checkpoint", train_ckpt, "Write the best-by-macro-F1 parameters here");
    train_cmd->add_option("--repeats", train_repeats, "Sequential runs with seeds seed, seed+1, ...; reports are averaged");

    auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint");
    std::string eval_ckpt, eval_data;
    std::size_t eval_threads = 0;
    eval_cmd->add_option("--checkpoint", eval_ckpt, "Checkpoint file")->required();
    eval_cmd->add_option("--data", eval_data, "Dataset JSONL")->required();
    eval_cmd->add_option("--threads", eval_threads, "Worker threads (0: all cores)");

    auto* grad_cmd = app.add_subcommand("gradcheck", "Finite-difference check of every parameter group");
    std::string grad_data;
    std::size_t grad_index = 0;
    std::optional<double> grad_beta;
    double grad_tol = 1e-4;
    bool grad_verbose = false;
    add_common(grad_cmd, grad_flags);
    grad_cmd->add_option("--data", grad_data, "Take the instance from this JSONL instead of synthesising one");
    grad_cmd->add_option("--index", grad_index, "Record index within --data");
    grad_cmd->add_option("--beta", grad_beta, "Overrides train.beta");
    grad_cmd->add_option("--tolerance", grad_tol, "Maximum relative error");
    grad_cmd->add_flag("--per-parameter", grad_verbose, "Also list every parameter tensor");

    auto* anchor_cmd = app.add_subcommand("anchors", "Dump anchor scores and triplet labels per instance");
    std::string anchor_data, anchor_ckpt;
    std::optional<double> anchor_c;
    std::size_t anchor_limit = 0;
    add_common(anchor_cmd, anchor_flags);
    anchor_cmd->add_option("--data", anchor_data, "Dataset JSONL")->required();
    anchor_cmd->add_option("--checkpoint", anchor_ckpt, "Use trained attention weights");
    anchor_cmd->add_option("--c", anchor_c, "Overrides triplet.anchor_c");
    anchor_cmd->add_option("--limit", anchor_limit, "Only the first N instances (0: all)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kOk : kUsage;
    }

    try {
        if (*synth) return cmd_synth(synth_instances, synth_vocab, synth_seed, synth_knowledge, synth_compact, synth_out);
        if (*prepare) return cmd_prepare(prep_data, prep_flags);
        if (*train_cmd)
            return cmd_train(train_flags, train_data, train_eval, train_epochs, train_lr, train_beta, train_log,
                             train_ckpt, train_repeats);
        if (*eval_cmd) return cmd_eval(eval_ckpt, eval_data, eval_threads);
        if (*grad_cmd) return cmd_gradcheck(grad_flags, grad_data, grad_index, grad_beta, grad_tol, grad_verbose);
        if (*anchor_cmd) return cmd_anchors(anchor_flags, anchor_data, anchor_ckpt, anchor_c, anchor_limit);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kUsage;
    } catch (const NumericError& e) {
        std::fprintf(stderr, "numeric error: %s\n", e.what());
        return kNumeric;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kData;
    }
    return kUsage;
}
