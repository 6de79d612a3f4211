#include "emgf/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <thread>

namespace emgf {

Adam::Adam(ParameterStore& store, double lr, double beta1, double beta2, double eps)
    : store_(store), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
    for (const auto& p : store_.all()) {
        m_.emplace_back(p.value.size(), 0.0);
        v_.emplace_back(p.value.size(), 0.0);
    }
}

void Adam::step() {
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    auto& params = store_.all();
    for (std::size_t k = 0; k < params.size(); ++k) {
        auto values = params[k].value.data();
        const auto grad = params[k].value.grad();
        if (grad.empty()) continue;
        auto& m = m_[k];
        auto& v = v_[k];
        for (std::size_t i = 0; i < values.size(); ++i) {
            m[i] = beta1_ * m[i] + (1.0 - beta1_) * grad[i];
            v[i] = beta2_ * v[i] + (1.0 - beta2_) * grad[i] * grad[i];
            values[i] -= lr_ * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps_);
        }
    }
}

std::string format_epoch(const EpochRecord& r) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%zu\t%.10f\t%.10f\t%.10f\t%.6f\t%.6f", r.epoch, r.train_loss, r.class_loss, r.triplet,
                  r.eval_accuracy, r.eval_macro_f1);
    return buf;
}

ParameterSnapshot snapshot(const ParameterStore& store) {
    ParameterSnapshot s;
    for (const auto& p : store.all()) s.emplace_back(p.value.data().begin(), p.value.data().end());
    return s;
}

void restore(ParameterStore& store, const ParameterSnapshot& values) {
    auto& params = store.all();
    if (values.size() != params.size()) throw ConfigError("snapshot does not match the parameter layout");
    for (std::size_t k = 0; k < params.size(); ++k) {
        if (values[k].size() != params[k].value.size()) throw ConfigError("snapshot size mismatch at " + params[k].name);
        std::copy(values[k].begin(), values[k].end(), params[k].value.data().begin());
    }
}

namespace {

void check_finite(double v, const char* what, std::size_t epoch, std::size_t batch) {
    if (!std::isfinite(v))
        throw NumericError(std::string(what) + " became non-finite at epoch " + std::to_string(epoch) + ", batch " +
                           std::to_string(batch));
}

Confusion confusion_of(const Model& model, const std::vector<PreparedInstance>& data, std::size_t begin, std::size_t end) {
    Tape::NoGrad no_grad;
    Confusion c{};
    ForwardOptions options;
    options.triplet = false;
    for (std::size_t i = begin; i < end; ++i) {
        const auto out = model.forward(data[i], options);
        c[data[i].gold][out.predicted()] += 1;
    }
    return c;
}

}  // namespace

EvalReport evaluate(const Model& model, const std::vector<PreparedInstance>& data, std::size_t threads) {
    if (data.empty()) throw DataError("evaluation set is empty");
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = std::min(threads, data.size());
    if (threads == 1) return report_from_confusion(confusion_of(model, data, 0, data.size()));

    std::vector<Confusion> parts(threads);
    std::vector<std::exception_ptr> errors(threads);
    std::vector<std::thread> workers;
    const std::size_t chunk = (data.size() + threads - 1) / threads;
    for (std::size_t t = 0; t < threads; ++t)
        workers.emplace_back([&, t] {
            try {
                const std::size_t begin = std::min(data.size(), t * chunk);
                parts[t] = confusion_of(model, data, begin, std::min(data.size(), begin + chunk));
            } catch (...) {
                errors[t] = std::current_exception();
            }
        });
    for (auto& w : workers) w.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    Confusion total{};
    for (const auto& p : parts) total = merge(total, p);
    return report_from_confusion(total);
}

LossBreakdown mean_loss(const Model& model, const std::vector<PreparedInstance>& data, double beta) {
    if (data.empty()) throw DataError("loss over an empty dataset");
    Tape::NoGrad no_grad;
    LossBreakdown b;
    for (const auto& inst : data) {
        const auto out = model.forward(inst);
        b.class_loss += out.class_loss.item();
        b.triplet += out.triplet.item();
    }
    const double n = static_cast<double>(data.size());
    b.class_loss /= n;
    b.triplet /= n;
    b.total = b.class_loss + beta * b.triplet;
    return b;
}

TrainResult train(Model& model, const std::vector<PreparedInstance>& train_set,
                  const std::vector<PreparedInstance>& eval_set, const TrainConfig& config, const TrainHooks& hooks) {
    config.validate();
    if (train_set.empty()) throw DataError("training set is empty");
    const auto& evaluation = eval_set.empty() ? train_set : eval_set;

    std::mt19937_64 order_rng(config.seed ^ 0x5EEDF00DULL);
    std::mt19937_64 dropout_rng(config.seed);
    Adam adam(model.parameters(), config.lr, config.adam_beta1, config.adam_beta2, config.adam_eps);
    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), 0);

    TrainResult result;
    if (hooks.metrics_log) *hooks.metrics_log << kMetricsHeader << '\n';
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), order_rng);
        double epoch_total = 0.0, epoch_lc = 0.0, epoch_lt = 0.0;
        for (std::size_t start = 0, batch = 0; start < order.size(); start += config.batch_size, ++batch) {
            const std::size_t end = std::min(order.size(), start + config.batch_size);
            const double scale_by = 1.0 / static_cast<double>(end - start);
            BatchRecord rec;
            rec.epoch = epoch;
            rec.batch = batch;
            rec.instances = end - start;
            model.parameters().zero_grad();
            for (std::size_t k = start; k < end; ++k) {
                Tape tape;
                Tensor loss;
                ForwardResult out;
                {
                    Tape::Scope scope(tape);
                    ForwardOptions options;
                    options.train = true;
                    options.rng = &dropout_rng;
                    out = model.forward(train_set[order[k]], options);
                    loss = scale(add(out.class_loss, scale(out.triplet, config.beta)), scale_by);
                }
                tape.backward(loss);
                rec.total += loss.item();
                rec.class_loss += out.class_loss.item() * scale_by;
                rec.triplet += out.triplet.item() * scale_by;
            }
            check_finite(rec.total, "training loss", epoch, batch);
            adam.step();
            epoch_total += rec.total * static_cast<double>(rec.instances);
            epoch_lc += rec.class_loss * static_cast<double>(rec.instances);
            epoch_lt += rec.triplet * static_cast<double>(rec.instances);
            result.batches.push_back(rec);
        }
        for (const auto& p : model.parameters().all())
            for (double x : p.value.data()) check_finite(x, ("parameter " + p.name).c_str(), epoch, 0);

        const double n = static_cast<double>(train_set.size());
        const EvalReport report = evaluate(model, evaluation);
        EpochRecord er{epoch, epoch_total / n, epoch_lc / n, epoch_lt / n, report.accuracy, report.macro_f1};
        result.epochs.push_back(er);
        if (er.eval_macro_f1 > result.best_macro_f1) {
            result.best_macro_f1 = er.eval_macro_f1;
            result.best_epoch = epoch;
            result.best = snapshot(model.parameters());
        }
        if (hooks.metrics_log) *hooks.metrics_log << format_epoch(er) << '\n' << std::flush;
        if (hooks.on_epoch) hooks.on_epoch(er);
    }
    return result;
}

void save_checkpoint(const std::filesystem::path& path, const ExperimentConfig& config, const ParameterStore& store) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write checkpoint " + path.string());
    out << "emgf-checkpoint 1\n";
    std::istringstream cfg(to_text(config));
    std::string line;
    std::vector<std::string> cfg_lines;
    while (std::getline(cfg, line)) cfg_lines.push_back(line);
    out << "config " << cfg_lines.size() << '\n';
    for (const auto& l : cfg_lines) out << l << "\n";
    out << "parameters " << store.all().size() << '\n';
    char buf[32];
    for (const auto& p : store.all()) {
        out << p.name << ' ' << p.value.rows() << ' ' << p.value.cols() << '\n';
        bool first = true;
        for (double x : p.value.data()) {
            std::snprintf(buf, sizeof buf, "%.17g", x);
            out << (first ? "" : " ") << buf;
            first = false;
        }
        out << '\n';
    }
    if (!out) throw DataError("failed while writing checkpoint " + path.string());
}

LoadedModel load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open checkpoint " + path.string());
    auto fail = [&](const std::string& what) { return DataError(path.string() + ": " + what); };
    std::string line;
    if (!std::getline(in, line) || line != "emgf-checkpoint 1") throw fail("not a version-1 checkpoint");
    std::string word;
    std::size_t count = 0;
    if (!(in >> word >> count) || word != "config") throw fail("missing config section");
    std::getline(in, line);
    std::string cfg_text;
    for (std::size_t i = 0; i < count; ++i) {
        if (!std::getline(in, line)) throw fail("truncated config section");
        cfg_text += line + '\n';
    }
    ExperimentConfig config;
    std::istringstream cfg_in(cfg_text);
    apply_config_text(config, cfg_in, path.string());

    Model model(config.model, config.train.seed);
    auto& params = model.parameters().all();
    if (!(in >> word >> count) || word != "parameters" || count != params.size())
        throw fail("parameter count does not match the configured model");
    for (auto& p : params) {
        std::string name;
        std::size_t rows = 0, cols = 0;
        if (!(in >> name >> rows >> cols)) throw fail("truncated parameter header");
        if (name != p.name || rows != p.value.rows() || cols != p.value.cols())
            throw fail("parameter '" + name + "' does not match expected '" + p.name + "' " +
                       shape_to_string(p.value.shape()));
        for (double& x : p.value.data()) {
            std::string token;
            if (!(in >> token)) throw fail("truncated values for " + name);
            try {
                x = std::stod(token);
            } catch (const std::exception&) {
                throw fail("bad value '" + token + "' in " + name);
            }
        }
    }
    return {std::move(config), std::move(model)};
}

}  // namespace emgf
