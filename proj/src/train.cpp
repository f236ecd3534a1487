#include "mlgcn/train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "mlgcn/baselines.hpp"
#include "mlgcn/dataset_io.hpp"
#include "mlgcn/error.hpp"

namespace mlgcn {

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0)) throw InputError("learning rate must be positive");
    if (batch_size == 0 || patience == 0 || max_epochs == 0) {
        throw InputError("batch size, patience and max epochs must be positive");
    }
    if (!(ratios.train > 0.0 && ratios.test > 0.0 && ratios.validation > 0.0)) {
        throw InputError("split ratios must be positive");
    }
    if (std::abs(ratios.train + ratios.test + ratios.validation - 1.0) > 1e-12) {
        throw InputError("split ratios must sum to 1");
    }
}

DatasetSplit split_dataset(std::size_t n, const SplitRatios& ratios, std::uint64_t seed) {
    TrainConfig probe;
    probe.ratios = ratios;
    probe.validate();
    auto count = [n](double r) {
        return static_cast<std::size_t>(std::floor(static_cast<double>(n) * r + 1e-9));
    };
    const std::size_t n_test = count(ratios.test);
    const std::size_t n_val = count(ratios.validation);
    if (n_test == 0 || n_val == 0 || n_test + n_val >= n) {
        throw InputError("dataset of " + std::to_string(n) + " samples is too small to populate all splits");
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    DatasetSplit s;
    s.test.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_test));
    s.validation.assign(order.begin() + static_cast<std::ptrdiff_t>(n_test),
                        order.begin() + static_cast<std::ptrdiff_t>(n_test + n_val));
    s.train.assign(order.begin() + static_cast<std::ptrdiff_t>(n_test + n_val), order.end());
    return s;
}

namespace {

std::vector<ChannelRange> channel_ranges(const FeatureSchema& schema) {
    std::vector<ChannelRange> r;
    for (const Channel& c : schema) r.push_back({c.name, INFINITY, -INFINITY});
    return r;
}

void widen(std::vector<ChannelRange>& ranges, const Tensor& values) {
    for (std::size_t i = 0; i < values.rows(); ++i) {
        for (std::size_t c = 0; c < ranges.size(); ++c) {
            ranges[c].min = std::min(ranges[c].min, values(i, c));
            ranges[c].max = std::max(ranges[c].max, values(i, c));
        }
    }
}

void scale(Tensor& values, const std::vector<ChannelRange>& ranges) {
    if (values.cols() != ranges.size()) throw InputError("normalization channel count mismatch");
    for (std::size_t i = 0; i < values.rows(); ++i) {
        for (std::size_t c = 0; c < ranges.size(); ++c) {
            values(i, c) = (values(i, c) - ranges[c].min) / (ranges[c].max - ranges[c].min);
        }
    }
}

}  // namespace

void NormalizationStats::apply(GraphSample& sample) const {
    if (sample.normalized) throw InputError("sample is already normalized");
    scale(sample.mesh_features.values, mesh);
    scale(sample.cluster_features.values, cluster);
    sample.normalized = true;
}

NormalizationStats fit_normalization(std::span<const GraphSample> samples, std::span<const std::size_t> train) {
    if (train.empty()) throw InputError("normalization needs a non-empty training split");
    NormalizationStats stats;
    stats.mesh = channel_ranges(samples[train[0]].mesh_features.schema);
    stats.cluster = channel_ranges(samples[train[0]].cluster_features.schema);
    for (std::size_t i : train) {
        if (samples[i].normalized) throw InputError("normalization must be fitted on raw features");
        widen(stats.mesh, samples[i].mesh_features.values);
        widen(stats.cluster, samples[i].cluster_features.values);
    }
    for (const auto* level : {&stats.mesh, &stats.cluster}) {
        for (const ChannelRange& r : *level) {
            if (!(r.max > r.min)) {
                throw InputError("channel '" + r.name + "' has zero range over the training split");
            }
        }
    }
    return stats;
}

NormalizationStats normalize(std::vector<GraphSample>& samples, std::span<const std::size_t> train) {
    NormalizationStats stats = fit_normalization(samples, train);
    for (GraphSample& s : samples) stats.apply(s);
    return stats;
}

std::string format_normalization(const NormalizationStats& stats) {
    std::ostringstream out;
    for (const auto& r : stats.mesh) out << "mesh " << r.name << ' ' << format_real(r.min) << ' ' << format_real(r.max) << '\n';
    for (const auto& r : stats.cluster)
        out << "cluster " << r.name << ' ' << format_real(r.min) << ' ' << format_real(r.max) << '\n';
    return out.str();
}

NormalizationStats parse_normalization(const std::string& text) {
    NormalizationStats stats;
    std::istringstream in(text);
    std::string level;
    ChannelRange r;
    while (in >> level >> r.name >> r.min >> r.max) {
        if (level == "mesh") {
            stats.mesh.push_back(r);
        } else if (level == "cluster") {
            stats.cluster.push_back(r);
        } else {
            throw InputError("normalization: unknown level '" + level + "'");
        }
    }
    if (!in.eof()) throw InputError("normalization: malformed record");
    return stats;
}

Metrics score(std::span<const double> predictions, std::span<const double> labels) {
    if (predictions.size() != labels.size() || predictions.empty()) {
        throw InputError("score: predictions and labels must be non-empty and of equal length");
    }
    Metrics m;
    m.count = predictions.size();
    double se = 0.0;
    for (std::size_t i = 0; i < predictions.size(); ++i) se += (predictions[i] - labels[i]) * (predictions[i] - labels[i]);
    m.rmse = std::sqrt(se / static_cast<double>(predictions.size()));
    m.rho = predictions.size() >= 2 ? pearson(predictions, labels) : std::nullopt;
    return m;
}

Metrics evaluate(const Model& model, std::span<const GraphSample> samples, std::span<const std::size_t> indices) {
    if (indices.empty()) throw InputError("evaluate: empty split");
    std::vector<double> pred, label;
    for (std::size_t i : indices) {
        if (!samples[i].label) throw InputError("evaluate: sample " + std::to_string(i) + " has no label");
        pred.push_back(predict(model, samples[i]));
        label.push_back(*samples[i].label);
    }
    return score(pred, label);
}

double mean_loss(const Model& model, std::span<const GraphSample> samples, std::span<const std::size_t> indices) {
    double total = 0.0;
    for (std::size_t i : indices) {
        const double d = predict(model, samples[i]) - samples[i].label.value();
        total += d * d;
    }
    return total / static_cast<double>(indices.size());
}

const char* to_string(StopReason r) { return r == StopReason::patience ? "patience" : "max_epochs"; }

TrainReport fit(Model& model, std::span<const GraphSample> samples, const DatasetSplit& split,
                const TrainConfig& config, const EpochCallback& on_epoch) {
    config.validate();
    if (split.train.empty() || split.test.empty()) throw InputError("fit: training and test splits must be non-empty");
    for (const auto* part : {&split.train, &split.test}) {
        for (std::size_t i : *part) {
            if (i >= samples.size()) throw InputError("fit: split index out of range");
            if (!samples[i].label) throw InputError("fit: sample " + std::to_string(i) + " has no label");
            if (!samples[i].normalized) throw InputError("fit: sample " + std::to_string(i) + " is not normalized");
        }
    }

    std::vector<Tensor>& params = model.parameters();
    OptimizerState state = make_optimizer_state(params);
    std::mt19937_64 rng(config.shuffle_seed);
    std::vector<std::size_t> order = split.train;

    TrainReport report;
    report.best_test_loss = INFINITY;
    std::vector<Tensor> best = params;
    std::vector<Tensor> batch_grad;
    for (const Tensor& p : params) batch_grad.emplace_back(p.rows(), p.cols());

    for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double epoch_loss = 0.0;
        for (std::size_t start = 0, batch = 0; start < order.size(); start += config.batch_size, ++batch) {
            const std::size_t end = std::min(order.size(), start + config.batch_size);
            for (Tensor& g : batch_grad) g.fill(0.0);
            double batch_loss = 0.0;
            for (std::size_t b = start; b < end; ++b) {
                Tape tape(params.size());
                const Var loss = sample_loss(tape, model, samples[order[b]], params);
                batch_loss += tape.value(loss)(0, 0);
                tape.backward(loss);
                const auto& grads = tape.parameter_gradients();
                for (std::size_t k = 0; k < params.size(); ++k) {
                    if (grads[k].empty()) continue;
                    auto& dst = batch_grad[k].values();
                    const auto& src = grads[k].values();
                    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
                }
            }
            if (!std::isfinite(batch_loss)) {
                throw NumericalError("non-finite training loss at epoch " + std::to_string(epoch) + ", batch " +
                                     std::to_string(batch));
            }
            const double inv = 1.0 / static_cast<double>(end - start);
            for (Tensor& g : batch_grad)
                for (double& v : g.values()) v *= inv;
            adam_update(params, batch_grad, state, config.learning_rate);
            epoch_loss += batch_loss;
        }

        EpochRecord rec{epoch, epoch_loss / static_cast<double>(order.size()), mean_loss(model, samples, split.test)};
        if (!std::isfinite(rec.test_loss)) {
            throw NumericalError("non-finite test loss at epoch " + std::to_string(epoch));
        }
        report.history.push_back(rec);
        if (on_epoch) on_epoch(rec);
        if (rec.test_loss < report.best_test_loss) {
            report.best_test_loss = rec.test_loss;
            report.best_epoch = epoch;
            best = params;
        }
        if (epoch - report.best_epoch >= config.patience) {
            report.reason = StopReason::patience;
            break;
        }
    }

    params = best;
    if (!split.validation.empty()) report.validation = evaluate(model, samples, split.validation);
    return report;
}

std::string format_metrics(const Metrics& m) {
    std::ostringstream out;
    out << "rmse = " << format_real(m.rmse) << '\n';
    out << "rho = " << (m.rho ? format_real(*m.rho) : std::string("degenerate")) << '\n';
    out << "count = " << m.count << '\n';
    return out.str();
}

void write_run_directory(const std::filesystem::path& dir,
                         const std::vector<std::pair<std::string, std::string>>& config_snapshot,
                         const Model& model, const NormalizationStats& stats, const TrainReport& report) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());

    auto write_text = [](const std::filesystem::path& path, const std::string& text) {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw IoError("cannot open " + path.string() + " for writing");
        out << text;
        if (!out) throw IoError("failed writing " + path.string());
    };

    std::ostringstream cfg;
    for (const auto& [k, v] : config_snapshot) cfg << k << " = " << v << '\n';
    write_text(dir / "config.txt", cfg.str());

    std::ostringstream log;
    log << "epoch train_loss test_loss\n";
    for (const auto& e : report.history)
        log << e.epoch << ' ' << format_real(e.train_loss) << ' ' << format_real(e.test_loss) << '\n';
    write_text(dir / "epochs.txt", log.str());

    write_checkpoint(dir / "checkpoint.bin", model);
    write_text(dir / "normalization.txt", format_normalization(stats));

    std::ostringstream metrics;
    metrics << format_metrics(report.validation);
    metrics << "best_epoch = " << report.best_epoch << '\n';
    metrics << "best_test_loss = " << format_real(report.best_test_loss) << '\n';
    metrics << "epochs = " << report.history.size() << '\n';
    metrics << "stop = " << to_string(report.reason) << '\n';
    write_text(dir / "metrics.txt", metrics.str());
}

}  // namespace mlgcn
