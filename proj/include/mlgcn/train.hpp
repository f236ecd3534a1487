#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mlgcn/architectures.hpp"

namespace mlgcn {

struct SplitRatios {
    double train = 0.7;
    double test = 0.2;
    double validation = 0.1;
};

struct TrainConfig {
    double learning_rate = 0.001;
    std::size_t batch_size = 32;
    std::size_t patience = 100;
    std::size_t max_epochs = 1000;
    SplitRatios ratios;
    std::uint64_t split_seed = 0;
    std::uint64_t init_seed = 0;
    std::uint64_t shuffle_seed = 0;

    void validate() const;
};

struct DatasetSplit {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
    std::vector<std::size_t> validation;
};

// Test and validation sizes are floor(n * ratio); the remainder trains.
// Throws InputError when a split would be empty.
DatasetSplit split_dataset(std::size_t n, const SplitRatios& ratios, std::uint64_t seed);

struct ChannelRange {
    std::string name;
    double min = 0.0;
    double max = 1.0;
};

// Min-max statistics of the mesh and cluster input channels.
struct NormalizationStats {
    std::vector<ChannelRange> mesh;
    std::vector<ChannelRange> cluster;

    // Maps each channel affinely so that the training min goes to 0 and the
    // training max to 1. Values outside the training range map outside
    // [0, 1]. Labels are untouched.
    void apply(GraphSample& sample) const;
};

// Statistics over the given training indices only. Throws InputError naming
// the channel when its training range is zero.
NormalizationStats fit_normalization(std::span<const GraphSample> samples, std::span<const std::size_t> train);

// Fits on `train` and applies to every sample.
NormalizationStats normalize(std::vector<GraphSample>& samples, std::span<const std::size_t> train);

std::string format_normalization(const NormalizationStats& stats);
NormalizationStats parse_normalization(const std::string& text);

struct Metrics {
    double rmse = 0.0;
    std::optional<double> rho;  // nullopt: degenerate prediction or label series
    std::size_t count = 0;
};

Metrics evaluate(const Model& model, std::span<const GraphSample> samples, std::span<const std::size_t> indices);

// Metrics of arbitrary predictions against labels.
Metrics score(std::span<const double> predictions, std::span<const double> labels);

double mean_loss(const Model& model, std::span<const GraphSample> samples, std::span<const std::size_t> indices);

struct EpochRecord {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double test_loss = 0.0;
};

enum class StopReason { patience, max_epochs };

const char* to_string(StopReason r);

struct TrainReport {
    std::vector<EpochRecord> history;
    std::size_t best_epoch = 0;
    double best_test_loss = 0.0;
    StopReason reason = StopReason::max_epochs;
    Metrics validation;
};

// Progress hook, called after every epoch.
using EpochCallback = std::function<void(const EpochRecord&)>;

// Mini-batch Adam on the MSE loss. The test loss is evaluated after every
// epoch; training stops once `patience` epochs pass without improvement or at
// max_epochs, and the model is left holding the best-test-loss parameters.
// Throws NumericalError on a non-finite loss, naming the epoch and batch.
TrainReport fit(Model& model, std::span<const GraphSample> samples, const DatasetSplit& split,
                const TrainConfig& config, const EpochCallback& on_epoch = {});

// Run directory layout:
//   config.txt         key = value snapshot, accepted back by --config
//   epochs.txt         epoch train_loss test_loss
//   checkpoint.bin     best parameters
//   normalization.txt  input scaling
//   metrics.txt        validation metrics and stopping summary
void write_run_directory(const std::filesystem::path& dir,
                         const std::vector<std::pair<std::string, std::string>>& config_snapshot,
                         const Model& model, const NormalizationStats& stats, const TrainReport& report);

std::string format_metrics(const Metrics& m);

}  // namespace mlgcn
