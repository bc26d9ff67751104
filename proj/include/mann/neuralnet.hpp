#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mann/common.hpp"

namespace mann {

inline constexpr int kRsrqBins = 10;
inline constexpr int kInputWidth = kRsrqBins + 2;
inline constexpr int kHiddenWidth = 32;
inline constexpr int kHiddenLayers = 5;

using FeatureVector = std::array<double, kInputWidth>;

enum class Activation { tanh, sigmoid };

std::string_view to_string(Activation a);
Activation activation_from_string(std::string_view s);

/// Fully connected layer; weights are row-major [out][in].
struct DenseLayer {
    int in = 0;
    int out = 0;
    std::vector<double> weights;
    std::vector<double> biases;
    Activation activation = Activation::tanh;

    double& w(int row, int col) { return weights[static_cast<std::size_t>(row * in + col)]; }
    double w(int row, int col) const { return weights[static_cast<std::size_t>(row * in + col)]; }
};

struct MlpWeights {
    std::vector<DenseLayer> layers;

    std::vector<int> layer_dims() const;
    std::size_t parameter_count() const;

    /// Same shape, all parameters zero.
    MlpWeights zeros_like() const;

    /// Checks layer chaining and that every parameter is finite.
    void validate() const;

    /// tanh hidden layers and a sigmoid output, Glorot-uniform weights, zero biases.
    static MlpWeights initialized(std::span<const int> dims, std::uint64_t seed);
    /// The 12-32x5-1 regressor.
    static MlpWeights standard(std::uint64_t seed);
};

double forward(const MlpWeights& weights, std::span<const double> input);

struct Example {
    std::vector<double> input;
    double target = 0.0;
};

struct LossGradient {
    double loss = 0.0;
    MlpWeights gradient;
};

/// Mean squared error over the batch and its gradient by backpropagation.
LossGradient loss_and_gradient(const MlpWeights& weights, std::span<const Example> batch);

double mean_squared_error(const MlpWeights& weights, std::span<const Example> data);

struct AdamaxParams {
    double alpha = 0.002;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// Single-parameter Adamax update; `t` is the 1-based step count.
void adamax_update(double& w, double& m, double& u, double g, long t, const AdamaxParams& p);

class AdamaxOptimizer {
public:
    AdamaxOptimizer(const MlpWeights& shape, AdamaxParams params = {});

    /// Applies one step to `weights` and advances the timestep.
    void step(MlpWeights& weights, const MlpWeights& gradient);
    long timestep() const { return t_; }

private:
    AdamaxParams params_;
    MlpWeights m_;
    MlpWeights u_;
    long t_ = 0;
};

/// Scaling of raw features and targets into [0, 1].
struct NormalizationSpec {
    double bin_count_cap = 1.0;
    double output_max = 1.0;

    void validate() const;
};

/// One supervised sample: environment features, action and the observed metric.
struct SampleRecord {
    std::string drop_id;
    int cell_id = 0;
    int epoch_id = 0;
    std::array<int, kRsrqBins> bins{};
    int center_rbs = 40;
    int rsrq_threshold = kMinThreshold;
    double raw_metric = 0.0;

    friend bool operator==(const SampleRecord&, const SampleRecord&) = default;
};

FeatureVector make_features(std::span<const int, kRsrqBins> bins, int center_rbs, int rsrq_threshold,
                            const NormalizationSpec& spec);

struct NormalizedSample {
    FeatureVector input;
    double target = 0.0;
};

NormalizedSample normalize(const SampleRecord& sample, const NormalizationSpec& spec);

/// Caps from the data: largest per-bin count and largest raw metric.
NormalizationSpec fit_normalization(std::span<const SampleRecord> samples);

/// A trained regressor bundled with everything needed to use it.
struct RegressorModel {
    MlpWeights weights;
    NormalizationSpec normalization;
    MetricKind metric_kind = MetricKind::maxmin;
    std::uint64_t training_seed = 0;

    double predict(const FeatureVector& input) const { return forward(weights, input); }
    double predict(const SampleRecord& sample) const { return predict(normalize(sample, normalization).input); }
};

struct TrainingConfig {
    int batch_size = 50;
    int epochs = 30;
    double validation_fraction = 0.2;
    AdamaxParams adamax;
    std::uint64_t seed = 0;
    MetricKind metric_kind = MetricKind::maxmin;

    void validate() const;
};

struct EpochLoss {
    int epoch = 0;
    double train_loss = 0.0;
    double validation_loss = 0.0;
};

struct TrainResult {
    RegressorModel model;
    std::vector<EpochLoss> history;
    int best_epoch = 0;
};

inline constexpr std::size_t kMinTrainingSamples = 100;

/// Shuffles, holds out the validation split, trains with Adamax and returns
/// the weights of the epoch with the lowest validation loss.
TrainResult train(std::span<const SampleRecord> samples, const TrainingConfig& config);

void save_weights(const RegressorModel& model, const std::filesystem::path& path);
/// Throws Error on malformed files; with `expected_metric` set, also on a
/// metric tag mismatch.
RegressorModel load_weights(const std::filesystem::path& path,
                            std::optional<MetricKind> expected_metric = std::nullopt);

}  // namespace mann
