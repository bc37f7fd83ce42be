#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "drum/config.hpp"
#include "drum/dataset.hpp"
#include "drum/loss.hpp"
#include "drum/network.hpp"

namespace drum {

struct TrainConfig {
    double learning_rate = 1e-3;
    /// lr_t = learning_rate / (1 + decay * t), t = optimizer steps taken.
    double decay = 1e-5;
    int batch_size = 32;
    /// Epochs per chunk go linearly from epochs_first to epochs_last; with
    /// one chunk the whole training set runs for epochs_first epochs.
    int chunks = 1;
    int epochs_first = 30;
    int epochs_last = 30;
    double validation_fraction = 0.2;
    std::uint64_t seed = 1;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_epsilon = 1e-7;

    /// Throws ConfigError naming the offending field.
    void validate() const;
    int total_epochs() const;
    static TrainConfig from_config(const KeyValueConfig& c);
    KeyValueConfig to_config() const;
    static std::span<const std::string_view> keys();
};

/// Adam with the 1 / (1 + decay t) learning-rate schedule.
class Adam {
public:
    Adam(std::size_t n, const TrainConfig& config);
    /// Applies one update; returns the learning rate used.
    double step(std::span<double> params, std::span<const double> grad);
    std::uint64_t steps() const noexcept { return t_; }

private:
    std::vector<double> m_, v_;
    TrainConfig config_;
    std::uint64_t t_ = 0;
};

/// Network input for a record: spacings of its eigenvalues, truncated to the model input length.
std::vector<double> model_input(const SampleRecord& r, std::size_t length);

/// Per-position mean and standard deviation of the inputs (std floored at 1e-12).
void input_statistics(std::span<const std::vector<double>> inputs, std::vector<double>& mean, std::vector<double>& stddev);

struct EpochRow {
    int epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
    double learning_rate = 0.0;
};

struct TrainReport {
    std::vector<EpochRow> epochs;
    int best_epoch = 0;
    double best_val_loss = 0.0;
    /// Parameters at the best validation loss (copied into the network on return).
    std::vector<double> best_params;
    bool diverged = false;
};

/// Mean D4 loss of the model (evaluation form, no clamp).
double mean_d4_loss(const Network& net, std::span<const SampleRecord> records);

/// Trains with the D4-minimized Jaccard loss. Samples of a batch are split
/// into a fixed number of gradient groups reduced in a fixed order, so results
/// do not depend on the worker count. On a non-finite loss training stops and
/// the best parameters so far are restored. `on_epoch` sees each row as it is produced.
TrainReport train(Network& net, std::span<const SampleRecord> train_set, std::span<const SampleRecord> val_set,
                  const TrainConfig& config, const std::function<void(const EpochRow&)>& on_epoch = {});

/// CSV "epoch,train_loss,val_loss,lr".
void write_training_csv(std::ostream& os, std::span<const EpochRow> rows);

/// Training loss and its gradient for one sample (accumulated into `grad`).
D4Loss sample_loss_grad(const Network& net, std::span<const double> input, const RasterImage& truth,
                        std::span<double> grad, Network::Cache& cache);

struct GradCheckOptions {
    double epsilon = 1e-5;
    int parameters = 100;
    std::uint64_t seed = 7;
    /// Denominator floor of the relative deviation.
    double floor = 1e-6;
    /// A second-best D4 loss within this gap marks an argmin tie.
    double tie_gap = 1e-6;
};

struct GradCheckReport {
    double max_deviation = 0.0;
    int checked = 0;
    /// Parameters whose +-epsilon probes changed a ReLU pattern or the D4 argmin.
    int excluded = 0;
    /// The sample sits near a D4 argmin tie; its result is not meaningful.
    bool argmin_tie = false;
};

/// Central differences versus the analytic gradient on a random parameter subset.
/// Deviation = |analytic - numeric| / max(|analytic|, |numeric|, floor).
GradCheckReport gradient_check(Network& net, std::span<const double> input, const RasterImage& truth,
                               const GradCheckOptions& options = {});

struct ConstantBaseline {
    double threshold = 0.0;
    RasterImage image;
    double train_loss = 1.0;
};

/// Best single image among thresholds of the mean training image (grid of
/// `steps` thresholds in (0, 1)), scored by mean D4 loss over the training set.
ConstantBaseline constant_image_baseline(std::span<const SampleRecord> train_set, int steps = 50);
double mean_constant_loss(const RasterImage& image, std::span<const SampleRecord> records);

}  // namespace drum
