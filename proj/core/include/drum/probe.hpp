#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "drum/config.hpp"
#include "drum/dataset.hpp"
#include "drum/layers.hpp"
#include "drum/network.hpp"

namespace drum {

enum class ProbeTarget { weyl, vertices, edges_angles };

std::string_view probe_target_name(ProbeTarget t);
/// Throws ConfigError for unknown names.
ProbeTarget parse_probe_target(std::string_view name);

/// Target vector of a record. `vertices` omits y0, which the gauge pins to 0.
std::vector<double> probe_targets(const SampleRecord& r, ProbeTarget t);
std::vector<std::string> probe_target_labels(ProbeTarget t);

struct ProbeConfig {
    int hidden_layers = 1;  ///< 0..5
    int width = 50;
    double leaky_slope = 0.3;
    ProbeTarget target = ProbeTarget::weyl;
    double learning_rate = 1e-3;
    int epochs = 200;
    int batch_size = 32;
    std::uint64_t seed = 3;

    void validate() const;
    static ProbeConfig from_config(const KeyValueConfig& c);
    static std::span<const std::string_view> keys();
};

/// Small MLP on the frozen latent (inputs and targets standardized internally).
class Probe {
public:
    Probe(const ProbeConfig& config, int inputs, int outputs);

    const ProbeConfig& config() const noexcept { return config_; }
    std::vector<double> predict(std::span<const double> latent) const;

    /// MSE training on standardized data; returns the final training MSE.
    double fit(std::span<const std::vector<double>> latents, std::span<const std::vector<double>> targets);

private:
    nn::Vec run(const nn::Vec& x, std::vector<nn::Vec>* pre, std::vector<nn::Vec>* act) const;

    ProbeConfig config_;
    std::vector<nn::Dense> layers_;
    std::vector<double> params_;
    std::vector<double> in_mean_, in_std_, out_mean_, out_std_;
};

struct ProbeReport {
    ProbeTarget target = ProbeTarget::weyl;
    int hidden_layers = 0;
    std::vector<std::string> labels;
    /// Mean over samples of |pred - true| / (|true| + 1e-9), per component.
    std::vector<double> component_error;
    double mean_error = 0.0;
    double train_mse = 0.0;
    std::size_t test_samples = 0;
};

struct ProbeResult {
    Probe probe;
    ProbeReport report;
};

std::vector<std::vector<double>> latents_of(const Network& net, std::span<const SampleRecord> records);

/// Trains a probe on the frozen encoder's latents and scores it on `test_set`.
ProbeResult probe_train(const Network& net, std::span<const SampleRecord> train_set,
                        std::span<const SampleRecord> test_set, const ProbeConfig& config);

double mean_percentage_error(std::span<const std::vector<double>> pred, std::span<const std::vector<double>> truth,
                             std::vector<double>* per_component = nullptr);

/// CSV "target,hidden_layers,component,mean_pct_error".
void write_probe_csv(std::ostream& os, std::span<const ProbeReport> reports);

/// (a, b, k) estimate for a record whose spectrum is scaled by S.
using WeylPredictor = std::function<std::array<double, 3>(const SampleRecord&, double S)>;

/// Exact Weyl scaling of the record's geometric parameters: (a/S, b/sqrt(S), k).
WeylPredictor weyl_oracle();
/// Probe (trained on the Weyl target) applied to the latent of the scaled spectrum.
WeylPredictor weyl_probe_predictor(const Network& net, const Probe& probe);

struct ProbeScalingRow {
    double S = 1.0;
    double area = 0.0;       ///< mean predicted 4 pi a
    double perimeter = 0.0;  ///< mean predicted 4 pi b
    double corner = 0.0;     ///< mean predicted k
};

struct ProbeScalingReport {
    std::vector<ProbeScalingRow> rows;
    double area_exponent = 0.0;
    double perimeter_exponent = 0.0;
    double corner_slope = 0.0;
    std::size_t samples_used = 0;
};

/// Restricts to records whose shape, scaled by 1/sqrt(S), stays inside the
/// grid for every S, then averages the predictions per S. Exponents are
/// log-log least-squares slopes; the corner slope is linear in S.
ProbeScalingReport probe_scaling(const WeylPredictor& predictor, std::span<const SampleRecord> records,
                                 std::span<const double> S_values);

/// CSV "S,area,perimeter,corner".
void write_probe_scaling_csv(std::ostream& os, const ProbeScalingReport& report);
/// CSV "quantity,value" with the fitted exponents and the sample count.
void write_probe_scaling_fit_csv(std::ostream& os, const ProbeScalingReport& report);

}  // namespace drum
