#include "drum/probe.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>

#include "drum/error.hpp"
#include "drum/parallel.hpp"
#include "drum/training.hpp"

namespace drum {

namespace {

void standardize_stats(std::span<const std::vector<double>> rows, std::vector<double>& mean, std::vector<double>& sd) {
    input_statistics(rows, mean, sd);
    // Constant columns (no information) get unit scale instead of the 1e-12 floor.
    for (double& s : sd)
        if (s < 1e-9) s = 1.0;
}

/// Least-squares slope of y against x.
double slope(std::span<const double> x, std::span<const double> y) {
    const auto n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    return sxx > 0.0 ? sxy / sxx : std::numeric_limits<double>::quiet_NaN();
}

double log_log_slope(std::span<const double> x, std::span<const double> y) {
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0 && y[i] > 0.0)) return std::numeric_limits<double>::quiet_NaN();
        lx.push_back(std::log(x[i]));
        ly.push_back(std::log(y[i]));
    }
    return slope(lx, ly);
}

}  // namespace

std::string_view probe_target_name(ProbeTarget t) {
    switch (t) {
        case ProbeTarget::weyl: return "weyl";
        case ProbeTarget::vertices: return "vertices";
        case ProbeTarget::edges_angles: return "edges_angles";
    }
    return "weyl";
}

ProbeTarget parse_probe_target(std::string_view name) {
    if (name == "weyl") return ProbeTarget::weyl;
    if (name == "vertices") return ProbeTarget::vertices;
    if (name == "edges_angles" || name == "edges+angles") return ProbeTarget::edges_angles;
    throw ConfigError("target", "unknown probe target '" + std::string(name) + "'");
}

std::vector<double> probe_targets(const SampleRecord& r, ProbeTarget t) {
    switch (t) {
        case ProbeTarget::weyl: return {r.weyl[0], r.weyl[1], r.weyl[2]};
        case ProbeTarget::vertices: {
            std::vector<double> v;
            for (int i = 0; i < 10; ++i)
                if (i != 1) v.push_back(r.vertices[i]);
            return v;
        }
        case ProbeTarget::edges_angles: {
            const Polygon p = r.polygon();
            std::vector<double> v = edge_lengths(p);
            const auto a = inner_angles(p);
            v.insert(v.end(), a.begin(), a.end());
            return v;
        }
    }
    return {};
}

std::vector<std::string> probe_target_labels(ProbeTarget t) {
    switch (t) {
        case ProbeTarget::weyl: return {"a", "b", "k"};
        case ProbeTarget::vertices: return {"x0", "x1", "y1", "x2", "y2", "x3", "y3", "x4", "y4"};
        case ProbeTarget::edges_angles:
            return {"edge0", "edge1", "edge2", "edge3", "edge4", "angle0", "angle1", "angle2", "angle3", "angle4"};
    }
    return {};
}

void ProbeConfig::validate() const {
    if (hidden_layers < 0 || hidden_layers > 5) throw ConfigError("hidden_layers", "must be in 0..5");
    if (width < 1) throw ConfigError("width", "must be positive");
    if (!(learning_rate > 0.0)) throw ConfigError("probe_learning_rate", "must be positive");
    if (epochs < 1) throw ConfigError("probe_epochs", "must be positive");
    if (batch_size < 1) throw ConfigError("probe_batch_size", "must be positive");
}

std::span<const std::string_view> ProbeConfig::keys() {
    static constexpr std::array<std::string_view, 7> k = {"hidden_layers",  "width",           "target",    "probe_learning_rate",
                                                         "probe_epochs", "probe_batch_size", "probe_seed"};
    return k;
}

ProbeConfig ProbeConfig::from_config(const KeyValueConfig& c) {
    ProbeConfig p;
    p.hidden_layers = static_cast<int>(c.get_int("hidden_layers", p.hidden_layers));
    p.width = static_cast<int>(c.get_int("width", p.width));
    p.target = parse_probe_target(c.get_string("target", "weyl"));
    p.learning_rate = c.get_double("probe_learning_rate", p.learning_rate);
    p.epochs = static_cast<int>(c.get_int("probe_epochs", p.epochs));
    p.batch_size = static_cast<int>(c.get_int("probe_batch_size", p.batch_size));
    p.seed = c.get_u64("probe_seed", p.seed);
    p.validate();
    return p;
}

// ---------------------------------------------------------------- Probe

Probe::Probe(const ProbeConfig& config, int inputs, int outputs) : config_(config) {
    config_.validate();
    std::size_t offset = 0;
    int width = inputs;
    for (int l = 0; l <= config_.hidden_layers; ++l) {
        const int out = l == config_.hidden_layers ? outputs : config_.width;
        layers_.push_back({width, out, offset});
        offset += layers_.back().size();
        width = out;
    }
    params_.assign(offset, 0.0);
    Rng rng(config_.seed);
    const double gain = std::sqrt(6.0 / (1.0 + config_.leaky_slope * config_.leaky_slope));
    for (std::size_t l = 0; l < layers_.size(); ++l)
        layers_[l].init(params_.data(), rng, l + 1 == layers_.size() ? std::sqrt(3.0) : gain);
}

nn::Vec Probe::run(const nn::Vec& x, std::vector<nn::Vec>* pre, std::vector<nn::Vec>* act) const {
    nn::Vec a = x;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        nn::Vec z;
        layers_[l].forward(params_.data(), a, z);
        const bool last = l + 1 == layers_.size();
        if (pre) pre->push_back(z);
        a = last ? z : nn::leaky_relu(z, config_.leaky_slope);
        if (act) act->push_back(a);
    }
    return a;
}

std::vector<double> Probe::predict(std::span<const double> latent) const {
    nn::Vec x(static_cast<Eigen::Index>(latent.size()));
    for (std::size_t i = 0; i < latent.size(); ++i) x(static_cast<Eigen::Index>(i)) = (latent[i] - in_mean_[i]) / in_std_[i];
    const nn::Vec y = run(x, nullptr, nullptr);
    std::vector<double> out(static_cast<std::size_t>(y.size()));
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = y(static_cast<Eigen::Index>(i)) * out_std_[i] + out_mean_[i];
    return out;
}

double Probe::fit(std::span<const std::vector<double>> latents, std::span<const std::vector<double>> targets) {
    if (latents.empty() || latents.size() != targets.size()) throw Error("Probe::fit: need matching, non-empty data");
    standardize_stats(latents, in_mean_, in_std_);
    standardize_stats(targets, out_mean_, out_std_);

    const std::size_t n = latents.size();
    std::vector<nn::Vec> xs(n), ys(n);
    for (std::size_t s = 0; s < n; ++s) {
        xs[s].resize(static_cast<Eigen::Index>(in_mean_.size()));
        ys[s].resize(static_cast<Eigen::Index>(out_mean_.size()));
        for (std::size_t i = 0; i < in_mean_.size(); ++i)
            xs[s](static_cast<Eigen::Index>(i)) = (latents[s][i] - in_mean_[i]) / in_std_[i];
        for (std::size_t i = 0; i < out_mean_.size(); ++i)
            ys[s](static_cast<Eigen::Index>(i)) = (targets[s][i] - out_mean_[i]) / out_std_[i];
    }

    TrainConfig tc;
    tc.learning_rate = config_.learning_rate;
    tc.decay = 0.0;
    Adam adam(params_.size(), tc);
    std::vector<double> grad(params_.size());
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    Rng rng(config_.seed ^ 0x9e3779b97f4a7c15ULL);
    const auto batch = static_cast<std::size_t>(config_.batch_size);
    const double outputs = static_cast<double>(out_mean_.size());
    double epoch_mse = 0.0;
    for (int e = 0; e < config_.epochs; ++e) {
        for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
        epoch_mse = 0.0;
        for (std::size_t start = 0; start < n; start += batch) {
            const std::size_t count = std::min(batch, n - start);
            std::fill(grad.begin(), grad.end(), 0.0);
            for (std::size_t k = 0; k < count; ++k) {
                const std::size_t s = order[start + k];
                std::vector<nn::Vec> pre, act;
                const nn::Vec y = run(xs[s], &pre, &act);
                const nn::Vec err = y - ys[s];
                epoch_mse += err.squaredNorm() / outputs;
                nn::Vec d = (2.0 / (outputs * static_cast<double>(count))) * err;
                for (std::size_t l = layers_.size(); l-- > 0;) {
                    if (l + 1 < layers_.size()) d = nn::leaky_relu_backward(pre[l], d, config_.leaky_slope);
                    const nn::Vec& in = l == 0 ? xs[s] : act[l - 1];
                    nn::Vec dx;
                    layers_[l].backward(params_.data(), in, d, l > 0 ? &dx : nullptr, grad.data());
                    d = dx;
                }
            }
            adam.step(params_, grad);
        }
        epoch_mse /= static_cast<double>(n);
    }
    return epoch_mse;
}

// ---------------------------------------------------------------- experiments

std::vector<std::vector<double>> latents_of(const Network& net, std::span<const SampleRecord> records) {
    std::vector<std::vector<double>> out(records.size());
    const auto length = static_cast<std::size_t>(net.config().input_length);
    parallel_for(records.size(), [&](std::size_t i) { out[i] = net.encode(model_input(records[i], length)); });
    return out;
}

double mean_percentage_error(std::span<const std::vector<double>> pred, std::span<const std::vector<double>> truth,
                             std::vector<double>* per_component) {
    if (pred.empty()) return 0.0;
    const std::size_t m = truth.front().size();
    std::vector<double> err(m, 0.0);
    for (std::size_t s = 0; s < pred.size(); ++s)
        for (std::size_t i = 0; i < m; ++i) err[i] += std::abs(pred[s][i] - truth[s][i]) / (std::abs(truth[s][i]) + 1e-9);
    double total = 0.0;
    for (double& e : err) {
        e /= static_cast<double>(pred.size());
        total += e;
    }
    if (per_component) *per_component = err;
    return total / static_cast<double>(m);
}

ProbeResult probe_train(const Network& net, std::span<const SampleRecord> train_set,
                        std::span<const SampleRecord> test_set, const ProbeConfig& config) {
    if (train_set.empty() || test_set.empty()) throw Error("probe_train: train and test sets must be non-empty");
    const auto train_latent = latents_of(net, train_set);
    std::vector<std::vector<double>> train_target;
    for (const auto& r : train_set) train_target.push_back(probe_targets(r, config.target));

    ProbeResult result{Probe(config, net.config().latent, static_cast<int>(train_target.front().size())), {}};
    result.report.train_mse = result.probe.fit(train_latent, train_target);

    const auto test_latent = latents_of(net, test_set);
    std::vector<std::vector<double>> pred, truth;
    for (std::size_t i = 0; i < test_set.size(); ++i) {
        pred.push_back(result.probe.predict(test_latent[i]));
        truth.push_back(probe_targets(test_set[i], config.target));
    }
    result.report.target = config.target;
    result.report.hidden_layers = config.hidden_layers;
    result.report.labels = probe_target_labels(config.target);
    result.report.mean_error = mean_percentage_error(pred, truth, &result.report.component_error);
    result.report.test_samples = test_set.size();
    return result;
}

void write_probe_csv(std::ostream& os, std::span<const ProbeReport> reports) {
    os << "target,hidden_layers,component,mean_pct_error\n";
    for (const auto& r : reports) {
        for (std::size_t i = 0; i < r.component_error.size(); ++i)
            os << probe_target_name(r.target) << ',' << r.hidden_layers << ',' << r.labels[i] << ','
               << format_real(100.0 * r.component_error[i]) << '\n';
        os << probe_target_name(r.target) << ',' << r.hidden_layers << ",mean," << format_real(100.0 * r.mean_error)
           << '\n';
    }
}

WeylPredictor weyl_oracle() {
    return [](const SampleRecord& r, double S) -> std::array<double, 3> {
        return {r.weyl[0] / S, r.weyl[1] / std::sqrt(S), r.weyl[2]};
    };
}

WeylPredictor weyl_probe_predictor(const Network& net, const Probe& probe) {
    if (probe.config().target != ProbeTarget::weyl) throw Error("weyl_probe_predictor: probe must target weyl");
    return [&net, &probe](const SampleRecord& r, double S) -> std::array<double, 3> {
        auto input = model_input(r, static_cast<std::size_t>(net.config().input_length));
        for (double& v : input) v *= S;
        const auto y = probe.predict(net.encode(input));
        return {y[0], y[1], y[2]};
    };
}

ProbeScalingReport probe_scaling(const WeylPredictor& predictor, std::span<const SampleRecord> records,
                                 std::span<const double> S_values) {
    if (S_values.empty()) throw Error("probe_scaling: no S values");
    const double s_min = *std::min_element(S_values.begin(), S_values.end());
    if (!(s_min > 0.0)) throw Error("probe_scaling: S values must be positive");
    // Eigenvalues times S correspond to lengths divided by sqrt(S).
    std::vector<std::size_t> kept;
    for (std::size_t i = 0; i < records.size(); ++i) {
        double extent = 0.0;
        for (double v : records[i].vertices) extent = std::max(extent, std::abs(v));
        if (extent / std::sqrt(s_min) <= RasterImage::kHalfExtent) kept.push_back(i);
    }

    ProbeScalingReport report;
    report.samples_used = kept.size();
    const double four_pi = 4.0 * std::numbers::pi;
    for (double S : S_values) {
        std::vector<std::array<double, 3>> preds(kept.size());
        parallel_for(kept.size(), [&](std::size_t j) { preds[j] = predictor(records[kept[j]], S); });
        ProbeScalingRow row;
        row.S = S;
        for (const auto& p : preds) {
            row.area += four_pi * p[0];
            row.perimeter += four_pi * p[1];
            row.corner += p[2];
        }
        const double n = std::max<double>(1.0, static_cast<double>(kept.size()));
        row.area /= n;
        row.perimeter /= n;
        row.corner /= n;
        report.rows.push_back(row);
    }
    std::vector<double> s, a, l, k;
    for (const auto& r : report.rows) {
        s.push_back(r.S);
        a.push_back(r.area);
        l.push_back(r.perimeter);
        k.push_back(r.corner);
    }
    report.area_exponent = log_log_slope(s, a);
    report.perimeter_exponent = log_log_slope(s, l);
    report.corner_slope = slope(s, k);
    return report;
}

void write_probe_scaling_csv(std::ostream& os, const ProbeScalingReport& report) {
    os << "S,area,perimeter,corner\n";
    for (const auto& r : report.rows)
        os << format_real(r.S) << ',' << format_real(r.area) << ',' << format_real(r.perimeter) << ','
           << format_real(r.corner) << '\n';
}

void write_probe_scaling_fit_csv(std::ostream& os, const ProbeScalingReport& report) {
    os << "quantity,value\n";
    os << "area_exponent," << format_real(report.area_exponent) << '\n';
    os << "perimeter_exponent," << format_real(report.perimeter_exponent) << '\n';
    os << "corner_slope," << format_real(report.corner_slope) << '\n';
    os << "samples," << report.samples_used << '\n';
}

}  // namespace drum
