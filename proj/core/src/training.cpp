#include "drum/training.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "drum/error.hpp"
#include "drum/parallel.hpp"
#include "drum/spectral.hpp"

namespace drum {

namespace {

constexpr std::array<std::string_view, 12> kTrainKeys = {
    "learning_rate", "decay",      "batch_size", "chunks",     "epochs_first", "epochs_last",
    "epochs",        "validation_fraction", "train_seed", "adam_beta1", "adam_beta2", "adam_epsilon"};

constexpr std::size_t kGradientGroups = 8;

struct Prepared {
    std::vector<std::vector<double>> inputs;
    std::vector<RasterImage> truths;
};

Prepared prepare(std::span<const SampleRecord> records, std::size_t length) {
    Prepared p;
    p.inputs.reserve(records.size());
    p.truths.reserve(records.size());
    for (const auto& r : records) {
        p.inputs.push_back(model_input(r, length));
        p.truths.push_back(r.raster());
    }
    return p;
}

double mean_loss(const Network& net, const Prepared& data) {
    if (data.inputs.empty()) return 0.0;
    std::vector<double> losses(data.inputs.size());
    parallel_for(data.inputs.size(), [&](std::size_t i) {
        losses[i] = d4_loss(net.forward(data.inputs[i]).image, data.truths[i]).loss;
    });
    double sum = 0.0;
    for (double l : losses) sum += l;
    return sum / static_cast<double>(losses.size());
}

}  // namespace

// ---------------------------------------------------------------- config

void TrainConfig::validate() const {
    if (!(learning_rate >= 0.0)) throw ConfigError("learning_rate", "must be non-negative");
    if (!(decay >= 0.0)) throw ConfigError("decay", "must be non-negative");
    if (batch_size < 1) throw ConfigError("batch_size", "must be positive");
    if (chunks < 1) throw ConfigError("chunks", "must be positive");
    if (epochs_first < 0 || epochs_last < 0) throw ConfigError("epochs_first", "epoch counts must be non-negative");
    if (!(validation_fraction > 0.0 && validation_fraction < 1.0))
        throw ConfigError("validation_fraction", "must be in (0, 1)");
    if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0)) throw ConfigError("adam_beta1", "must be in [0, 1)");
    if (!(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) throw ConfigError("adam_beta2", "must be in [0, 1)");
    if (!(adam_epsilon > 0.0)) throw ConfigError("adam_epsilon", "must be positive");
}

int TrainConfig::total_epochs() const {
    int total = 0;
    for (int c = 0; c < chunks; ++c) {
        const double t = chunks == 1 ? 0.0 : static_cast<double>(c) / (chunks - 1);
        total += static_cast<int>(std::lround(epochs_first + (epochs_last - epochs_first) * t));
    }
    return total;
}

std::span<const std::string_view> TrainConfig::keys() { return kTrainKeys; }

TrainConfig TrainConfig::from_config(const KeyValueConfig& c) {
    TrainConfig t;
    t.learning_rate = c.get_double("learning_rate", t.learning_rate);
    t.decay = c.get_double("decay", t.decay);
    t.batch_size = static_cast<int>(c.get_int("batch_size", t.batch_size));
    t.chunks = static_cast<int>(c.get_int("chunks", t.chunks));
    // "epochs" is shorthand for a constant schedule.
    const int epochs = static_cast<int>(c.get_int("epochs", t.epochs_first));
    t.epochs_first = static_cast<int>(c.get_int("epochs_first", epochs));
    t.epochs_last = static_cast<int>(c.get_int("epochs_last", c.has("epochs_first") ? t.epochs_first : epochs));
    t.validation_fraction = c.get_double("validation_fraction", t.validation_fraction);
    t.seed = c.get_u64("train_seed", t.seed);
    t.adam_beta1 = c.get_double("adam_beta1", t.adam_beta1);
    t.adam_beta2 = c.get_double("adam_beta2", t.adam_beta2);
    t.adam_epsilon = c.get_double("adam_epsilon", t.adam_epsilon);
    t.validate();
    return t;
}

KeyValueConfig TrainConfig::to_config() const {
    KeyValueConfig c;
    c.set("learning_rate", learning_rate);
    c.set("decay", decay);
    c.set("batch_size", batch_size);
    c.set("chunks", chunks);
    c.set("epochs_first", epochs_first);
    c.set("epochs_last", epochs_last);
    c.set("validation_fraction", validation_fraction);
    c.set("train_seed", seed);
    c.set("adam_beta1", adam_beta1);
    c.set("adam_beta2", adam_beta2);
    c.set("adam_epsilon", adam_epsilon);
    return c;
}

// ---------------------------------------------------------------- Adam

Adam::Adam(std::size_t n, const TrainConfig& config) : m_(n, 0.0), v_(n, 0.0), config_(config) {}

double Adam::step(std::span<double> params, std::span<const double> grad) {
    const double lr = config_.learning_rate / (1.0 + config_.decay * static_cast<double>(t_));
    ++t_;
    const double b1 = config_.adam_beta1, b2 = config_.adam_beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        m_[i] = b1 * m_[i] + (1.0 - b1) * grad[i];
        v_[i] = b2 * v_[i] + (1.0 - b2) * grad[i] * grad[i];
        params[i] -= lr * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + config_.adam_epsilon);
    }
    return lr;
}

// ---------------------------------------------------------------- training

std::vector<double> model_input(const SampleRecord& r, std::size_t length) {
    if (r.eigenvalues.size() < length)
        throw ShapeError("model_input: record has " + std::to_string(r.eigenvalues.size()) + " eigenvalues, model needs " +
                         std::to_string(length));
    auto s = spacings(std::span<const double>(r.eigenvalues.data(), length));
    return s;
}

void input_statistics(std::span<const std::vector<double>> inputs, std::vector<double>& mean, std::vector<double>& stddev) {
    if (inputs.empty()) throw Error("input_statistics: no inputs");
    const std::size_t n = inputs.front().size();
    mean.assign(n, 0.0);
    stddev.assign(n, 0.0);
    for (const auto& x : inputs)
        for (std::size_t i = 0; i < n; ++i) mean[i] += x[i];
    for (double& m : mean) m /= static_cast<double>(inputs.size());
    for (const auto& x : inputs)
        for (std::size_t i = 0; i < n; ++i) stddev[i] += (x[i] - mean[i]) * (x[i] - mean[i]);
    for (double& s : stddev) s = std::max(std::sqrt(s / static_cast<double>(inputs.size())), 1e-12);
}

double mean_d4_loss(const Network& net, std::span<const SampleRecord> records) {
    return mean_loss(net, prepare(records, static_cast<std::size_t>(net.config().input_length)));
}

D4Loss sample_loss_grad(const Network& net, std::span<const double> input, const RasterImage& truth,
                        std::span<double> grad, Network::Cache& cache) {
    net.forward(input, cache);
    std::vector<double> d_out(RasterImage::kPixels);
    const D4Loss l = d4_loss_grad(cache.output, truth.pixels(), RasterImage::kSide, d_out);
    net.backward(cache, d_out, grad);
    return l;
}

TrainReport train(Network& net, std::span<const SampleRecord> train_set, std::span<const SampleRecord> val_set,
                  const TrainConfig& config, const std::function<void(const EpochRow&)>& on_epoch) {
    config.validate();
    if (train_set.empty()) throw Error("train: training set is empty");
    const auto length = static_cast<std::size_t>(net.config().input_length);
    const Prepared train_data = prepare(train_set, length);
    const Prepared val_data = prepare(val_set, length);
    if (net.config().normalize_inputs) {
        std::vector<double> mean, stddev;
        input_statistics(train_data.inputs, mean, stddev);
        net.set_normalization(std::move(mean), std::move(stddev));
    }

    const std::size_t n_params = net.param_count();
    Adam adam(n_params, config);
    std::vector<std::vector<double>> group_grad(kGradientGroups, std::vector<double>(n_params));
    std::vector<Network::Cache> caches(kGradientGroups);
    std::vector<double> grad(n_params);
    std::vector<double> sample_loss(static_cast<std::size_t>(config.batch_size));

    TrainReport report;
    report.best_params.assign(net.params().begin(), net.params().end());
    report.best_val_loss = std::numeric_limits<double>::infinity();

    Rng rng(config.seed);
    std::vector<std::size_t> all(train_data.inputs.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    for (std::size_t i = all.size(); i > 1; --i) std::swap(all[i - 1], all[rng.below(i)]);

    int epoch = 0;
    double lr = config.learning_rate;
    for (int c = 0; c < config.chunks && !report.diverged; ++c) {
        const std::size_t lo = all.size() * static_cast<std::size_t>(c) / static_cast<std::size_t>(config.chunks);
        const std::size_t hi = all.size() * static_cast<std::size_t>(c + 1) / static_cast<std::size_t>(config.chunks);
        std::vector<std::size_t> chunk(all.begin() + static_cast<std::ptrdiff_t>(lo), all.begin() + static_cast<std::ptrdiff_t>(hi));
        const double t = config.chunks == 1 ? 0.0 : static_cast<double>(c) / (config.chunks - 1);
        const int chunk_epochs =
            static_cast<int>(std::lround(config.epochs_first + (config.epochs_last - config.epochs_first) * t));

        for (int e = 0; e < chunk_epochs && !report.diverged; ++e) {
            for (std::size_t i = chunk.size(); i > 1; --i) std::swap(chunk[i - 1], chunk[rng.below(i)]);
            double loss_sum = 0.0;
            for (std::size_t start = 0; start < chunk.size(); start += static_cast<std::size_t>(config.batch_size)) {
                const std::size_t count = std::min<std::size_t>(static_cast<std::size_t>(config.batch_size), chunk.size() - start);
                const std::size_t groups = std::min(kGradientGroups, count);
                parallel_for(groups, [&](std::size_t gi) {
                    auto& g = group_grad[gi];
                    std::fill(g.begin(), g.end(), 0.0);
                    for (std::size_t k = gi; k < count; k += groups) {
                        const std::size_t idx = chunk[start + k];
                        sample_loss[k] = sample_loss_grad(net, train_data.inputs[idx], train_data.truths[idx], g, caches[gi]).loss;
                    }
                });
                std::fill(grad.begin(), grad.end(), 0.0);
                for (std::size_t gi = 0; gi < groups; ++gi)
                    for (std::size_t j = 0; j < n_params; ++j) grad[j] += group_grad[gi][j];
                const double inv = 1.0 / static_cast<double>(count);
                double batch_loss = 0.0;
                for (std::size_t k = 0; k < count; ++k) batch_loss += sample_loss[k];
                bool finite = std::isfinite(batch_loss);
                for (std::size_t j = 0; j < n_params && finite; ++j) {
                    grad[j] *= inv;
                    finite = std::isfinite(grad[j]);
                }
                if (!finite) {
                    report.diverged = true;
                    break;
                }
                loss_sum += batch_loss;
                lr = adam.step(net.params(), grad);
            }
            if (report.diverged) break;

            ++epoch;
            EpochRow row;
            row.epoch = epoch;
            row.train_loss = loss_sum / static_cast<double>(chunk.size());
            row.val_loss = val_data.inputs.empty() ? row.train_loss : mean_loss(net, val_data);
            row.learning_rate = lr;
            report.epochs.push_back(row);
            if (on_epoch) on_epoch(row);
            if (!std::isfinite(row.val_loss)) {
                report.diverged = true;
                break;
            }
            if (row.val_loss < report.best_val_loss) {
                report.best_val_loss = row.val_loss;
                report.best_epoch = epoch;
                report.best_params.assign(net.params().begin(), net.params().end());
            }
        }
    }
    std::copy(report.best_params.begin(), report.best_params.end(), net.params().begin());
    return report;
}

void write_training_csv(std::ostream& os, std::span<const EpochRow> rows) {
    os << "epoch,train_loss,val_loss,lr\n";
    for (const auto& r : rows)
        os << r.epoch << ',' << format_real(r.train_loss) << ',' << format_real(r.val_loss) << ','
           << format_real(r.learning_rate) << '\n';
}

// ---------------------------------------------------------------- gradient check

GradCheckReport gradient_check(Network& net, std::span<const double> input, const RasterImage& truth,
                               const GradCheckOptions& options) {
    GradCheckReport report;
    std::vector<double> grad(net.param_count(), 0.0);
    Network::Cache cache;
    const D4Loss base = sample_loss_grad(net, input, truth, grad, cache);
    const auto base_sig = net.kink_signature(cache);

    // Argmin tie: a runner-up element within tie_gap of the chosen one.
    std::vector<double> scratch(RasterImage::kPixels);
    for (D4 g : kD4Elements) {
        if (g == base.element) continue;
        const RasterImage moved = d4_transform(RasterImage(cache.output), g);
        const double l = 1.0 - jaccard(moved, truth);
        if (std::abs(l - base.loss) < options.tie_gap) report.argmin_tie = true;
    }

    auto probe = [&](std::size_t j, double value, D4& element, std::vector<std::uint8_t>& sig) {
        const double saved = net.params()[j];
        net.params()[j] = value;
        Network::Cache c;
        net.forward(input, c);
        const D4Loss l = d4_loss_grad(c.output, truth.pixels(), RasterImage::kSide, scratch);
        net.params()[j] = saved;
        element = l.element;
        sig = net.kink_signature(c);
        return l.loss;
    };

    Rng rng(options.seed);
    const std::size_t n = net.param_count();
    const int wanted = std::min<int>(options.parameters, static_cast<int>(n));
    std::vector<std::size_t> picks;
    while (static_cast<int>(picks.size()) < wanted) {
        const std::size_t j = rng.below(n);
        if (std::find(picks.begin(), picks.end(), j) == picks.end()) picks.push_back(j);
    }
    for (std::size_t j : picks) {
        const double p = net.params()[j];
        D4 e_plus, e_minus;
        std::vector<std::uint8_t> s_plus, s_minus;
        const double f_plus = probe(j, p + options.epsilon, e_plus, s_plus);
        const double f_minus = probe(j, p - options.epsilon, e_minus, s_minus);
        if (e_plus != base.element || e_minus != base.element || s_plus != base_sig || s_minus != base_sig) {
            ++report.excluded;
            continue;
        }
        const double numeric = (f_plus - f_minus) / (2.0 * options.epsilon);
        const double analytic = grad[j];
        const double scale = std::max({std::abs(analytic), std::abs(numeric), options.floor});
        report.max_deviation = std::max(report.max_deviation, std::abs(analytic - numeric) / scale);
        ++report.checked;
    }
    return report;
}

// ---------------------------------------------------------------- baseline

double mean_constant_loss(const RasterImage& image, std::span<const SampleRecord> records) {
    if (records.empty()) return 0.0;
    std::vector<double> losses(records.size());
    parallel_for(records.size(), [&](std::size_t i) { losses[i] = d4_loss(image, records[i].raster()).loss; });
    double sum = 0.0;
    for (double l : losses) sum += l;
    return sum / static_cast<double>(records.size());
}

ConstantBaseline constant_image_baseline(std::span<const SampleRecord> train_set, int steps) {
    if (train_set.empty()) throw Error("constant_image_baseline: training set is empty");
    RasterImage mean;
    for (const auto& r : train_set)
        for (std::size_t i = 0; i < RasterImage::kPixels; ++i) mean[i] += r.image[i];
    for (double& v : mean.pixels()) v /= static_cast<double>(train_set.size());

    ConstantBaseline best;
    best.train_loss = std::numeric_limits<double>::infinity();
    for (int s = 1; s < steps; ++s) {
        const double tau = static_cast<double>(s) / steps;
        RasterImage img;
        for (std::size_t i = 0; i < RasterImage::kPixels; ++i) img[i] = mean[i] > tau ? 1.0 : 0.0;
        if (img.sum() == 0.0) continue;
        const double loss = mean_constant_loss(img, train_set);
        if (loss < best.train_loss) best = {tau, img, loss};
    }
    return best;
}

}  // namespace drum
