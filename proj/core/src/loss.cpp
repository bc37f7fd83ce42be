#include "drum/loss.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <vector>

#include "drum/error.hpp"
#include "drum/geometry.hpp"

namespace drum {

namespace {

struct Overlap {
    double numerator = 0.0;
    double denominator = 0.0;
};

template <class Index>
Overlap overlap(std::span<const double> pred, std::span<const double> truth, const Index& src) {
    Overlap o;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const double p = pred[src[i]];
        const double t = truth[i];
        o.numerator += p * t;
        o.denominator += p * p + t * t - p * t;
    }
    return o;
}

/// Visits every D4 element with its pixel source map.
template <class Fn>
void for_each_element(int side, Fn&& fn) {
    if (side == RasterImage::kSide) {
        for (D4 g : kD4Elements) fn(g, d4_source_index(g));
        return;
    }
    for (D4 g : kD4Elements) fn(g, d4_source_index(g, side));
}

void check_sizes(std::span<const double> pred, std::span<const double> truth, int side) {
    if (pred.size() != truth.size()) throw ShapeError("loss: prediction and truth sizes differ");
    if (side < 1 || static_cast<std::size_t>(side) * side != truth.size())
        throw ShapeError("loss: image is not side x side");
}

}  // namespace

double jaccard(std::span<const double> pred, std::span<const double> truth) {
    if (pred.size() != truth.size()) throw ShapeError("jaccard: prediction and truth sizes differ");
    Overlap o;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        o.numerator += pred[i] * truth[i];
        o.denominator += pred[i] * pred[i] + truth[i] * truth[i] - pred[i] * truth[i];
    }
    if (o.denominator == 0.0) throw Error("jaccard: both images are identically zero");
    return o.numerator / o.denominator;
}

D4Loss d4_loss(std::span<const double> pred, std::span<const double> truth, int side) {
    check_sizes(pred, truth, side);
    D4Loss best;
    bool first = true;
    for_each_element(side, [&](D4 g, const auto& src) {
        const Overlap o = overlap(pred, truth, src);
        if (o.denominator == 0.0) throw Error("d4_loss: both images are identically zero");
        const double loss = 1.0 - o.numerator / o.denominator;
        if (first || loss < best.loss) best = {loss, g};
        first = false;
    });
    return best;
}

D4Loss d4_loss(const RasterImage& pred, const RasterImage& truth) {
    return d4_loss(pred.pixels(), truth.pixels(), RasterImage::kSide);
}

D4Loss d4_loss_grad(std::span<const double> pred, std::span<const double> truth, int side, std::span<double> grad,
                    double tie_tol) {
    check_sizes(pred, truth, side);
    if (grad.size() != pred.size()) throw ShapeError("d4_loss_grad: gradient size differs");

    std::array<double, 8> losses{};
    std::array<Overlap, 8> overlaps{};
    for_each_element(side, [&](D4 g, const auto& src) {
        Overlap o = overlap(pred, truth, src);
        o.denominator = std::max(o.denominator, 1e-12);
        overlaps[static_cast<int>(g)] = o;
        losses[static_cast<int>(g)] = 1.0 - o.numerator / o.denominator;
    });
    const double lowest = *std::min_element(losses.begin(), losses.end());
    D4 chosen = D4::id;
    for (D4 g : kD4Elements) {
        if (losses[static_cast<int>(g)] <= lowest + tie_tol) {
            chosen = g;
            break;
        }
    }

    // dJ/dq_i = (t_i D - N (2 q_i - t_i)) / D^2 with q = g(pred); scatter back through the permutation.
    const Overlap o = overlaps[static_cast<int>(chosen)];
    const double inv_d2 = 1.0 / (o.denominator * o.denominator);
    auto scatter = [&](const auto& src) {
        for (std::size_t i = 0; i < truth.size(); ++i) {
            const double q = pred[src[i]];
            const double t = truth[i];
            grad[src[i]] = -(t * o.denominator - o.numerator * (2.0 * q - t)) * inv_d2;
        }
    };
    if (side == RasterImage::kSide)
        scatter(d4_source_index(chosen));
    else
        scatter(d4_source_index(chosen, side));
    return {losses[static_cast<int>(chosen)], chosen};
}

RotationSearch rotation_search(const RasterImage& pred, const RasterImage& truth, double step) {
    if (!(step > 0.0)) throw Error("rotation_search: step must be positive");
    const double two_pi = 2.0 * std::numbers::pi;
    const auto count = static_cast<long>(std::ceil(two_pi / step - 1e-9));
    RotationSearch best;
    bool first = true;
    for (int reflect = 0; reflect < 2; ++reflect) {
        for (long i = 0; i < count; ++i) {
            const double theta = static_cast<double>(i) * step;
            const RasterImage moved = rotate_image(pred, theta, reflect != 0);
            Overlap o;
            for (std::size_t j = 0; j < RasterImage::kPixels; ++j) {
                o.numerator += moved[j] * truth[j];
                o.denominator += moved[j] * moved[j] + truth[j] * truth[j] - moved[j] * truth[j];
            }
            const double loss = o.denominator > 0.0 ? 1.0 - o.numerator / o.denominator : 0.0;
            if (first || loss < best.loss) best = {theta, reflect != 0, loss};
            first = false;
        }
    }
    return best;
}

void write_rotation_csv(std::ostream& os, std::span<const RotationRow> rows) {
    os << "sample_id,d4_loss,best_theta_deg,reflect,best_loss\n";
    for (const auto& r : rows)
        os << r.sample_id << ',' << format_real(r.d4_loss) << ',' << format_real(r.best.theta * 180.0 / std::numbers::pi)
           << ',' << (r.best.reflect ? 1 : 0) << ',' << format_real(r.best.loss) << '\n';
}

}  // namespace drum
