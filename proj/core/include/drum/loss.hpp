#pragma once

#include <iosfwd>
#include <numbers>
#include <span>

#include "drum/image.hpp"

namespace drum {

/// Soft Jaccard index sum(p q) / sum(p^2 + q^2 - p q). Throws Error on 0/0.
double jaccard(std::span<const double> pred, std::span<const double> truth);
inline double jaccard(const RasterImage& pred, const RasterImage& truth) {
    return jaccard(pred.pixels(), truth.pixels());
}

struct D4Loss {
    double loss = 1.0;
    /// Element applied to the prediction; first minimizer in kD4Elements order.
    D4 element = D4::id;
};

/// min over g in D4 of 1 - J(g(pred), truth) on row-major side x side images.
D4Loss d4_loss(std::span<const double> pred, std::span<const double> truth, int side);
D4Loss d4_loss(const RasterImage& pred, const RasterImage& truth);

/// Training variant: gradient of the loss with respect to `pred` through the
/// argmin branch. Losses within `tie_tol` of the minimum resolve to the earliest
/// element; the Jaccard denominator is clamped below at 1e-12.
D4Loss d4_loss_grad(std::span<const double> pred, std::span<const double> truth, int side, std::span<double> grad,
                    double tie_tol = 1e-12);

struct RotationSearch {
    double theta = 0.0;  ///< counter-clockwise, radians, applied to pred
    bool reflect = false;  ///< x-flip before the rotation
    double loss = 1.0;
};

/// Grid search over theta in [0, 2pi) and reflection of 1 - J(rotate(pred), truth).
RotationSearch rotation_search(const RasterImage& pred, const RasterImage& truth,
                               double step = std::numbers::pi / 180.0);

struct RotationRow {
    std::size_t sample_id = 0;
    double d4_loss = 0.0;
    RotationSearch best;
};

/// CSV "sample_id,d4_loss,best_theta_deg,reflect,best_loss".
void write_rotation_csv(std::ostream& os, std::span<const RotationRow> rows);

}  // namespace drum
