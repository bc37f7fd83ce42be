#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include "drum/fem.hpp"
#include "drum/geometry.hpp"

namespace drum {

/// Coefficients of the smoothed counting function N(E) = a E - b sqrt(E) + k,
/// with a = area / 4pi, b = perimeter / 4pi and k the corner constant.
struct WeylParams {
    double a = 0.0;
    double b = 0.0;
    double k = 0.0;

    friend bool operator==(const WeylParams&, const WeylParams&) = default;
};

WeylParams weyl_params(const Polygon& p);

double weyl_count(double E, const WeylParams& w);

struct WeylFit {
    WeylParams params;
    double rms_residual = 0.0;
};

/// Least-squares fit of (a, b, k) to the staircase midpoints (lambda_j, j - 1/2),
/// using column-scaled normal equations. Needs at least 10 eigenvalues; throws
/// Error when the design is rank-deficient.
WeylFit weyl_fit(std::span<const double> eigenvalues);
inline WeylFit weyl_fit(const Spectrum& s) { return weyl_fit(s.values()); }

/// s_1 = lambda_1, s_k = lambda_k - lambda_{k-1}. Throws Error on decreasing input.
std::vector<double> spacings(std::span<const double> eigenvalues);
inline std::vector<double> spacings(const Spectrum& s) { return spacings(s.values()); }
/// Inverse of spacings (running sum).
std::vector<double> cumulative(std::span<const double> spacings);

/// Every eigenvalue multiplied by S. Throws Error for S <= 0.
Spectrum scale_spectrum(const Spectrum& s, double S);

/// CSV "a,b,k,rms_residual".
void write_weyl_csv(std::ostream& os, std::span<const WeylFit> fits);

}  // namespace drum
