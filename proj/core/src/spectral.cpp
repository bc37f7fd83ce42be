#include "drum/spectral.hpp"

#include <cmath>
#include <numbers>
#include <ostream>

#include <Eigen/Dense>

#include "drum/error.hpp"

namespace drum {

WeylParams weyl_params(const Polygon& p) {
    const double four_pi = 4.0 * std::numbers::pi;
    const auto angles = inner_angles(p);
    return {area(p) / four_pi, perimeter(p) / four_pi, weyl_K(angles)};
}

double weyl_count(double E, const WeylParams& w) { return w.a * E - w.b * std::sqrt(E) + w.k; }

WeylFit weyl_fit(std::span<const double> eigenvalues) {
    const auto n = static_cast<Eigen::Index>(eigenvalues.size());
    if (n < 10) throw Error("weyl_fit: at least 10 eigenvalues are required");

    Eigen::MatrixXd x(n, 3);
    Eigen::VectorXd y(n);
    for (Eigen::Index j = 0; j < n; ++j) {
        const double e = eigenvalues[static_cast<std::size_t>(j)];
        if (!(e > 0.0)) throw Error("weyl_fit: eigenvalues must be positive");
        x(j, 0) = e;
        x(j, 1) = -std::sqrt(e);
        x(j, 2) = 1.0;
        y(j) = static_cast<double>(j) + 0.5;
    }

    const Eigen::Vector3d scale = x.colwise().norm().transpose();
    const Eigen::MatrixXd xs = x * scale.cwiseInverse().asDiagonal();
    const Eigen::Matrix3d gram = xs.transpose() * xs;
    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(gram);
    if (es.eigenvalues()(0) < 1e-13 * es.eigenvalues()(2))
        throw Error("weyl_fit: design matrix is rank-deficient (eigenvalues nearly identical)");

    const Eigen::Vector3d cs = gram.ldlt().solve(xs.transpose() * y);
    const Eigen::Vector3d c = cs.cwiseQuotient(scale);
    const Eigen::VectorXd r = x * c - y;

    WeylFit fit;
    fit.params = {c(0), c(1), c(2)};
    fit.rms_residual = std::sqrt(r.squaredNorm() / static_cast<double>(n));
    return fit;
}

std::vector<double> spacings(std::span<const double> eigenvalues) {
    std::vector<double> out(eigenvalues.size());
    double prev = 0.0;
    for (std::size_t i = 0; i < eigenvalues.size(); ++i) {
        if (eigenvalues[i] < prev) throw Error("spacings: eigenvalues are not ascending");
        out[i] = eigenvalues[i] - prev;
        prev = eigenvalues[i];
    }
    return out;
}

std::vector<double> cumulative(std::span<const double> spacings) {
    std::vector<double> out(spacings.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < spacings.size(); ++i) out[i] = sum += spacings[i];
    return out;
}

Spectrum scale_spectrum(const Spectrum& s, double S) {
    if (!(S > 0.0)) throw Error("scale_spectrum: S must be positive");
    std::vector<double> v(s.values().begin(), s.values().end());
    for (double& e : v) e *= S;
    return Spectrum(std::move(v));
}

void write_weyl_csv(std::ostream& os, std::span<const WeylFit> fits) {
    os << "a,b,k,rms_residual\n";
    for (const auto& f : fits)
        os << format_real(f.params.a) << ',' << format_real(f.params.b) << ',' << format_real(f.params.k) << ','
           << format_real(f.rms_residual) << '\n';
}

}  // namespace drum
