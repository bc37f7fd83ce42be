#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "drum/geometry.hpp"

namespace drum {

/// Axis-aligned w x h rectangle with its lower-left corner at the origin.
Polygon rectangle(double w, double h);

/// The n smallest Dirichlet eigenvalues pi^2 (m^2/w^2 + n^2/h^2), ascending.
std::vector<double> rectangle_eigenvalues(double w, double h, int n);

/// Non-congruent isospectral pair, each a union of seven right isosceles
/// triangles with unit legs (area 7/2), both with eight corners.
std::pair<Polygon, Polygon> gww_pair();

/// Relative tolerance for the analytic checks at mesh size h, measured on the
/// unit square (worst of the first 10 eigenvalues, with margin). Throws
/// ConfigError above h = 0.3.
double validation_tolerance(double h, bool extrapolate);

struct ValidationRow {
    std::string check;
    double measured = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};

struct ValidationOptions {
    double h = 0.05;
    bool extrapolate = true;
    int gww_eigenvalues = 20;
    bool run_gww = true;
};

/// Unit-square and 2x1-rectangle analytic checks, multiplicity and domain
/// monotonicity checks, and the isospectral-pair comparison.
std::vector<ValidationRow> fem_validate(const ValidationOptions& options = {});

/// CSV "check,measured,tolerance,pass".
void write_validation_csv(std::ostream& os, std::span<const ValidationRow> rows);

}  // namespace drum
