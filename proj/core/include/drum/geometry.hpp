#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "drum/random.hpp"

namespace drum {

struct Point {
    double x = 0.0;
    double y = 0.0;

    friend constexpr Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
    friend constexpr Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
    friend constexpr Point operator*(double s, Point a) { return {s * a.x, s * a.y}; }
    friend constexpr bool operator==(Point a, Point b) = default;
};

constexpr double cross(Point a, Point b) { return a.x * b.y - a.y * b.x; }
constexpr double dot(Point a, Point b) { return a.x * b.x + a.y * b.y; }
double norm(Point a);
double distance(Point a, Point b);

/// Twice the signed area of triangle abc; positive when counter-clockwise.
constexpr double orient2d(Point a, Point b, Point c) { return cross(b - a, c - a); }

/// Closed planar polygon given by its vertex ring (no repeated closing vertex).
///
/// The generation pipeline produces counter-clockwise simple pentagons; other
/// vertex counts are allowed so the FEM code can run on validation shapes.
class Polygon {
public:
    Polygon() = default;
    explicit Polygon(std::vector<Point> vertices) : vertices_(std::move(vertices)) {}

    std::span<const Point> vertices() const noexcept { return vertices_; }
    std::size_t size() const noexcept { return vertices_.size(); }
    const Point& operator[](std::size_t i) const { return vertices_[i]; }
    const Point& vertex(std::size_t i) const { return vertices_[i % vertices_.size()]; }

    Polygon translated(Point offset) const;
    /// Counter-clockwise rotation about the origin.
    Polygon rotated(double radians) const;
    Polygon scaled(double factor) const;
    Polygon reversed() const;

    friend bool operator==(const Polygon&, const Polygon&) = default;

private:
    std::vector<Point> vertices_;
};

double signed_area(const Polygon& p);
/// Shoelace area (absolute value).
double area(const Polygon& p);
double perimeter(const Polygon& p);
std::vector<double> edge_lengths(const Polygon& p);
/// Interior angle at each vertex, in (0, 2*pi). Assumes counter-clockwise order.
std::vector<double> inner_angles(const Polygon& p);
/// Area centroid. Throws GeometryError on zero area.
Point centroid(const Polygon& p);
double diameter(const Polygon& p);

bool is_simple(const Polygon& p);
bool is_ccw(const Polygon& p);

/// Boundary-inclusive point-in-polygon test.
bool contains(const Polygon& p, Point q, double boundary_tol = 1e-12);

/// Corner constant of the Weyl expansion: (1/24) * sum(pi/a - a/pi).
/// Throws GeometryError if any angle is outside (0, 2*pi).
double weyl_K(std::span<const double> angles);

/// Sampling bounds for random pentagons.
struct GenConfig {
    double radius_min = 0.5;
    double radius_max = 2.0;
    double angle_min = std::numbers::pi / 10.0;
    double angle_max = std::numbers::pi;
    std::uint64_t seed = 0;

    /// Throws ConfigError naming the first invalid field.
    void validate() const;

    friend bool operator==(const GenConfig&, const GenConfig&) = default;
};

/// Star-shaped pentagon around the origin: radii uniform in the radius range,
/// consecutive polar-angle gaps in the angle range summing to 2*pi.
Polygon generate_pentagon(const GenConfig& config, Rng& rng);

/// Polar-angle gaps of the generator, exposed for tests.
std::array<double, 5> sample_angle_gaps(const GenConfig& config, Rng& rng);

/// Gauge fixing: centroid to the origin, smallest-inner-angle vertex rotated
/// onto the positive x axis and moved to index 0. Ties within 1e-9 go to the
/// lowest vertex index. Clockwise input is reversed first.
Polygon canonicalize(const Polygon& p);
std::size_t smallest_angle_vertex(const Polygon& p);

/// Text form: one "x y" line per vertex with 17 significant digits.
void write_polygon(std::ostream& os, const Polygon& p);
Polygon read_polygon(std::istream& is);
std::string format_real(double v);

}  // namespace drum
