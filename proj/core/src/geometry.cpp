#include "drum/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "drum/error.hpp"

namespace drum {

namespace {

constexpr double kPi = std::numbers::pi;

bool on_segment(Point a, Point b, Point q, double tol) {
    const Point ab = b - a;
    const double len2 = dot(ab, ab);
    if (len2 == 0.0) return distance(a, q) <= tol;
    const double t = std::clamp(dot(q - a, ab) / len2, 0.0, 1.0);
    return distance(a + t * ab, q) <= tol;
}

int sign(double v) { return (v > 0.0) - (v < 0.0); }

bool segments_touch(Point a, Point b, Point c, Point d) {
    const int o1 = sign(orient2d(a, b, c));
    const int o2 = sign(orient2d(a, b, d));
    const int o3 = sign(orient2d(c, d, a));
    const int o4 = sign(orient2d(c, d, b));
    if (o1 != o2 && o3 != o4) return true;
    if (o1 == 0 && on_segment(a, b, c, 0.0)) return true;
    if (o2 == 0 && on_segment(a, b, d, 0.0)) return true;
    if (o3 == 0 && on_segment(c, d, a, 0.0)) return true;
    if (o4 == 0 && on_segment(c, d, b, 0.0)) return true;
    return false;
}

}  // namespace

double norm(Point a) { return std::hypot(a.x, a.y); }
double distance(Point a, Point b) { return norm(b - a); }

Polygon Polygon::translated(Point offset) const {
    std::vector<Point> out(vertices_);
    for (auto& v : out) v = v + offset;
    return Polygon(std::move(out));
}

Polygon Polygon::rotated(double radians) const {
    const double c = std::cos(radians);
    const double s = std::sin(radians);
    std::vector<Point> out(vertices_);
    for (auto& v : out) v = {c * v.x - s * v.y, s * v.x + c * v.y};
    return Polygon(std::move(out));
}

Polygon Polygon::scaled(double factor) const {
    std::vector<Point> out(vertices_);
    for (auto& v : out) v = factor * v;
    return Polygon(std::move(out));
}

Polygon Polygon::reversed() const {
    return Polygon(std::vector<Point>(vertices_.rbegin(), vertices_.rend()));
}

double signed_area(const Polygon& p) {
    const std::size_t n = p.size();
    double twice = 0.0;
    for (std::size_t i = 0; i < n; ++i) twice += cross(p[i], p.vertex(i + 1));
    return 0.5 * twice;
}

double area(const Polygon& p) { return std::abs(signed_area(p)); }

double perimeter(const Polygon& p) {
    double total = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) total += distance(p[i], p.vertex(i + 1));
    return total;
}

std::vector<double> edge_lengths(const Polygon& p) {
    std::vector<double> out(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) out[i] = distance(p[i], p.vertex(i + 1));
    return out;
}

std::vector<double> inner_angles(const Polygon& p) {
    const std::size_t n = p.size();
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Point b = p[i];
        const Point to_next = p.vertex(i + 1) - b;
        const Point to_prev = p.vertex(i + n - 1) - b;
        double a = std::atan2(cross(to_next, to_prev), dot(to_next, to_prev));
        if (a <= 0.0) a += 2.0 * kPi;
        out[i] = a;
    }
    return out;
}

Point centroid(const Polygon& p) {
    const double a = signed_area(p);
    if (p.size() < 3 || std::abs(a) < 1e-300) throw GeometryError("centroid: polygon has zero area");
    double cx = 0.0;
    double cy = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const Point u = p[i];
        const Point v = p.vertex(i + 1);
        const double w = cross(u, v);
        cx += (u.x + v.x) * w;
        cy += (u.y + v.y) * w;
    }
    return {cx / (6.0 * a), cy / (6.0 * a)};
}

double diameter(const Polygon& p) {
    double d = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i)
        for (std::size_t j = i + 1; j < p.size(); ++j) d = std::max(d, distance(p[i], p[j]));
    return d;
}

bool is_simple(const Polygon& p) {
    const std::size_t n = p.size();
    if (n < 3 || area(p) <= 0.0) return false;
    for (std::size_t i = 0; i < n; ++i) {
        const Point a = p[i];
        const Point b = p.vertex(i + 1);
        if (a == b) return false;
        for (std::size_t j = i + 1; j < n; ++j) {
            const Point c = p[j];
            const Point d = p.vertex(j + 1);
            const bool adjacent = (j == i + 1) || (i == 0 && j == n - 1);
            if (adjacent) {
                // Adjacent edges share one vertex; they must not fold back onto each other.
                const Point shared = (j == i + 1) ? b : a;
                const Point other_first = (j == i + 1) ? a : b;
                const Point other_second = (j == i + 1) ? d : c;
                if (orient2d(other_first, shared, other_second) == 0.0 &&
                    dot(other_first - shared, other_second - shared) > 0.0)
                    return false;
                continue;
            }
            if (segments_touch(a, b, c, d)) return false;
        }
    }
    return true;
}

bool is_ccw(const Polygon& p) { return signed_area(p) > 0.0; }

bool contains(const Polygon& p, Point q, double boundary_tol) {
    const std::size_t n = p.size();
    bool inside = false;
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        const Point a = p[i];
        const Point b = p[j];
        if (on_segment(a, b, q, boundary_tol)) return true;
        if ((a.y > q.y) != (b.y > q.y)) {
            const double x_cross = a.x + (q.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if (q.x < x_cross) inside = !inside;
        }
    }
    return inside;
}

double weyl_K(std::span<const double> angles) {
    double sum = 0.0;
    for (double a : angles) {
        if (!(a > 0.0 && a < 2.0 * kPi)) throw GeometryError("weyl_K: inner angle outside (0, 2pi)");
        sum += kPi / a - a / kPi;
    }
    return sum / 24.0;
}

void GenConfig::validate() const {
    if (!(radius_min > 0.0)) throw ConfigError("radius_min", "must be positive");
    if (!(radius_max >= radius_min)) throw ConfigError("radius_max", "must be >= radius_min");
    if (!(angle_min > 0.0)) throw ConfigError("angle_min", "must be positive");
    if (!(angle_max >= angle_min)) throw ConfigError("angle_max", "must be >= angle_min");
    if (5.0 * angle_min > 2.0 * kPi) throw ConfigError("angle_min", "5 * angle_min must not exceed 2pi");
    if (5.0 * angle_max < 2.0 * kPi) throw ConfigError("angle_max", "5 * angle_max must reach 2pi");
}

std::array<double, 5> sample_angle_gaps(const GenConfig& config, Rng& rng) {
    constexpr long kMaxRejections = 1'000'000;
    std::array<double, 5> gaps{};
    for (long attempt = 0; attempt < kMaxRejections; ++attempt) {
        double sum = 0.0;
        for (double& g : gaps) {
            g = rng.uniform(config.angle_min, config.angle_max);
            sum += g;
        }
        const double scale = 2.0 * kPi / sum;
        bool ok = true;
        for (double& g : gaps) {
            g *= scale;
            ok = ok && g >= config.angle_min && g <= config.angle_max;
        }
        if (ok) return gaps;
    }
    throw Error("generate_pentagon: no admissible angle gaps after 10^6 rejections; check angle bounds");
}

Polygon generate_pentagon(const GenConfig& config, Rng& rng) {
    const auto gaps = sample_angle_gaps(config, rng);
    std::vector<Point> vertices(5);
    double phi = 0.0;
    for (std::size_t k = 0; k < 5; ++k) {
        const double r = rng.uniform(config.radius_min, config.radius_max);
        vertices[k] = {r * std::cos(phi), r * std::sin(phi)};
        phi += gaps[k];
    }
    return Polygon(std::move(vertices));
}

std::size_t smallest_angle_vertex(const Polygon& p) {
    const auto angles = inner_angles(p);
    std::size_t best = 0;
    for (std::size_t i = 1; i < angles.size(); ++i)
        if (angles[i] < angles[best] - 1e-9) best = i;
    return best;
}

Polygon canonicalize(const Polygon& input) {
    if (input.size() < 3 || area(input) < 1e-14) throw GeometryError("canonicalize: degenerate polygon");
    if (!is_simple(input)) throw GeometryError("canonicalize: polygon is not simple");
    const Polygon p = is_ccw(input) ? input : input.reversed();

    const Polygon centered = p.translated(Point{} - centroid(p));
    const std::size_t k = smallest_angle_vertex(centered);
    const Point anchor = centered[k];
    const double r = norm(anchor);
    if (r == 0.0) throw GeometryError("canonicalize: smallest-angle vertex coincides with centroid");

    // Rotation by -atan2(anchor) written with the exact unit vector.
    const double c = anchor.x / r;
    const double s = anchor.y / r;
    std::vector<Point> out(centered.size());
    for (std::size_t i = 0; i < centered.size(); ++i) {
        const Point v = centered.vertex(k + i);
        out[i] = {c * v.x + s * v.y, -s * v.x + c * v.y};
    }
    out[0] = {r, 0.0};
    return Polygon(std::move(out));
}

std::string format_real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_polygon(std::ostream& os, const Polygon& p) {
    for (const Point& v : p.vertices()) os << format_real(v.x) << ' ' << format_real(v.y) << '\n';
}

Polygon read_polygon(std::istream& is) {
    std::vector<Point> vertices;
    std::string line;
    while (std::getline(is, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::istringstream ls(line);
        Point v;
        if (!(ls >> v.x >> v.y)) throw GeometryError("read_polygon: malformed line '" + line + "'");
        vertices.push_back(v);
    }
    return Polygon(std::move(vertices));
}

}  // namespace drum
