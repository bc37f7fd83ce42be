#include "drum/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <unordered_map>

#include "drum/error.hpp"

namespace drum {

namespace {

std::uint64_t edge_key(int a, int b) {
    const auto lo = static_cast<std::uint64_t>(std::min(a, b));
    const auto hi = static_cast<std::uint64_t>(std::max(a, b));
    return (hi << 32) | lo;
}

double triangle_quality(Point a, Point b, Point c) {
    const double twice_area = orient2d(a, b, c);
    const Point ab = b - a, bc = c - b, ca = a - c;
    const double sq = dot(ab, ab) + dot(bc, bc) + dot(ca, ca);
    return 2.0 * std::sqrt(3.0) * twice_area / sq;
}

double min_triangle_angle(Point a, Point b, Point c) {
    auto angle = [](Point p, Point q, Point r) {
        const Point u = q - p, v = r - p;
        return std::atan2(std::abs(cross(u, v)), dot(u, v));
    };
    return std::min({angle(a, b, c), angle(b, c, a), angle(c, a, b)});
}

/// Point strictly inside or on the closed triangle abc (counter-clockwise).
bool in_triangle(Point a, Point b, Point c, Point q) {
    return orient2d(a, b, q) >= 0.0 && orient2d(b, c, q) >= 0.0 && orient2d(c, a, q) >= 0.0;
}

void mark_boundary(Mesh& mesh) {
    std::unordered_map<std::uint64_t, int> uses;
    for (const auto& t : mesh.triangles)
        for (int e = 0; e < 3; ++e) ++uses[edge_key(t[e], t[(e + 1) % 3])];
    mesh.boundary.assign(mesh.nodes.size(), 0);
    for (const auto& t : mesh.triangles) {
        for (int e = 0; e < 3; ++e) {
            if (uses[edge_key(t[e], t[(e + 1) % 3])] == 1) {
                mesh.boundary[t[e]] = 1;
                mesh.boundary[t[(e + 1) % 3]] = 1;
            }
        }
    }
}

/// Gauss-Seidel Laplacian smoothing. A move is kept only if it does not lower
/// the worst incident triangle quality and (when max_edge > 0) keeps every
/// incident edge within max_edge.
void smooth(Mesh& mesh, int passes, double max_edge) {
    if (passes <= 0) return;
    const std::size_t n = mesh.nodes.size();
    std::vector<std::vector<int>> incident(n);
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t)
        for (int v : mesh.triangles[t]) incident[v].push_back(static_cast<int>(t));
    std::vector<std::vector<int>> neighbours(n);
    for (const auto& t : mesh.triangles) {
        for (int e = 0; e < 3; ++e) {
            neighbours[t[e]].push_back(t[(e + 1) % 3]);
            neighbours[t[e]].push_back(t[(e + 2) % 3]);
        }
    }
    for (auto& nb : neighbours) {
        std::sort(nb.begin(), nb.end());
        nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
    }

    auto worst_quality = [&](int v) {
        double q = std::numeric_limits<double>::infinity();
        for (int t : incident[v]) {
            const auto& tri = mesh.triangles[t];
            q = std::min(q, triangle_quality(mesh.nodes[tri[0]], mesh.nodes[tri[1]], mesh.nodes[tri[2]]));
        }
        return q;
    };

    for (int pass = 0; pass < passes; ++pass) {
        for (std::size_t v = 0; v < n; ++v) {
            if (mesh.boundary[v] || neighbours[v].empty()) continue;
            Point avg{};
            for (int w : neighbours[v]) avg = avg + mesh.nodes[w];
            avg = (1.0 / static_cast<double>(neighbours[v].size())) * avg;

            const Point old = mesh.nodes[v];
            const double q_old = worst_quality(static_cast<int>(v));
            mesh.nodes[v] = avg;
            bool accept = worst_quality(static_cast<int>(v)) >= q_old;
            if (accept && max_edge > 0.0) {
                for (int w : neighbours[v]) accept = accept && distance(avg, mesh.nodes[w]) <= max_edge;
            }
            if (!accept) mesh.nodes[v] = old;
        }
    }
}

}  // namespace

std::size_t Mesh::interior_count() const {
    return static_cast<std::size_t>(std::count(boundary.begin(), boundary.end(), std::uint8_t{0}));
}

double Mesh::max_edge_length() const {
    double m = 0.0;
    for (const auto& t : triangles)
        for (int e = 0; e < 3; ++e) m = std::max(m, distance(nodes[t[e]], nodes[t[(e + 1) % 3]]));
    return m;
}

double Mesh::total_area() const {
    double a = 0.0;
    for (const auto& t : triangles) a += 0.5 * orient2d(nodes[t[0]], nodes[t[1]], nodes[t[2]]);
    return a;
}

double min_quality(const Mesh& mesh) {
    double q = std::numeric_limits<double>::infinity();
    for (const auto& t : mesh.triangles)
        q = std::min(q, triangle_quality(mesh.nodes[t[0]], mesh.nodes[t[1]], mesh.nodes[t[2]]));
    return q;
}

std::vector<std::array<int, 3>> ear_clip(const Polygon& p) {
    const Polygon ring = is_ccw(p) ? p : p.reversed();
    const bool flipped = !is_ccw(p);
    const int n0 = static_cast<int>(ring.size());

    std::vector<int> remaining(n0);
    for (int i = 0; i < n0; ++i) remaining[i] = i;

    auto drop_collinear = [&] {
        bool changed = true;
        while (changed && remaining.size() > 3) {
            changed = false;
            const std::size_t m = remaining.size();
            for (std::size_t i = 0; i < m; ++i) {
                const Point a = ring[remaining[(i + m - 1) % m]];
                const Point b = ring[remaining[i]];
                const Point c = ring[remaining[(i + 1) % m]];
                if (orient2d(a, b, c) == 0.0) {
                    remaining.erase(remaining.begin() + static_cast<long>(i));
                    changed = true;
                    break;
                }
            }
        }
    };

    std::vector<std::array<int, 3>> out;
    drop_collinear();
    while (remaining.size() > 3) {
        const std::size_t m = remaining.size();
        int best = -1;
        double best_angle = -1.0;
        for (std::size_t i = 0; i < m; ++i) {
            const int ia = remaining[(i + m - 1) % m];
            const int ib = remaining[i];
            const int ic = remaining[(i + 1) % m];
            const Point a = ring[ia], b = ring[ib], c = ring[ic];
            if (orient2d(a, b, c) <= 0.0) continue;
            bool blocked = false;
            for (int k : remaining) {
                if (k == ia || k == ib || k == ic) continue;
                const Point q = ring[k];
                if (q == a || q == c) continue;
                if (in_triangle(a, b, c, q)) {
                    blocked = true;
                    break;
                }
            }
            if (blocked) continue;
            const double angle = min_triangle_angle(a, b, c);
            if (angle > best_angle) {
                best_angle = angle;
                best = static_cast<int>(i);
            }
        }
        if (best < 0) throw FemError("ear_clip: no ear found (polygon not simple?)");
        const std::size_t i = static_cast<std::size_t>(best);
        out.push_back({remaining[(i + m - 1) % m], remaining[i], remaining[(i + 1) % m]});
        // Straight-angle vertices left behind by a clipped ear are corners of
        // that ear, so they stay in the ring; dropping them would leave a
        // hanging node on the next diagonal.
        remaining.erase(remaining.begin() + best);
    }
    if (orient2d(ring[remaining[0]], ring[remaining[1]], ring[remaining[2]]) > 0.0)
        out.push_back({remaining[0], remaining[1], remaining[2]});

    if (flipped) {
        // Map indices of the reversed ring back to the caller's ordering.
        for (auto& t : out)
            for (int& v : t) v = n0 - 1 - v;
    }
    return out;
}

Mesh refine_uniform(const Mesh& mesh) {
    Mesh out;
    out.h = mesh.h;
    out.nodes = mesh.nodes;
    out.triangles.reserve(mesh.triangles.size() * 4);
    std::unordered_map<std::uint64_t, int> midpoint;
    midpoint.reserve(mesh.triangles.size() * 2);
    auto mid = [&](int a, int b) {
        const auto key = edge_key(a, b);
        auto it = midpoint.find(key);
        if (it != midpoint.end()) return it->second;
        const int id = static_cast<int>(out.nodes.size());
        out.nodes.push_back(0.5 * (mesh.nodes[a] + mesh.nodes[b]));
        midpoint.emplace(key, id);
        return id;
    };
    for (const auto& t : mesh.triangles) {
        const int ab = mid(t[0], t[1]);
        const int bc = mid(t[1], t[2]);
        const int ca = mid(t[2], t[0]);
        out.triangles.push_back({t[0], ab, ca});
        out.triangles.push_back({ab, t[1], bc});
        out.triangles.push_back({ca, bc, t[2]});
        out.triangles.push_back({ab, bc, ca});
    }
    mark_boundary(out);
    return out;
}

Mesh triangulate(const Polygon& input, double h, const MeshOptions& options) {
    if (!(h > 0.0)) throw FemError("triangulate: h must be positive");
    if (!is_simple(input)) throw FemError("triangulate: polygon is not simple");
    if (h >= diameter(input)) throw FemError("triangulate: h is too large to resolve the polygon");

    const Polygon p = is_ccw(input) ? input : input.reversed();
    Mesh mesh;
    mesh.h = h;
    mesh.nodes.assign(p.vertices().begin(), p.vertices().end());
    mesh.triangles = ear_clip(p);
    mark_boundary(mesh);

    // Vertices dropped as collinear are not referenced by any triangle.
    std::vector<int> remap(mesh.nodes.size(), -1);
    std::vector<Point> used;
    for (auto& t : mesh.triangles) {
        for (int& v : t) {
            if (remap[v] < 0) {
                remap[v] = static_cast<int>(used.size());
                used.push_back(mesh.nodes[v]);
            }
            v = remap[v];
        }
    }
    mesh.nodes = std::move(used);
    mark_boundary(mesh);

    double coarse_edge = mesh.max_edge_length();
    while (coarse_edge > h) {
        mesh = refine_uniform(mesh);
        coarse_edge *= 0.5;
        const bool last = coarse_edge <= h;
        smooth(mesh, options.smoothing_passes, last ? h : 0.0);
    }
    // Intermediate smoothing may have stretched edges past h.
    while (mesh.max_edge_length() > h) {
        mesh = refine_uniform(mesh);
        smooth(mesh, options.smoothing_passes, h);
    }
    return mesh;
}

void write_off(std::ostream& os, const Mesh& mesh) {
    os << "OFF\n" << mesh.nodes.size() << ' ' << mesh.triangles.size() << " 0\n";
    for (const Point& v : mesh.nodes) os << format_real(v.x) << ' ' << format_real(v.y) << " 0\n";
    for (const auto& t : mesh.triangles) os << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
}

}  // namespace drum
