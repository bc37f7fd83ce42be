#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "drum/geometry.hpp"

namespace drum {

/// Conforming triangulation of a polygon. Triangles are counter-clockwise.
struct Mesh {
    std::vector<Point> nodes;
    std::vector<std::array<int, 3>> triangles;
    /// 1 for nodes on the polygon boundary.
    std::vector<std::uint8_t> boundary;
    /// Requested maximum edge length.
    double h = 0.0;

    std::size_t interior_count() const;
    double max_edge_length() const;
    double total_area() const;
};

struct MeshOptions {
    /// Laplacian smoothing passes after each refinement level (boundary fixed).
    int smoothing_passes = 2;
};

/// Ear-clipping triangulation of the polygon (collinear vertices dropped).
/// Returns index triples into `p`'s vertex ring.
std::vector<std::array<int, 3>> ear_clip(const Polygon& p);

/// Ear clipping followed by uniform midpoint refinement until every edge is
/// at most `h`, with quality-guarded smoothing of interior nodes.
/// Throws FemError for non-simple input, h <= 0, or h >= polygon diameter.
Mesh triangulate(const Polygon& p, double h, const MeshOptions& options = {});

/// One level of uniform midpoint ("red") refinement.
Mesh refine_uniform(const Mesh& mesh);

/// Minimum over triangles of 4*sqrt(3)*area / (sum of squared edge lengths); 1 for equilateral.
double min_quality(const Mesh& mesh);

/// Debug export in OFF format (z = 0).
void write_off(std::ostream& os, const Mesh& mesh);

}  // namespace drum
