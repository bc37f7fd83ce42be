#include "drum/fem.hpp"

#include <algorithm>
#include <ostream>

#include "drum/error.hpp"

namespace drum {

Spectrum::Spectrum(std::vector<double> eigenvalues) : values_(std::move(eigenvalues)) {
    for (std::size_t i = 0; i < values_.size(); ++i) {
        if (!(values_[i] > 0.0)) throw Error("Spectrum: eigenvalues must be strictly positive");
        if (i > 0 && values_[i] < values_[i - 1]) throw Error("Spectrum: eigenvalues must be non-decreasing");
    }
}

namespace {

using Triplet = Eigen::Triplet<double>;

void element_matrices(const Mesh& mesh, const std::array<int, 3>& t, double k[3][3], double m[3][3]) {
    const Point p[3] = {mesh.nodes[t[0]], mesh.nodes[t[1]], mesh.nodes[t[2]]};
    const double twice_area = orient2d(p[0], p[1], p[2]);
    const double area = 0.5 * twice_area;
    // grad(phi_i) = (y_j - y_k, x_k - x_j) / (2A) for cyclic (i, j, k).
    Point g[3];
    for (int i = 0; i < 3; ++i) {
        const Point pj = p[(i + 1) % 3];
        const Point pk = p[(i + 2) % 3];
        g[i] = {(pj.y - pk.y) / twice_area, (pk.x - pj.x) / twice_area};
    }
    for (int i = 0; i < 3; ++i) {
        for (int j = i; j < 3; ++j) {
            k[i][j] = k[j][i] = area * dot(g[i], g[j]);
            m[i][j] = m[j][i] = area * (i == j ? 2.0 : 1.0) / 12.0;
        }
    }
}

SparseOperatorPair assemble_restricted(const Mesh& mesh, bool dirichlet) {
    std::vector<int> dof(mesh.nodes.size(), -1);
    SparseOperatorPair ops;
    for (std::size_t v = 0; v < mesh.nodes.size(); ++v) {
        if (dirichlet && mesh.boundary[v]) continue;
        dof[v] = static_cast<int>(ops.dof_nodes.size());
        ops.dof_nodes.push_back(static_cast<int>(v));
    }
    const auto n = static_cast<Eigen::Index>(ops.dof_nodes.size());
    if (n == 0) throw FemError("assemble: mesh has no interior nodes");

    std::vector<Triplet> kt, mt;
    kt.reserve(mesh.triangles.size() * 9);
    mt.reserve(mesh.triangles.size() * 9);
    for (const auto& t : mesh.triangles) {
        if (orient2d(mesh.nodes[t[0]], mesh.nodes[t[1]], mesh.nodes[t[2]]) <= 0.0)
            throw FemError("assemble: triangle with non-positive orientation");
        double k[3][3], m[3][3];
        element_matrices(mesh, t, k, m);
        for (int i = 0; i < 3; ++i) {
            const int di = dof[t[i]];
            if (di < 0) continue;
            for (int j = 0; j < 3; ++j) {
                const int dj = dof[t[j]];
                if (dj < 0) continue;
                kt.emplace_back(di, dj, k[i][j]);
                mt.emplace_back(di, dj, m[i][j]);
            }
        }
    }
    ops.stiffness.resize(n, n);
    ops.mass.resize(n, n);
    ops.stiffness.setFromTriplets(kt.begin(), kt.end());
    ops.mass.setFromTriplets(mt.begin(), mt.end());
    ops.stiffness.makeCompressed();
    ops.mass.makeCompressed();
    return ops;
}

}  // namespace

SparseOperatorPair assemble_full(const Mesh& mesh) { return assemble_restricted(mesh, false); }

SparseOperatorPair assemble(const Mesh& mesh) { return assemble_restricted(mesh, true); }

Spectrum solve_eigs(const SparseOperatorPair& ops, int n, const EigenOptions& options) {
    return solve_eigs_detailed(ops, n, options).spectrum;
}

Spectrum spectrum_of(const Polygon& p, int n, double h, bool extrapolate, const SpectrumOptions& options) {
    const Spectrum coarse = solve_eigs(assemble(triangulate(p, h, options.mesh)), n, options.eigen);
    if (!extrapolate) return coarse;
    const Spectrum fine = solve_eigs(assemble(triangulate(p, 0.5 * h, options.mesh)), n, options.eigen);
    std::vector<double> combined(static_cast<std::size_t>(n));
    for (std::size_t i = 0; i < combined.size(); ++i) combined[i] = (4.0 * fine[i] - coarse[i]) / 3.0;
    // Extrapolation can reorder members of a near-degenerate cluster.
    std::sort(combined.begin(), combined.end());
    return Spectrum(std::move(combined));
}

void write_spectrum_csv(std::ostream& os, const Spectrum& s) {
    os << "index,eigenvalue\n";
    for (std::size_t i = 0; i < s.size(); ++i) os << (i + 1) << ',' << format_real(s[i]) << '\n';
}

}  // namespace drum
