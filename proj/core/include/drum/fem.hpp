#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/SparseCore>

#include "drum/mesh.hpp"

namespace drum {

using SparseMatrix = Eigen::SparseMatrix<double>;

/// P1 stiffness and consistent mass matrices restricted to interior nodes.
struct SparseOperatorPair {
    SparseMatrix stiffness;
    SparseMatrix mass;
    /// Mesh node index of each unknown.
    std::vector<int> dof_nodes;

    Eigen::Index size() const { return stiffness.rows(); }
};

/// Ascending Dirichlet eigenvalues (strictly positive, non-decreasing).
class Spectrum {
public:
    Spectrum() = default;
    /// Throws Error if values are non-positive or decreasing.
    explicit Spectrum(std::vector<double> eigenvalues);

    std::span<const double> values() const noexcept { return values_; }
    std::size_t size() const noexcept { return values_.size(); }
    double operator[](std::size_t i) const { return values_[i]; }

    friend bool operator==(const Spectrum&, const Spectrum&) = default;

private:
    std::vector<double> values_;
};

/// Full (pre-elimination) Neumann matrices over every node.
SparseOperatorPair assemble_full(const Mesh& mesh);
/// Dirichlet problem: boundary rows and columns removed. Throws FemError without interior nodes.
SparseOperatorPair assemble(const Mesh& mesh);

struct EigenOptions {
    int block_size = 4;
    /// Binding contract: ||K u - lambda M u|| <= residual_tol * lambda * ||M u||.
    double residual_tol = 1e-8;
    std::uint64_t seed = 0x5eed;
};

struct EigenResult {
    Spectrum spectrum;
    std::vector<double> relative_residuals;
    Eigen::Index krylov_dimension = 0;
};

/// The n smallest eigenvalues of K u = lambda M u via block shift-invert
/// Lanczos (shift 0, sparse LDL^T) with full M-reorthogonalization.
/// Requires 1 <= n < size/2. Throws FemError when the residual contract fails.
EigenResult solve_eigs_detailed(const SparseOperatorPair& ops, int n, const EigenOptions& options = {});
Spectrum solve_eigs(const SparseOperatorPair& ops, int n, const EigenOptions& options = {});

struct SpectrumOptions {
    MeshOptions mesh;
    EigenOptions eigen;
};

/// triangulate -> assemble -> solve_eigs. With `extrapolate`, meshes h and h/2
/// are combined as (4 lambda_{h/2} - lambda_h) / 3.
Spectrum spectrum_of(const Polygon& p, int n, double h, bool extrapolate, const SpectrumOptions& options = {});

/// CSV "index,eigenvalue" with 17 significant digits, 1-based index.
void write_spectrum_csv(std::ostream& os, const Spectrum& s);

}  // namespace drum
