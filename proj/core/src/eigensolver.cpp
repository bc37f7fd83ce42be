// Block shift-invert Lanczos for the generalized problem K u = lambda M u.
//
// The operator K^-1 M is self-adjoint in the M inner product; its largest
// eigenvalues theta = 1/lambda are the wanted end of the Dirichlet spectrum.
// Blocks (rather than single vectors) keep exact and near multiplicities
// visible; full reorthogonalization avoids ghost copies.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

#include "drum/error.hpp"
#include "drum/fem.hpp"
#include "drum/random.hpp"

namespace drum {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

class BlockLanczos {
public:
    BlockLanczos(const SparseOperatorPair& ops, int n, const EigenOptions& options)
        : k_(ops.stiffness), m_(ops.mass), n_(n), options_(options), rng_(options.seed) {
        const Index size = ops.size();
        p_ = std::clamp<Index>(options.block_size, 1, std::max<Index>(1, size / 4));
        const Index wanted_dim = std::max<Index>(4 * n, n + 200);
        max_blocks_ = std::max<Index>(2, std::min<Index>(size / p_, (wanted_dim + p_ - 1) / p_));
        q_.resize(size, max_blocks_ * p_);
        h_ = MatrixXd::Zero((max_blocks_ + 1) * p_, max_blocks_ * p_);

        factor_.compute(k_);
        if (factor_.info() != Eigen::Success) throw FemError("solve_eigs: stiffness factorization failed");
    }

    EigenResult run() {
        MatrixXd start(q_.rows(), p_);
        for (Index j = 0; j < start.cols(); ++j)
            for (Index i = 0; i < start.rows(); ++i) start(i, j) = rng_.normal();
        MatrixXd r;
        orthonormalize(start, 0, r);
        q_.leftCols(p_) = start;

        // Convergence of the wanted end typically needs a Krylov dimension of
        // about 3n; earlier Rayleigh-Ritz solves would be wasted work.
        const Index first_check = std::max<Index>(n_ + 2 * p_, (5 * n_) / 2);
        const Index check_every = std::max<Index>(1, n_ / (8 * p_));
        double last_residual = -1.0;
        for (Index j = 0; j < max_blocks_; ++j) {
            const Index filled = (j + 1) * p_;
            MatrixXd mq(q_.rows(), p_);
            mq.noalias() = m_ * q_.middleCols(j * p_, p_);
            MatrixXd w = factor_.solve(mq);
            if (factor_.info() != Eigen::Success) throw FemError("solve_eigs: triangular solve failed");

            const MatrixXd coeff = project_out(w, filled);
            h_.block(0, j * p_, filled, p_) = coeff;

            const bool full = (j + 1 == max_blocks_);
            bool have_coupling = false;
            if (!full) {
                orthonormalize(w, filled, r);
                q_.middleCols(filled, p_) = w;
                h_.block(filled, j * p_, p_, p_) = r;
                have_coupling = true;
            }

            const bool due = full || (filled >= first_check && ((filled - first_check) / p_) % check_every == 0);
            if (!due) continue;
            EigenResult result;
            if (try_converge(filled, have_coupling, result, last_residual)) return result;
        }
        std::ostringstream msg;
        msg << "solve_eigs: no convergence at Krylov dimension " << max_blocks_ * p_
            << " (worst relative residual " << last_residual << ")";
        throw FemError(msg.str());
    }

private:
    VectorXd apply_mass(const VectorXd& v) const {
        VectorXd out(v.size());
        out.noalias() = m_ * v;
        return out;
    }

    double m_norm(const VectorXd& v) const { return std::sqrt(std::max(0.0, v.dot(apply_mass(v)))); }

    /// Block Gram-Schmidt against Q[:, :cols] in the M inner product.
    MatrixXd project_out(MatrixXd& w, Index cols, int passes = 2) const {
        MatrixXd coeff = MatrixXd::Zero(cols, w.cols());
        if (cols == 0) return coeff;
        for (int pass = 0; pass < passes; ++pass) {
            MatrixXd mw(w.rows(), w.cols());
            mw.noalias() = m_ * w;
            const MatrixXd c = q_.leftCols(cols).transpose() * mw;
            w.noalias() -= q_.leftCols(cols) * c;
            coeff += c;
        }
        return coeff;
    }

    /// M-orthonormal QR of w (already orthogonal to Q[:, :cols]); rank loss is
    /// patched with fresh random directions and a zero diagonal in R.
    void orthonormalize(MatrixXd& w, Index cols, MatrixXd& r) {
        r = MatrixXd::Zero(w.cols(), w.cols());
        for (Index j = 0; j < w.cols(); ++j) {
            const double before = m_norm(w.col(j));
            for (int pass = 0; pass < 2 && j > 0; ++pass) {
                const VectorXd mw = apply_mass(w.col(j));
                const VectorXd c = w.leftCols(j).transpose() * mw;
                w.col(j) -= w.leftCols(j) * c;
                r.col(j).head(j) += c;
            }
            double nrm = m_norm(w.col(j));
            if (nrm > 1e-10 * before && nrm > 0.0) {
                w.col(j) /= nrm;
                r(j, j) = nrm;
                continue;
            }
            // Breakdown: the Krylov space became invariant in this direction.
            for (int attempt = 0; attempt < 8; ++attempt) {
                VectorXd v(w.rows());
                for (Index i = 0; i < v.size(); ++i) v(i) = rng_.normal();
                MatrixXd vm = v;
                project_out(vm, cols);
                v = vm.col(0);
                for (int pass = 0; pass < 2 && j > 0; ++pass) {
                    const VectorXd c = w.leftCols(j).transpose() * apply_mass(v);
                    v -= w.leftCols(j) * c;
                }
                nrm = m_norm(v);
                if (nrm > 1e-8) {
                    w.col(j) = v / nrm;
                    break;
                }
            }
            if (!(nrm > 1e-8)) throw FemError("solve_eigs: cannot extend Krylov basis");
        }
    }

    bool try_converge(Index m, bool have_coupling, EigenResult& result, double& worst_seen) const {
        MatrixXd t = h_.topLeftCorner(m, m);
        t = 0.5 * (t + t.transpose()).eval();
        Eigen::SelfAdjointEigenSolver<MatrixXd> es(t);
        if (es.info() != Eigen::Success) return false;

        const VectorXd& theta = es.eigenvalues();
        const Index first = m - n_;
        if (theta(first) <= 0.0) return false;

        if (have_coupling) {
            const MatrixXd coupling = h_.block(m, m - p_, p_, p_);
            for (Index i = first; i < m; ++i) {
                const double estimate = (coupling * es.eigenvectors().col(i).tail(p_)).norm();
                if (estimate > 1e-11 * theta(i)) return false;
            }
        }

        const MatrixXd u = q_.leftCols(m) * es.eigenvectors().rightCols(n_);
        std::vector<double> lambda(static_cast<std::size_t>(n_));
        std::vector<double> residual(static_cast<std::size_t>(n_));
        double worst = 0.0;
        for (Index i = 0; i < n_; ++i) {
            // Largest theta first gives ascending lambda.
            const Index col = n_ - 1 - i;
            const double lam = 1.0 / theta(first + col);
            const VectorXd uc = u.col(col);
            const VectorXd mu = apply_mass(uc);
            VectorXd res(uc.size());
            res.noalias() = k_ * uc;
            res -= lam * mu;
            const double rel = res.norm() / (lam * mu.norm());
            lambda[static_cast<std::size_t>(i)] = lam;
            residual[static_cast<std::size_t>(i)] = rel;
            worst = std::max(worst, rel);
        }
        worst_seen = worst;
        if (worst > options_.residual_tol) return false;

        result.spectrum = Spectrum(std::move(lambda));
        result.relative_residuals = std::move(residual);
        result.krylov_dimension = m;
        return true;
    }

    const SparseMatrix& k_;
    const SparseMatrix& m_;
    Index n_;
    EigenOptions options_;
    Rng rng_;
    Index p_ = 1;
    Index max_blocks_ = 0;
    MatrixXd q_;
    MatrixXd h_;
    Eigen::SimplicialLDLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>> factor_;
};

// Below this many unknowns Krylov blocks would span most of the space, so a
// dense generalized solve is both cheaper and more robust.
constexpr Index kDenseLimit = 600;

EigenResult solve_dense(const SparseOperatorPair& ops, int n, const EigenOptions& options) {
    const MatrixXd k = MatrixXd(ops.stiffness);
    const MatrixXd m = MatrixXd(ops.mass);
    Eigen::GeneralizedSelfAdjointEigenSolver<MatrixXd> es(k, m);
    if (es.info() != Eigen::Success) throw FemError("solve_eigs: dense eigensolver failed");
    EigenResult result;
    std::vector<double> values(static_cast<std::size_t>(n));
    result.relative_residuals.resize(values.size());
    for (Index i = 0; i < n; ++i) {
        const double lambda = es.eigenvalues()(i);
        const VectorXd u = es.eigenvectors().col(i);
        const VectorXd mu = m * u;
        const double res = (k * u - lambda * mu).norm() / (lambda * mu.norm());
        if (!(lambda > 0.0) || !(res <= options.residual_tol))
            throw FemError("solve_eigs: dense solve missed the residual contract (" + std::to_string(res) + ")");
        values[static_cast<std::size_t>(i)] = lambda;
        result.relative_residuals[static_cast<std::size_t>(i)] = res;
    }
    result.spectrum = Spectrum(std::move(values));
    result.krylov_dimension = ops.size();
    return result;
}

}  // namespace

EigenResult solve_eigs_detailed(const SparseOperatorPair& ops, int n, const EigenOptions& options) {
    if (n < 1) throw FemError("solve_eigs: n must be at least 1");
    if (2 * static_cast<Index>(n) >= ops.size())
        throw FemError("solve_eigs: n must be below half the interior node count (" + std::to_string(ops.size()) +
                       " unknowns)");
    if (ops.size() <= kDenseLimit) return solve_dense(ops, n, options);
    BlockLanczos solver(ops, n, options);
    return solver.run();
}

}  // namespace drum
