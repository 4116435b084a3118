#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>

#include "specx/error.hpp"
#include "specx/spectra.hpp"

namespace specx {
namespace {

double one_norm(const SymmetricForm& k) {
    double best = 0.0;
    for (int c = 0; c < k.outerSize(); ++c) {
        double s = 0.0;
        for (SymmetricForm::InnerIterator it(k, c); it; ++it) s += std::abs(it.value());
        best = std::max(best, s);
    }
    return best;
}

void fill_residuals(const SymmetricForm& k, const Eigen::VectorXd& b, Spectrum& s) {
    const double knorm = one_norm(k);
    s.residuals.resize(s.size());
    for (int j = 0; j < s.size(); ++j) {
        const Eigen::VectorXd v = s.vectors.col(j);
        const Eigen::VectorXd kv = k * v;
        const Eigen::VectorXd bv = b.cwiseProduct(v);
        const double lam = s.values[j];
        const double denom =
            std::max(kv.norm() + std::abs(lam) * bv.norm(), 1e-7 * knorm * v.norm());
        s.residuals[j] = (kv - lam * bv).norm() / denom;
    }
}

// Ascending eigenpairs of the dense pencil (S, diag(d)) with d > 0.
void dense_diagonal_pencil(const Eigen::MatrixXd& s, const Eigen::VectorXd& d, int count,
                           Eigen::VectorXd& values, Eigen::MatrixXd& vectors) {
    const Eigen::VectorXd inv_sqrt = d.cwiseSqrt().cwiseInverse();
    Eigen::MatrixXd c = inv_sqrt.asDiagonal() * s * inv_sqrt.asDiagonal();
    c = 0.5 * (c + c.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(c);
    if (eig.info() != Eigen::Success) throw SolverError("dense eigensolver failed");
    values = eig.eigenvalues().head(count);
    vectors = inv_sqrt.asDiagonal() * eig.eigenvectors().leftCols(count);
}

std::vector<std::string> support_warnings(const SymmetricForm& k, const std::vector<char>& in_support) {
    // Connectivity of the graph induced on the support.
    const int n = static_cast<int>(k.rows());
    std::vector<int> comp(n, -1);
    int ncomp = 0;
    std::vector<int> stack;
    for (int s = 0; s < n; ++s) {
        if (!in_support[s] || comp[s] != -1) continue;
        comp[s] = ncomp;
        stack.push_back(s);
        while (!stack.empty()) {
            const int v = stack.back();
            stack.pop_back();
            for (SymmetricForm::InnerIterator it(k, v); it; ++it) {
                const int w = static_cast<int>(it.row());
                if (in_support[w] && comp[w] == -1 && it.value() != 0.0) {
                    comp[w] = ncomp;
                    stack.push_back(w);
                }
            }
        }
        ++ncomp;
    }
    if (ncomp > 1)
        return {"measure support is disconnected (" + std::to_string(ncomp) + " components)"};
    return {};
}

Spectrum dense_solve(const SymmetricForm& k, const Eigen::VectorXd& b, int count,
                     const std::vector<int>& support, const std::vector<int>& rest) {
    const int ns = static_cast<int>(support.size());
    const int nr = static_cast<int>(rest.size());
    const int n = static_cast<int>(k.rows());
    Spectrum out;

    Eigen::VectorXd d(ns);
    for (int i = 0; i < ns; ++i) d[i] = b[support[i]];

    if (nr == 0) {
        dense_diagonal_pencil(Eigen::MatrixXd(k), d, count, out.values, out.vectors);
        return out;
    }

    // Schur complement of the measure-free block.
    std::vector<int> local(n);
    for (int i = 0; i < ns; ++i) local[support[i]] = i;
    for (int i = 0; i < nr; ++i) local[rest[i]] = i;
    std::vector<char> is_support(n, 0);
    for (int v : support) is_support[v] = 1;
    std::vector<Eigen::Triplet<double>> rr, rs;
    Eigen::MatrixXd kss = Eigen::MatrixXd::Zero(ns, ns);
    for (int c = 0; c < k.outerSize(); ++c) {
        for (SymmetricForm::InnerIterator it(k, c); it; ++it) {
            const int i = static_cast<int>(it.row());
            const int j = static_cast<int>(it.col());
            if (is_support[i] && is_support[j]) kss(local[i], local[j]) += it.value();
            else if (!is_support[i] && !is_support[j]) rr.emplace_back(local[i], local[j], it.value());
            else if (!is_support[i] && is_support[j]) rs.emplace_back(local[i], local[j], it.value());
        }
    }
    SymmetricForm krr(nr, nr), krs(nr, ns);
    krr.setFromTriplets(rr.begin(), rr.end());
    krs.setFromTriplets(rs.begin(), rs.end());
    Eigen::SimplicialLDLT<SymmetricForm> ldlt(krr);
    if (ldlt.info() != Eigen::Success) throw SolverError("harmonic extension factorization failed");
    const Eigen::VectorXd piv = ldlt.vectorD();
    if (piv.minCoeff() <= 1e-12 * piv.cwiseAbs().maxCoeff())
        throw SolverError("a mesh component carries no measure; reduced problem is singular");
    const Eigen::MatrixXd ext = ldlt.solve(Eigen::MatrixXd(krs));
    Eigen::MatrixXd schur = kss - Eigen::MatrixXd(krs.transpose()) * ext;
    schur = 0.5 * (schur + schur.transpose()).eval();

    Eigen::MatrixXd w;
    dense_diagonal_pencil(schur, d, count, out.values, w);
    const Eigen::MatrixXd interior = -ext * w;
    out.vectors.resize(n, count);
    for (int i = 0; i < ns; ++i) out.vectors.row(support[i]) = w.row(i);
    for (int i = 0; i < nr; ++i) out.vectors.row(rest[i]) = interior.row(i);
    return out;
}

// Columns rescaled to unit b-norm, then Cholesky QR applied twice.
bool b_orthonormalize(Eigen::MatrixXd& y, const Eigen::VectorXd& b) {
    for (int j = 0; j < y.cols(); ++j) {
        const double nrm = std::sqrt(y.col(j).cwiseAbs2().dot(b));
        if (!(nrm > 0.0) || !std::isfinite(nrm)) return false;
        y.col(j) /= nrm;
    }
    for (int pass = 0; pass < 2; ++pass) {
        const Eigen::MatrixXd gram = y.transpose() * b.asDiagonal() * y;
        Eigen::LLT<Eigen::MatrixXd> llt(0.5 * (gram + gram.transpose()));
        if (llt.info() != Eigen::Success) return false;
        y = llt.matrixU().solve<Eigen::OnTheRight>(y);
    }
    return true;
}

// Block shift-invert subspace iteration with Rayleigh-Ritz. Returns false if the
// iteration budget runs out.
bool iterative_solve(const SymmetricForm& k, const Eigen::VectorXd& b, int count, int block,
                     int max_iterations, const SolverOptions& opt, const Eigen::MatrixXd* start,
                     Spectrum& out) {
    const int n = static_cast<int>(k.rows());
    const double shift = 1e-4 * k.diagonal().sum() / b.sum();

    SymmetricForm shifted = k;
    for (int i = 0; i < n; ++i) shifted.coeffRef(i, i) += shift * b[i];
    Eigen::SimplicialLDLT<SymmetricForm> ldlt(shifted);
    if (ldlt.info() != Eigen::Success) throw SolverError("shift-invert factorization failed");
    const Eigen::VectorXd piv = ldlt.vectorD();
    if (piv.minCoeff() <= 0.0) throw SolverError("a mesh component carries no measure");

    std::mt19937_64 rng(opt.seed);
    std::normal_distribution<double> normal;
    Eigen::MatrixXd x(n, block);
    for (int j = 0; j < block; ++j)
        for (int i = 0; i < n; ++i) x(i, j) = normal(rng);
    if (start && start->rows() == n) {
        const int m = std::min<int>(block, static_cast<int>(start->cols()));
        x.leftCols(m) = start->leftCols(m);
    }

    const double knorm = one_norm(k);
    const int limit = static_cast<int>((b.array() > 0.0).count()) / 2;
    for (int iter = 0; iter < max_iterations; ++iter) {
        Eigen::MatrixXd y = ldlt.solve(b.asDiagonal() * x);
        if (!b_orthonormalize(y, b))
            throw SolverError("iteration block lost rank; measure support may be too small");
        Eigen::MatrixXd h = y.transpose() * (k * y);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ritz(0.5 * (h + h.transpose()));
        x = y * ritz.eigenvectors();

        bool done = true;
        for (int j = 0; j < count && done; ++j) {
            const Eigen::VectorXd v = x.col(j);
            const Eigen::VectorXd kv = k * v;
            const Eigen::VectorXd bv = b.cwiseProduct(v);
            const double lam = ritz.eigenvalues()[j];
            const double denom =
                std::max(kv.norm() + std::abs(lam) * bv.norm(), 1e-7 * knorm * v.norm());
            done = (kv - lam * bv).norm() <= opt.tol * denom;
        }
        if (done) {
            out.values = ritz.eigenvalues().head(count);
            out.vectors = x.leftCols(count);
            return true;
        }
        // A block edge inside a cluster stalls the wanted vectors; widen the block.
        const int cols = static_cast<int>(x.cols());
        if (iter % 25 == 24 && cols < limit && cols > count) {
            const double ratio = (ritz.eigenvalues()[count - 1] + shift) / (ritz.eigenvalues()[cols - 1] + shift);
            if (ratio > 0.7) {
                const int wider = std::min(limit, 2 * cols);
                Eigen::MatrixXd grown(n, wider);
                grown.leftCols(cols) = x;
                for (int j = cols; j < wider; ++j)
                    for (int i = 0; i < n; ++i) grown(i, j) = normal(rng);
                x = std::move(grown);
            }
        }
    }
    return false;
}

}  // namespace

Spectrum generalized_eigs(const SymmetricForm& k, const Eigen::VectorXd& b, int count,
                          const SolverOptions& options) {
    const int n = static_cast<int>(k.rows());
    if (k.cols() != n || b.size() != n) throw DomainError("pencil dimensions disagree");
    if (count < 1) throw DomainError("eigenpair count must be positive");
    if (count > n) throw DomainError("requested more eigenpairs than vertices");
    std::vector<int> support, rest;
    std::vector<char> in_support(n, 0);
    for (int i = 0; i < n; ++i) {
        if (b[i] < 0.0 || !std::isfinite(b[i])) throw DomainError("measure weights must be nonnegative");
        if (b[i] > 0.0) {
            support.push_back(i);
            in_support[i] = 1;
        } else {
            rest.push_back(i);
        }
    }
    if (support.empty()) throw DomainError("measure has zero total mass");
    if (count > static_cast<int>(support.size()))
        throw DomainError("requested " + std::to_string(count) +
                          " eigenpairs but the measure has rank " + std::to_string(support.size()));

    const int ns = static_cast<int>(support.size());
    Spectrum out;
    const int block = std::min(ns, std::max(2 * count, count + 8));
    if (ns <= options.dense_threshold || 3 * block > ns) {
        out = dense_solve(k, b, count, support, rest);
        // A few shift-invert sweeps tighten the dense vectors to the residual target.
        Spectrum polished;
        const Eigen::MatrixXd start = out.vectors;
        if (iterative_solve(k, b, count, count, 3, options, &start, polished)) out = std::move(polished);
    } else {
        const Eigen::MatrixXd* start = options.initial ? &*options.initial : nullptr;
        if (!iterative_solve(k, b, count, block, options.max_iterations, options, start, out))
            throw SolverError("shift-invert iteration did not converge in " +
                              std::to_string(options.max_iterations) + " iterations");
    }
    out.cluster_tol = options.cluster_tol;
    out.mass = b.sum();
    out.warnings = support_warnings(k, in_support);
    // Fix the sign of each eigenvector for reproducible output.
    for (int j = 0; j < out.size(); ++j) {
        Eigen::Index at = 0;
        out.vectors.col(j).cwiseAbs().maxCoeff(&at);
        if (out.vectors(at, j) < 0.0) out.vectors.col(j) *= -1.0;
    }
    fill_residuals(k, b, out);
    return out;
}

}  // namespace specx
