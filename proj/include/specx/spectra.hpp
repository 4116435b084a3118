#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "specx/mesh.hpp"

namespace specx {

/// Ascending eigenpairs of a pencil K v = lambda B v with B a nonnegative diagonal.
struct Spectrum {
    Eigen::VectorXd values;
    /// One column per eigenvalue; B-orthonormal.
    Eigen::MatrixXd vectors;
    /// Relative residual |K v - lambda B v| / max(|K v| + |lambda| |B v|, 1e-7 |K|_1 |v|).
    Eigen::VectorXd residuals;
    double cluster_tol = 1e-3;
    /// Total mass of the right-hand form (area, measure mass or boundary length).
    double mass = 0.0;
    std::vector<std::string> warnings;

    int size() const { return static_cast<int>(values.size()); }
    /// Eigenvalues multiplied by the mass of the right-hand form.
    Eigen::VectorXd normalized() const { return values * mass; }
};

struct SolverOptions {
    double tol = 1e-8;
    int max_iterations = 400;
    /// Problems whose reduced size is at most this use a dense eigensolver.
    int dense_threshold = 300;
    double cluster_tol = 1e-3;
    std::uint64_t seed = 0x5eedULL;
    /// Optional starting block for the iterative solver (one column per vector).
    std::optional<Eigen::MatrixXd> initial;
};

/// Lowest `count` eigenpairs of K v = lambda diag(b) v.
///
/// Vertices with b = 0 are eliminated by a Schur complement (discrete harmonic
/// extension) in the dense path; the iterative path applies shift-invert to
/// the singular pencil, which spans the same reduced problem.
Spectrum generalized_eigs(const SymmetricForm& stiffness, const Eigen::VectorXd& b, int count,
                          const SolverOptions& options = {});

/// First k+1 eigenpairs of the Laplacian of f g0.
Spectrum laplace_eigs(const TriMesh& mesh, const ConformalDensity& f, int k,
                      const SolverOptions& options = {});
Spectrum laplace_eigs(const TriMesh& mesh, int k, const SolverOptions& options = {});

/// First k+1 eigenpairs of the measure mu (Rayleigh quotient over L^2(mu)).
Spectrum measure_eigs(const TriMesh& mesh, const MeshMeasure& mu, int k,
                      const SolverOptions& options = {});

/// First k+1 Steklov eigenpairs of a mesh with boundary.
Spectrum steklov_eigs(const TriMesh& mesh, int k, const SolverOptions& options = {});

/// lambda * area(f).
double normalized(double value, const TriMesh& mesh, const ConformalDensity& f);
/// sigma * boundary length.
double normalized_steklov(double value, const TriMesh& mesh);

/// Number of eigenvalues within cluster_tol * max(1, |value|) of value.
int multiplicity(const Spectrum& spectrum, double value);

/// Size of the cluster containing eigenvalue `index`.
int cluster_size(const Spectrum& spectrum, int index);

struct MaximizerOptions {
    double step = 0.5;
    int iterations = 200;
    /// Heat-smoothing time in units of h^2 (mean edge length squared); 0 disables.
    double smoothing = 1.0;
    /// Lower bound on the density relative to its mean; 0 allows conical zeros.
    double floor = 0.0;
    /// Eigenvalues within this relative window of lambda_1 enter the ascent direction.
    double cluster_window = 0.02;
    double gap_tol = 1e-4;
    int eigen_count = 8;
    std::optional<ConformalDensity> initial;
    SolverOptions solver;
};

struct MaximizerReport {
    ConformalDensity density;
    double lambda_bar = 0.0;
    int iterations = 0;
    /// |A * sum_i w_i phi_i^2 - 1| in L^2(f), the first-eigenfunction sum deviation.
    double stationarity_gap = 0.0;
    /// L^2(dv0) distance between the last two densities.
    double density_change_l2 = 0.0;
    /// Distance between the last two densities after heat smoothing (weak-topology proxy).
    double density_change_weak = 0.0;
    /// Number of vertices carrying positive density.
    int measure_rank = 0;
    int multiplicity = 0;
    bool converged = false;
    std::vector<double> history;
};

/// Projected ascent of lambda_1 * area over conformal densities on a closed mesh.
MaximizerReport maximize_lambda1_conformal(const TriMesh& mesh, const MaximizerOptions& options = {});

/// Single ascent step used by the maximizer; exposed for fixed-point checks.
ConformalDensity maximizer_step(const TriMesh& mesh, const ConformalDensity& f,
                                const MaximizerOptions& options, double step);

}  // namespace specx
