#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCholesky>

#include "specx/harmonic.hpp"
#include "specx/mesh.hpp"
#include "specx/mobius.hpp"

namespace specx {

/// Per-vertex vectors in R^{n+1} (one row per vertex), unconstrained in norm.
using VectorMap = Eigen::MatrixXd;

struct GlEnergyParts {
    double dirichlet = 0.0;
    double potential = 0.0;
    double total = 0.0;
    /// Area-weighted mean of |u|.
    double avg_norm = 0.0;
};

/// E_eps(u) = 1/2 u^T K u + sum_i A_i (1 - |u_i|^2)^2 / (4 eps^2).
double gl_energy(const TriMesh& mesh, const VectorMap& u, double eps);
GlEnergyParts gl_energy_parts(const TriMesh& mesh, const VectorMap& u, double eps);

/// Differential of E_eps as a dual vector: K u - eps^-2 diag(A (1 - |u|^2)) u.
/// Pairing with v (sum of entrywise products) is the directional derivative.
VectorMap gl_gradient(const TriMesh& mesh, const VectorMap& u, double eps);

/// Second variation sum_c V_c^T K V_c + sum_i A_i eps^-2 (2 <u_i, V_i>^2 - (1 - |u_i|^2) |V_i|^2).
double gl_second_variation(const TriMesh& mesh, const VectorMap& u, double eps, const VectorMap& v);
/// Symmetric bilinear form behind gl_second_variation applied to V (a dual vector).
VectorMap gl_hessian_apply(const TriMesh& mesh, const VectorMap& u, double eps, const VectorMap& v);

/// Riesz norm sqrt(g^T A^{-1} g) of a dual vector, the L^2 size of the gradient.
double gradient_norm(const TriMesh& mesh, const VectorMap& dual);

struct DescentOptions {
    int max_iterations = 5000;
    double tol = 1e-6;
    /// Seed for the perturbation used to leave a saddle with zero gradient.
    std::uint64_t seed = 1;
};

struct DescentResult {
    VectorMap u;
    double energy = 0.0;
    double gradient_norm = 0.0;
    int iterations = 0;
    bool converged = false;
    /// Set when the start was a critical point with a negative direction and was perturbed.
    bool perturbed = false;
    std::uint64_t seed = 0;
};

/// Preconditioned gradient descent with Armijo backtracking; E_eps never increases.
DescentResult gl_descend(const TriMesh& mesh, const VectorMap& u0, double eps, const DescentOptions& options = {});

/// One implicit lumped heat step (A + t K)^{-1} A, factorized once.
class Mollifier {
public:
    Mollifier(const TriMesh& mesh, double t);
    VectorMap operator()(const VectorMap& f) const;
    double time() const { return t_; }

private:
    double t_ = 0.0;
    Eigen::VectorXd areas_;
    Eigen::SimplicialLDLT<SymmetricForm> solver_;
};

VectorMap mollify(const TriMesh& mesh, const VectorMap& f, double t);

enum class FamilyKind { first, second };

struct FamilySpec {
    SphereMap base_map;
    FamilyKind kind = FamilyKind::first;
    double mollify_time = 1e-3;
    double eps = 0.1;
    BallSearchOptions grid;
    /// Seed for the random multistarts of the root searches.
    std::uint64_t seed = 7;
};

/// An admissible family bound to a mesh: F_a = mollify(G_a o phi) and
/// F_{a,b} = mollify(G_a o T_b o phi) with their exact boundary values.
class Family {
public:
    Family(const TriMesh& mesh, FamilySpec spec);

    const TriMesh& mesh() const { return *mesh_; }
    const FamilySpec& spec() const { return spec_; }
    int ambient_dim() const { return spec_.base_map.ambient_dim(); }
    /// Length of a parameter vector: n+1 for the first family, 2(n+1) for the second.
    int parameter_dim() const;

    VectorMap first(const Eigen::VectorXd& a) const;
    VectorMap second(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const;
    VectorMap member(const Eigen::VectorXd& p) const;

    /// (sqrt(1 - s^2) F_{x / sqrt(1 - s^2)}, s) for p = (x, s) in the ball of dimension n+2.
    VectorMap lifted(const Eigen::VectorXd& p) const;

private:
    const TriMesh* mesh_;
    FamilySpec spec_;
    Mollifier mollifier_;
};

VectorMap family_first(const Family& family, const Eigen::VectorXd& a);
VectorMap family_second(const Family& family, const Eigen::VectorXd& a, const Eigen::VectorXd& b);

struct BalancedPoint {
    Eigen::VectorXd parameter;
    double residual = 0.0;
    int starts = 0;
};

/// Root of a -> sum_i w_i F_a(i) (w = vertex areas unless given) by damped Newton
/// from the best interior grid points. Throws SolverError when no start reaches
/// residual < 1e-6 * sum(w).
BalancedPoint balanced_point(const Family& family, const std::optional<Eigen::VectorXd>& weights = std::nullopt);

/// Root of (a, b) -> (sum mu F_{a,b}, sum mu phi1 F_{a,b}) for the second family.
BalancedPoint balanced_point_second(const Family& family, const Eigen::VectorXd& phi1, const MeshMeasure& mu);

struct CriticalPoint {
    VectorMap u;
    double energy = 0.0;
    double gradient_norm = 0.0;
    bool converged = false;
    /// Aggregate tension residual of u normalized to the sphere.
    double tension = 0.0;
};

struct MinMaxReport {
    double eps = 0.0;
    double mollify_time = 0.0;
    double sup_energy = 0.0;
    Eigen::VectorXd argmax;
    int evaluations = 0;
    std::vector<double> rounds;
    /// First family only: balanced parameter (its member is part of the sup).
    std::optional<BalancedPoint> balanced;
    /// Rayleigh quotient of the balanced member against the volume measure.
    double rayleigh = 0.0;
    /// 2 sup / (1 - 2 eps sqrt(sup)) scaled by 1/area, the family's bound on lambda_1 (inf if vacuous).
    double eigenvalue_bound = 0.0;
    std::optional<CriticalPoint> critical;
};

/// Sampled sup of E_eps over the family's parameter grid.
MinMaxReport minmax_upper(const Family& family);

/// Sup over the dimension-lifted family, comparable with minmax_upper of the same spec.
BallSearchResult minmax_upper_lifted(const Family& family);

struct EigenLowerReport {
    /// Balanced member Rayleigh quotient u^T K u / sum mu |u|^2.
    double rayleigh = 0.0;
    double lambda1 = 0.0;
    /// 2 sup / sum mu |F|^2, the bound available for a general measure.
    double bound = 0.0;
    double sup_energy = 0.0;
    /// lambda1 <= rayleigh * (1 + 1e-8) and rayleigh <= bound.
    bool holds = false;
    BalancedPoint balanced;
};

/// Balances the first family against mu and evaluates the Rayleigh-quotient chain.
EigenLowerReport eigen_lower_from_family(const Family& family, const MeshMeasure& mu, double sup_energy);

/// Descent from the sup argmax; the report gains `critical`.
MinMaxReport extract_critical(const Family& family, MinMaxReport report, const DescentOptions& options = {});

struct ScheduleEntry {
    double eps = 0.0;
    double sup_energy = 0.0;
    CriticalPoint critical;
    /// Full min-max report at this eps (critical filled from the warm-started descent).
    MinMaxReport report;
};

/// extract_critical over a decreasing eps schedule, warm-starting each descent.
std::vector<ScheduleEntry> eps_schedule(const TriMesh& mesh, const FamilySpec& spec, const std::vector<double>& eps_list,
                                        const DescentOptions& options = {});

}  // namespace specx
