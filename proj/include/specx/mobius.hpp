#pragma once

#include <functional>
#include <vector>

#include <Eigen/Core>

#include "specx/harmonic.hpp"
#include "specx/mesh.hpp"

namespace specx {

/// G_a(x) = (1 - |a|^2)(x + a)/|x + a|^2 + a; returns a when |a| = 1.
Eigen::VectorXd mobius_apply(const Eigen::VectorXd& a, const Eigen::VectorXd& x);

/// Linear reflection x - 2 <x, b^> b^ across the hyperplane orthogonal to b.
Eigen::VectorXd linear_reflection(const Eigen::VectorXd& b, const Eigen::VectorXd& x);

/// Conformal reflection of the sphere across the boundary circle of the cap
/// C_b = {<x, b> <= |b| - |b|^2}. Involutive; the identity when b = 0.
Eigen::VectorXd cap_inversion(const Eigen::VectorXd& b, const Eigen::VectorXd& x);

/// T_b: identity on C_b, cap_inversion on the complement.
Eigen::VectorXd cap_reflection(const Eigen::VectorXd& b, const Eigen::VectorXd& x);

/// G_a o T_b.
Eigen::VectorXd upsilon(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const Eigen::VectorXd& x);

/// Vertexwise compositions with a sphere map.
SphereMap mobius_apply(const Eigen::VectorXd& a, const SphereMap& phi);
SphereMap upsilon(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const SphereMap& phi);

/// Options for maximizing a function over a product of closed balls.
struct BallSearchOptions {
    /// Grid points per axis on the initial cube grid (clipped to the balls).
    int points_per_axis = 9;
    /// Refinement rounds around the current argmax; the radius halves each round.
    int refine_rounds = 3;
    /// Points per axis in each refinement stencil.
    int refine_points = 5;
    /// Parameters are restricted to |p| <= max_radius in every ball factor.
    double max_radius = 1.0;
    /// Add samples on the boundary sphere of each factor (the family's boundary values).
    bool boundary_samples = false;
};

struct BallSearchResult {
    double value = 0.0;
    Eigen::VectorXd argmax;
    int evaluations = 0;
    /// Best value after the initial grid and after each refinement round.
    std::vector<double> rounds;
};

/// Grid maximization over `factors` copies of the ball of dimension `dim` (parameter
/// vector of length factors * dim), followed by shrinking local refinement.
BallSearchResult ball_sup(int dim, int factors, const std::function<double(const Eigen::VectorXd&)>& f,
                          const BallSearchOptions& options);

struct ConformalVolumeReport {
    double estimate = 0.0;
    Eigen::VectorXd argmax;
    int evaluations = 0;
    std::vector<double> rounds;
    /// Largest per-face Hopf magnitude of phi relative to its mean energy density.
    double hopf_defect = 0.0;
};

/// sup_a energy(G_a o phi) over |a| <= max_radius (0.999 by default).
ConformalVolumeReport conformal_volume(const TriMesh& mesh, const SphereMap& phi, BallSearchOptions options = {});

}  // namespace specx
