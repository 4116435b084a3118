#pragma once

#include <complex>
#include <vector>

#include <Eigen/Core>

#include "specx/mesh.hpp"
#include "specx/spectra.hpp"

namespace specx {

/// Per-vertex unit vectors in R^{n+1}; one row per vertex.
class SphereMap {
public:
    SphereMap() = default;
    /// Rows must have unit length within 1e-12; at least 3 columns.
    explicit SphereMap(Eigen::MatrixXd values);
    /// Normalizes every row; throws on a zero row.
    static SphereMap normalize(Eigen::MatrixXd values);
    static SphereMap constant(int num_vertices, const Eigen::VectorXd& point);

    int ambient_dim() const { return static_cast<int>(values_.cols()); }
    int size() const { return static_cast<int>(values_.rows()); }
    const Eigen::MatrixXd& values() const { return values_; }

    /// Composition with the totally geodesic inclusion into a sphere of ambient dimension m.
    SphereMap included(int ambient_dim) const;
    /// Composition with an orthogonal transformation Q (ambient_dim x ambient_dim).
    SphereMap rotated(const Eigen::MatrixXd& q) const;

private:
    Eigen::MatrixXd values_;
};

/// Radial projection of the vertex positions of a sphere mesh.
SphereMap identity_map(const TriMesh& sphere);
/// z -> z^degree in the stereographic coordinate; conformal of that degree.
SphereMap power_map(const TriMesh& sphere, int degree);
/// (cos 2pi a, sin 2pi a, cos 2pi b, sin 2pi b)/sqrt 2 in lattice coordinates (a, b) of a flat torus.
SphereMap clifford_map(const TriMesh& torus);
/// Stereographic image of (theta1/theta4)^2, a branched conformal map of degree 2 from a flat torus.
SphereMap elliptic_map(const TriMesh& torus);

/// Dirichlet energy, the total mass of energy_density.
double energy(const TriMesh& mesh, const SphereMap& phi);

struct TensionResidual {
    /// |P(K phi - 2 m phi)|_i / A_i with A_i the background vertex area.
    Eigen::VectorXd per_vertex;
    /// L^2 norm of the tension relative to the L^2 norm of K phi / A (0 for constant maps).
    double aggregate = 0.0;
};
TensionResidual tension_residual(const TriMesh& mesh, const SphereMap& phi);

/// Largest dt allowed by dt * max_i sum_j |K_ij| / A_i < 1.
double stable_time_step(const TriMesh& mesh);

/// Explicit projected flow phi <- normalize(phi - dt A^{-1} tension).
SphereMap harmonic_flow(const TriMesh& mesh, const SphereMap& phi0, int steps, double dt);

/// Runs the flow at the given fraction of the stable step until the aggregate residual drops below tol.
SphereMap relax_harmonic(const TriMesh& mesh, const SphereMap& phi0, double tol, int max_steps = 200000,
                         double cfl = 0.9);

/// Lumped half energy density 1/2 |d phi|^2.
///
/// weights[i] = 1/4 sum_j w_ij |phi_i - phi_j|^2 (mass units); density = weights / A_i.
/// With this lumping K phi - 2 diag(weights) phi is tangential at every vertex.
struct EnergyDensity {
    Eigen::VectorXd weights;
    Eigen::VectorXd density;
    /// False when some triangle has all corners at zero density or a weight is negative.
    bool admissible = false;

    double total_mass() const { return weights.sum(); }
    MeshMeasure measure() const { return {MeasureKind::volume, weights}; }
    /// Throws DomainError when not admissible.
    ConformalDensity as_density(const TriMesh& mesh) const;
};
EnergyDensity energy_density(const TriMesh& mesh, const SphereMap& phi);

struct EigenvalueTwoReport {
    bool present = false;
    int multiplicity = 0;
    /// Distance from 2 to the nearest eigenvalue outside the cluster at 2.
    double gap = 0.0;
    Spectrum spectrum;
};
EigenvalueTwoReport check_eigenvalue_two(const TriMesh& mesh, const SphereMap& phi,
                                         const SolverOptions& options = {});

/// Per-face |phi_x|^2 - |phi_y|^2 - 2i <phi_x, phi_y>. Flat tori use the global chart,
/// other meshes a face chart whose real axis is the first edge.
using HopfField = std::vector<std::complex<double>>;
HopfField hopf_differential(const TriMesh& mesh, const SphereMap& phi);

}  // namespace specx
