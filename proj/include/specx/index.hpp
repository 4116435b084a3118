#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "specx/harmonic.hpp"
#include "specx/mesh.hpp"
#include "specx/spectra.hpp"

namespace specx {

struct IndexOptions {
    /// Eigenvalues of Q_E below -margin * |Q_E| count as negative (mass-normalized form).
    double margin = 1e-6;
    /// Relative window around the threshold 1 for nul_S.
    double cluster_tol = 1e-3;
    /// 0 keeps the Gram-Schmidt frames; any other value rotates each vertex frame at random.
    std::uint64_t frame_seed = 0;
    SolverOptions solver;
};

struct SpectralIndex {
    int ind_S = 0;
    int nul_S = 0;
    /// Distance from 1 of the largest eigenvalue counted in ind_S and of the first one above the null cluster.
    std::vector<double> margins;
    /// Counts unchanged when cluster_tol is halved.
    bool stable = true;
    /// Eigenvalues of K v = lambda |dPhi|^2 v up to just past the threshold.
    Eigen::VectorXd values;
};

struct EnergyIndex {
    int ind_E = 0;
    /// Absolute threshold margin * |Q_E| in the mass-normalized form.
    double threshold = 0.0;
    double norm = 0.0;
    /// Lowest mass-normalized eigenvalues of Q_E.
    Eigen::VectorXd values;
    /// Distance of the closest computed eigenvalue to -threshold.
    double margin = 0.0;
    int dimension = 0;
};

struct IndexReport {
    SpectralIndex spectral;
    EnergyIndex energy;
    double tension = 0.0;
    std::vector<std::string> warnings;
    static constexpr const char* normalization = "density |dPhi|^2, threshold 1";
};

/// ind_S, nul_S from K v = lambda B v with B the lumped |dPhi|^2 mass (threshold 1).
SpectralIndex spectral_index(const TriMesh& mesh, const SphereMap& phi, const IndexOptions& options = {});

/// Morse index of Q_E(V) = int |dV|^2 - |dPhi|^2 |V|^2 on per-vertex tangent vectors.
EnergyIndex energy_index(const TriMesh& mesh, const SphereMap& phi, const IndexOptions& options = {});

IndexReport index_report(const TriMesh& mesh, const SphereMap& phi, const IndexOptions& options = {});

/// Per-vertex orthonormal tangent frames (n+1) x n, stacked by vertex.
std::vector<Eigen::MatrixXd> tangent_frames(const SphereMap& phi, std::uint64_t frame_seed = 0);

struct CompositionLaw {
    int lhs = 0;
    int rhs = 0;
    bool equal = false;
    int ind_E = 0;
    int ind_S = 0;
};

/// ind_E of the inclusion into the sphere of ambient dimension m+1, directly and as
/// ind_E(phi) + (m - n) ind_S(phi).
CompositionLaw check_composition_law(const TriMesh& mesh, const SphereMap& phi, int m,
                                     const IndexOptions& options = {});

}  // namespace specx
