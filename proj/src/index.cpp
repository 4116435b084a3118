#include "specx/index.hpp"

#include <cmath>
#include <limits>
#include <random>

#include <Eigen/QR>
#include <Eigen/SparseCholesky>

#include "specx/error.hpp"

namespace specx {
namespace {

void require_nonconstant(const EnergyDensity& e) {
    if (!(e.total_mass() > 1e-14)) throw DomainError("index needs a map with nonzero energy");
}

// Lowest eigenvalues of K v = lambda b v until one clears `threshold`.
Spectrum lowest_until(const SymmetricForm& k, const Eigen::VectorXd& b, double threshold, const SolverOptions& opt) {
    const int rank = static_cast<int>((b.array() > 0.0).count());
    int count = 8;
    for (;;) {
        count = std::min(count, rank);
        Spectrum s = generalized_eigs(k, b, count, opt);
        if (s.values[s.size() - 1] > threshold || count == rank) return s;
        count *= 2;
    }
}

Eigen::MatrixXd random_rotation(int n, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    Eigen::MatrixXd a(n, n);
    for (int i = 0; i < a.size(); ++i) a.data()[i] = g(rng);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
    return qr.householderQ();
}

// Largest eigenvalue of the symmetric pencil (Q, diag(mass)) by power iteration on a shifted form.
double spectral_norm(const SymmetricForm& q, const Eigen::VectorXd& mass) {
    const Eigen::VectorXd inv = mass.cwiseSqrt().cwiseInverse();
    Eigen::VectorXd v = Eigen::VectorXd::Ones(q.rows()).normalized();
    for (int i = 0; i < v.size(); ++i) v[i] += 1e-3 * std::sin(1.0 + i);
    v.normalize();
    double lambda = 0.0;
    for (int it = 0; it < 300; ++it) {
        Eigen::VectorXd w = inv.asDiagonal() * (q * (inv.asDiagonal() * v));
        const double next = v.dot(w);
        const double n = w.norm();
        if (!(n > 0.0)) return 0.0;
        v = w / n;
        if (it > 20 && std::abs(next - lambda) <= 1e-6 * std::abs(next)) return std::max(std::abs(next), n);
        lambda = next;
    }
    return std::abs(lambda);
}

}  // namespace

SpectralIndex spectral_index(const TriMesh& mesh, const SphereMap& phi, const IndexOptions& opt) {
    const EnergyDensity e = energy_density(mesh, phi);
    require_nonconstant(e);
    const Eigen::VectorXd b = 2.0 * e.weights;
    SolverOptions so = opt.solver;
    so.cluster_tol = opt.cluster_tol;
    const Spectrum s = lowest_until(stiffness_matrix(mesh), b, 1.0 + 4.0 * opt.cluster_tol, so);

    auto count = [&](double tol, int& ind, int& nul) {
        ind = nul = 0;
        for (int i = 0; i < s.size(); ++i) {
            if (s.values[i] < 1.0 - tol) ++ind;
            else if (s.values[i] <= 1.0 + tol) ++nul;
        }
    };
    SpectralIndex out;
    count(opt.cluster_tol, out.ind_S, out.nul_S);
    int ind_half = 0, nul_half = 0;
    count(0.5 * opt.cluster_tol, ind_half, nul_half);
    out.stable = ind_half == out.ind_S && nul_half == out.nul_S;
    out.values = s.values;
    double below = std::numeric_limits<double>::infinity();
    double above = std::numeric_limits<double>::infinity();
    for (int i = 0; i < s.size(); ++i) {
        const double d = s.values[i] - 1.0;
        if (d < -opt.cluster_tol) below = std::min(below, -d);
        if (d > opt.cluster_tol) above = std::min(above, d);
    }
    out.margins = {below, above};
    return out;
}

std::vector<Eigen::MatrixXd> tangent_frames(const SphereMap& phi, std::uint64_t frame_seed) {
    const int dim = phi.ambient_dim();
    const int n = dim - 1;
    std::mt19937_64 rng(frame_seed);
    std::vector<Eigen::MatrixXd> frames(phi.size());
    for (int i = 0; i < phi.size(); ++i) {
        const Eigen::VectorXd x = phi.values().row(i).transpose();
        if (std::abs(x.norm() - 1.0) > 1e-10) throw DomainError("tangent frame needs a unit vector");
        // Drop the seed axis most aligned with x; the other n stay well conditioned.
        int drop = 0;
        x.cwiseAbs().maxCoeff(&drop);
        Eigen::MatrixXd f(dim, n);
        int col = 0;
        for (int k = 0; k < dim; ++k) {
            if (k == drop) continue;
            Eigen::VectorXd v = Eigen::VectorXd::Unit(dim, k);
            for (int pass = 0; pass < 2; ++pass) {
                v -= v.dot(x) * x;
                for (int c = 0; c < col; ++c) v -= v.dot(f.col(c)) * f.col(c);
            }
            f.col(col++) = v.normalized();
        }
        if (frame_seed != 0) f = f * random_rotation(n, rng);
        frames[i] = std::move(f);
    }
    return frames;
}

EnergyIndex energy_index(const TriMesh& mesh, const SphereMap& phi, const IndexOptions& opt) {
    if (phi.size() != mesh.num_vertices()) throw DomainError("map size does not match the mesh");
    const EnergyDensity e = energy_density(mesh, phi);
    require_nonconstant(e);
    const int n = phi.ambient_dim() - 1;
    const auto frames = tangent_frames(phi, opt.frame_seed);
    const SymmetricForm k = stiffness_matrix(mesh);
    const Eigen::VectorXd areas = vertex_areas(mesh);
    const int nv = mesh.num_vertices();

    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(k.nonZeros()) * n * n);
    for (int c = 0; c < k.outerSize(); ++c) {
        for (SymmetricForm::InnerIterator it(k, c); it; ++it) {
            const int i = static_cast<int>(it.row());
            const int j = static_cast<int>(it.col());
            Eigen::MatrixXd block = it.value() * (frames[i].transpose() * frames[j]);
            if (i == j) block.diagonal().array() -= 2.0 * e.weights[i];
            for (int a = 0; a < n; ++a)
                for (int b = 0; b < n; ++b)
                    if (block(a, b) != 0.0) trip.emplace_back(i * n + a, j * n + b, block(a, b));
        }
    }
    SymmetricForm q(nv * n, nv * n);
    q.setFromTriplets(trip.begin(), trip.end());
    Eigen::VectorXd mass(nv * n);
    for (int i = 0; i < nv; ++i) mass.segment(i * n, n).setConstant(areas[i]);

    EnergyIndex out;
    out.dimension = nv * n;
    out.norm = spectral_norm(q, mass);
    out.threshold = opt.margin * out.norm;

    // Q + c M is positive semidefinite once c dominates |dPhi|^2 = 2 m_i / A_i.
    double shift = 0.0;
    for (int i = 0; i < nv; ++i) shift = std::max(shift, 2.0 * e.weights[i] / areas[i]);
    shift += 1.0;
    SymmetricForm shifted = q;
    for (int r = 0; r < shifted.rows(); ++r) shifted.coeffRef(r, r) += shift * mass[r];
    SolverOptions so = opt.solver;
    so.tol = std::max(so.tol, 1e-6);

    // Sylvester: negative pivots of Q + threshold M count eigenvalues below -threshold.
    SymmetricForm at_threshold = q;
    for (int r = 0; r < at_threshold.rows(); ++r) at_threshold.coeffRef(r, r) += out.threshold * mass[r];
    Eigen::SimplicialLDLT<SymmetricForm> ldlt(at_threshold);
    int inertia = -1;
    if (ldlt.info() == Eigen::Success) inertia = static_cast<int>((ldlt.vectorD().array() < 0.0).count());

    // The eigenvalues confirm the inertia count; fall back to a growing search otherwise.
    auto counted = [&](const Eigen::VectorXd& v) {
        return static_cast<int>((v.array() < -out.threshold).count());
    };
    Spectrum s;
    bool confirmed = false;
    if (inertia >= 0 && inertia + 1 <= out.dimension) {
        s = generalized_eigs(shifted, mass, inertia + 1, so);
        const Eigen::VectorXd v = s.values.array() - shift;
        confirmed = counted(v) == inertia && v[inertia] >= -out.threshold;
    }
    if (!confirmed) s = lowest_until(shifted, mass, shift + 4.0 * out.threshold + 1e-9, so);

    out.values = s.values.array() - shift;
    out.ind_E = counted(out.values);
    out.margin = std::numeric_limits<double>::infinity();
    for (int i = 0; i < out.values.size(); ++i)
        out.margin = std::min(out.margin, std::abs(out.values[i] + out.threshold));
    return out;
}

IndexReport index_report(const TriMesh& mesh, const SphereMap& phi, const IndexOptions& opt) {
    IndexReport r;
    r.tension = tension_residual(mesh, phi).aggregate;
    if (r.tension > 1e-2) r.warnings.push_back("tension residual above 1e-2; counts refer to a non-harmonic map");
    r.spectral = spectral_index(mesh, phi, opt);
    if (!r.spectral.stable) r.warnings.push_back("spectral counts change when cluster_tol is halved");
    r.energy = energy_index(mesh, phi, opt);
    return r;
}

CompositionLaw check_composition_law(const TriMesh& mesh, const SphereMap& phi, int m, const IndexOptions& opt) {
    const int n = phi.ambient_dim() - 1;
    if (m < n) throw DomainError("target sphere dimension must be at least that of the map");
    CompositionLaw law;
    law.ind_E = energy_index(mesh, phi, opt).ind_E;
    law.ind_S = spectral_index(mesh, phi, opt).ind_S;
    law.lhs = m == n ? law.ind_E : energy_index(mesh, phi.included(m + 1), opt).ind_E;
    law.rhs = law.ind_E + (m - n) * law.ind_S;
    law.equal = law.lhs == law.rhs;
    return law;
}

}  // namespace specx
