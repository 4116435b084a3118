#include "specx/harmonic.hpp"

#include <cmath>
#include <numbers>

#include <Eigen/Geometry>

#include "specx/error.hpp"

namespace specx {
namespace {

constexpr double pi = std::numbers::pi;

// Sum_j w_ij |phi_i - phi_j|^2 / 4 with w_ij = -K_ij.
Eigen::VectorXd lumped_half_density(const SymmetricForm& k, const Eigen::MatrixXd& phi) {
    Eigen::VectorXd m = Eigen::VectorXd::Zero(k.rows());
    for (int c = 0; c < k.outerSize(); ++c) {
        for (SymmetricForm::InnerIterator it(k, c); it; ++it) {
            const int i = static_cast<int>(it.row());
            const int j = static_cast<int>(it.col());
            if (i == j) continue;
            m[i] += -0.25 * it.value() * (phi.row(i) - phi.row(j)).squaredNorm();
        }
    }
    return m;
}

Eigen::MatrixXd tension(const SymmetricForm& k, const Eigen::MatrixXd& phi, const Eigen::VectorXd& m) {
    Eigen::MatrixXd t = k * phi - 2.0 * m.asDiagonal() * phi;
    for (int i = 0; i < t.rows(); ++i) t.row(i) -= t.row(i).dot(phi.row(i)) * phi.row(i);
    return t;
}

std::complex<double> theta1(std::complex<double> z, std::complex<double> q) {
    std::complex<double> s = 0.0;
    for (int n = 0; n < 40; ++n) {
        const double e = (n + 0.5) * (n + 0.5);
        const std::complex<double> term = std::pow(q, e) * std::sin((2.0 * n + 1.0) * pi * z);
        s += (n % 2 ? -1.0 : 1.0) * term;
        if (std::abs(term) < 1e-18 * std::abs(s)) break;
    }
    return 2.0 * s;
}

std::complex<double> theta4(std::complex<double> z, std::complex<double> q) {
    std::complex<double> s = 1.0;
    for (int n = 1; n < 40; ++n) {
        const std::complex<double> term = 2.0 * std::pow(q, static_cast<double>(n) * n) * std::cos(2.0 * n * pi * z);
        s += (n % 2 ? -1.0 : 1.0) * term;
        if (std::abs(term) < 1e-18 * std::abs(s)) break;
    }
    return s;
}

// Inverse stereographic image of the homogeneous point [u : v].
Eigen::Vector3d riemann_sphere(std::complex<double> u, std::complex<double> v) {
    const std::complex<double> w = u * std::conj(v);
    const double d = std::norm(u) + std::norm(v);
    return Eigen::Vector3d(2.0 * w.real(), 2.0 * w.imag(), std::norm(u) - std::norm(v)) / d;
}

void require_periodic(const TriMesh& mesh) {
    if (!mesh.is_periodic()) throw DomainError("map needs a flat torus mesh");
}

}  // namespace

SphereMap::SphereMap(Eigen::MatrixXd values) : values_(std::move(values)) {
    if (values_.cols() < 3) throw DomainError("sphere maps need ambient dimension at least 3");
    for (int i = 0; i < values_.rows(); ++i)
        if (!(std::abs(values_.row(i).norm() - 1.0) <= 1e-12))
            throw DomainError("sphere map value at vertex " + std::to_string(i) + " is not a unit vector");
}

SphereMap SphereMap::normalize(Eigen::MatrixXd values) {
    for (int i = 0; i < values.rows(); ++i) {
        const double n = values.row(i).norm();
        if (!(n > 0.0) || !std::isfinite(n)) throw DomainError("cannot normalize a zero or non-finite vector");
        values.row(i) /= n;
    }
    return SphereMap(std::move(values));
}

SphereMap SphereMap::constant(int num_vertices, const Eigen::VectorXd& point) {
    Eigen::MatrixXd v(num_vertices, point.size());
    for (int i = 0; i < num_vertices; ++i) v.row(i) = point.normalized().transpose();
    return SphereMap(std::move(v));
}

SphereMap SphereMap::included(int ambient_dim) const {
    if (ambient_dim < this->ambient_dim()) throw DomainError("inclusion must not lower the dimension");
    Eigen::MatrixXd v = Eigen::MatrixXd::Zero(size(), ambient_dim);
    v.leftCols(this->ambient_dim()) = values_;
    return SphereMap(std::move(v));
}

SphereMap SphereMap::rotated(const Eigen::MatrixXd& q) const {
    if (q.rows() != ambient_dim() || q.cols() != ambient_dim()) throw DomainError("rotation has wrong size");
    return normalize(values_ * q.transpose());
}

SphereMap identity_map(const TriMesh& sphere) {
    Eigen::MatrixXd v(sphere.num_vertices(), 3);
    for (int i = 0; i < sphere.num_vertices(); ++i) v.row(i) = sphere.vertices()[i].transpose();
    return SphereMap::normalize(std::move(v));
}

SphereMap power_map(const TriMesh& sphere, int degree) {
    if (degree < 1) throw DomainError("power map degree must be positive");
    Eigen::MatrixXd v(sphere.num_vertices(), 3);
    for (int i = 0; i < sphere.num_vertices(); ++i) {
        const Vec3 p = sphere.vertices()[i].normalized();
        if (p.z() <= 0.0) {
            const std::complex<double> z = std::pow(std::complex<double>(p.x(), p.y()) / (1.0 - p.z()), degree);
            v.row(i) = riemann_sphere(z, 1.0).transpose();
        } else {
            const std::complex<double> w = std::pow(std::complex<double>(p.x(), -p.y()) / (1.0 + p.z()), degree);
            v.row(i) = riemann_sphere(1.0, w).transpose();
        }
    }
    return SphereMap::normalize(std::move(v));
}

SphereMap clifford_map(const TriMesh& torus) {
    require_periodic(torus);
    const auto tau = torus.chart()->tau;
    Eigen::MatrixXd v(torus.num_vertices(), 4);
    for (int i = 0; i < torus.num_vertices(); ++i) {
        const Vec3& p = torus.vertices()[i];
        const double b = p.y() / tau.imag();
        const double a = p.x() - b * tau.real();
        v.row(i) << std::cos(2 * pi * a), std::sin(2 * pi * a), std::cos(2 * pi * b), std::sin(2 * pi * b);
    }
    return SphereMap::normalize(v / std::sqrt(2.0));
}

SphereMap elliptic_map(const TriMesh& torus) {
    require_periodic(torus);
    const std::complex<double> q = std::exp(std::complex<double>(0.0, pi) * torus.chart()->tau);
    Eigen::MatrixXd v(torus.num_vertices(), 3);
    for (int i = 0; i < torus.num_vertices(); ++i) {
        const std::complex<double> z(torus.vertices()[i].x(), torus.vertices()[i].y());
        const auto t1 = theta1(z, q);
        const auto t4 = theta4(z, q);
        v.row(i) = riemann_sphere(t1 * t1, t4 * t4).transpose();
    }
    return SphereMap::normalize(std::move(v));
}

double energy(const TriMesh& mesh, const SphereMap& phi) { return energy_density(mesh, phi).total_mass(); }

EnergyDensity energy_density(const TriMesh& mesh, const SphereMap& phi) {
    if (phi.size() != mesh.num_vertices()) throw DomainError("map size does not match the mesh");
    EnergyDensity out;
    out.weights = lumped_half_density(stiffness_matrix(mesh), phi.values());
    out.density = out.weights.cwiseQuotient(vertex_areas(mesh));
    out.admissible = out.weights.minCoeff() >= 0.0;
    for (const auto& t : mesh.triangles())
        if (out.density[t[0]] <= 0.0 && out.density[t[1]] <= 0.0 && out.density[t[2]] <= 0.0)
            out.admissible = false;
    return out;
}

ConformalDensity EnergyDensity::as_density(const TriMesh& mesh) const {
    if (!admissible) throw DomainError("energy density vanishes on a whole triangle or is negative");
    return ConformalDensity(mesh, density);
}

TensionResidual tension_residual(const TriMesh& mesh, const SphereMap& phi) {
    if (phi.size() != mesh.num_vertices()) throw DomainError("map size does not match the mesh");
    const SymmetricForm k = stiffness_matrix(mesh);
    const Eigen::VectorXd a = vertex_areas(mesh);
    const Eigen::MatrixXd kphi = k * phi.values();
    const Eigen::MatrixXd t = tension(k, phi.values(), lumped_half_density(k, phi.values()));
    TensionResidual out;
    out.per_vertex = t.rowwise().norm().cwiseQuotient(a);
    double num = 0.0, den = 0.0;
    for (int i = 0; i < a.size(); ++i) {
        num += t.row(i).squaredNorm() / a[i];
        den += kphi.row(i).squaredNorm() / a[i];
    }
    out.aggregate = den > 0.0 ? std::sqrt(num / den) : 0.0;
    return out;
}

double stable_time_step(const TriMesh& mesh) {
    const SymmetricForm k = stiffness_matrix(mesh);
    const Eigen::VectorXd a = vertex_areas(mesh);
    double worst = 0.0;
    for (int c = 0; c < k.outerSize(); ++c) {
        double s = 0.0;
        for (SymmetricForm::InnerIterator it(k, c); it; ++it) s += std::abs(it.value());
        worst = std::max(worst, s / a[c]);
    }
    return 1.0 / worst;
}

SphereMap harmonic_flow(const TriMesh& mesh, const SphereMap& phi0, int steps, double dt) {
    if (phi0.size() != mesh.num_vertices()) throw DomainError("map size does not match the mesh");
    if (!(dt > 0.0) || steps < 0) throw DomainError("flow needs dt > 0 and steps >= 0");
    if (dt >= stable_time_step(mesh))
        throw DomainError("time step violates the stability bound dt * max_row(K/M) < 1");
    const SymmetricForm k = stiffness_matrix(mesh);
    const Eigen::VectorXd inv_a = vertex_areas(mesh).cwiseInverse();
    Eigen::MatrixXd phi = phi0.values();
    for (int s = 0; s < steps; ++s) {
        const Eigen::MatrixXd t = tension(k, phi, lumped_half_density(k, phi));
        phi -= dt * inv_a.asDiagonal() * t;
        phi.rowwise().normalize();
    }
    return SphereMap::normalize(std::move(phi));
}

SphereMap relax_harmonic(const TriMesh& mesh, const SphereMap& phi0, double tol, int max_steps, double cfl) {
    const double dt = cfl * stable_time_step(mesh);
    SphereMap phi = phi0;
    for (int done = 0; done < max_steps; done += 100) {
        if (tension_residual(mesh, phi).aggregate < tol) return phi;
        phi = harmonic_flow(mesh, phi, 100, dt);
    }
    if (tension_residual(mesh, phi).aggregate < tol) return phi;
    throw SolverError("harmonic relaxation did not reach the requested residual");
}

EigenvalueTwoReport check_eigenvalue_two(const TriMesh& mesh, const SphereMap& phi, const SolverOptions& options) {
    const EnergyDensity e = energy_density(mesh, phi);
    if (!(e.total_mass() > 0.0)) throw DomainError("energy density has zero total mass");
    EigenvalueTwoReport rep;
    const int rank = static_cast<int>((e.weights.array() > 0.0).count());
    int k = 8;
    for (;;) {
        k = std::min(k, rank - 1);
        rep.spectrum = measure_eigs(mesh, e.measure(), k, options);
        const double top = rep.spectrum.values[rep.spectrum.size() - 1];
        if (top > 2.0 * (1.0 + 2.0 * options.cluster_tol) + 1e-9 || k == rank - 1) break;
        k *= 2;
    }
    rep.multiplicity = multiplicity(rep.spectrum, 2.0);
    rep.present = rep.multiplicity > 0;
    const double window = rep.spectrum.cluster_tol * 2.0;
    rep.gap = std::numeric_limits<double>::infinity();
    for (int i = 0; i < rep.spectrum.size(); ++i) {
        const double d = std::abs(rep.spectrum.values[i] - 2.0);
        if (d > window) rep.gap = std::min(rep.gap, d);
    }
    return rep;
}

HopfField hopf_differential(const TriMesh& mesh, const SphereMap& phi) {
    if (phi.size() != mesh.num_vertices()) throw DomainError("map size does not match the mesh");
    HopfField out(mesh.num_triangles());
    const Eigen::MatrixXd& v = phi.values();
    for (int t = 0; t < mesh.num_triangles(); ++t) {
        const Vec3 p0 = mesh.corner(t, 0);
        const Vec3 d1 = mesh.corner(t, 1) - p0;
        const Vec3 d2 = mesh.corner(t, 2) - p0;
        Eigen::Matrix2d q;
        if (mesh.is_periodic()) {
            q << d1.x(), d1.y(), d2.x(), d2.y();
        } else {
            const Vec3 e1 = d1.normalized();
            const Vec3 e2 = d1.cross(d2).cross(d1).normalized();
            q << d1.dot(e1), d1.dot(e2), d2.dot(e1), d2.dot(e2);
        }
        const auto& tri = mesh.triangles()[t];
        Eigen::MatrixXd dphi(2, v.cols());
        dphi.row(0) = v.row(tri[1]) - v.row(tri[0]);
        dphi.row(1) = v.row(tri[2]) - v.row(tri[0]);
        const Eigen::MatrixXd grad = q.inverse() * dphi;  // rows: phi_x, phi_y
        out[t] = {grad.row(0).squaredNorm() - grad.row(1).squaredNorm(), -2.0 * grad.row(0).dot(grad.row(1))};
    }
    return out;
}

}  // namespace specx
