#include <algorithm>
#include <cmath>
#include <functional>

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>

#include "specx/error.hpp"
#include "specx/spectra.hpp"

namespace specx {

Spectrum laplace_eigs(const TriMesh& mesh, const ConformalDensity& f, int k, const SolverOptions& options) {
    if (f.size() != mesh.num_vertices()) throw DomainError("density size does not match the mesh");
    if (k < 0 || k >= mesh.num_vertices()) throw DomainError("need 0 <= k < number of vertices");
    return generalized_eigs(stiffness_matrix(mesh), mass_matrix(mesh, f), k + 1, options);
}

Spectrum laplace_eigs(const TriMesh& mesh, int k, const SolverOptions& options) {
    return laplace_eigs(mesh, ConformalDensity::constant(mesh), k, options);
}

Spectrum measure_eigs(const TriMesh& mesh, const MeshMeasure& mu, int k, const SolverOptions& options) {
    if (mu.weights.size() != mesh.num_vertices()) throw DomainError("measure size does not match the mesh");
    if (!(mu.total_mass() > 0.0)) throw DomainError("measure has zero total mass");
    if (k < 0) throw DomainError("k must be nonnegative");
    return generalized_eigs(stiffness_matrix(mesh), mu.weights, k + 1, options);
}

Spectrum steklov_eigs(const TriMesh& mesh, int k, const SolverOptions& options) {
    if (!mesh.has_boundary()) throw DomainError("Steklov problem needs a mesh with boundary");
    return measure_eigs(mesh, boundary_measure(mesh), k, options);
}

double normalized(double value, const TriMesh& mesh, const ConformalDensity& f) {
    return value * area(mesh, f);
}

double normalized_steklov(double value, const TriMesh& mesh) { return value * boundary_length(mesh); }

int multiplicity(const Spectrum& spectrum, double value) {
    const double window = spectrum.cluster_tol * std::max(1.0, std::abs(value));
    int count = 0;
    for (int i = 0; i < spectrum.size(); ++i)
        if (std::abs(spectrum.values[i] - value) <= window) ++count;
    return count;
}

int cluster_size(const Spectrum& spectrum, int index) {
    if (index < 0 || index >= spectrum.size()) throw DomainError("eigenvalue index out of range");
    return multiplicity(spectrum, spectrum.values[index]);
}

namespace {

struct AscentState {
    ConformalDensity f;
    Spectrum spectrum;
    double lambda = 0.0;
};

// Implicit heat step (M0 + t K)^{-1} M0 on the background metric.
class HeatSmoother {
public:
    HeatSmoother(const TriMesh& mesh, double time) : m0_(vertex_areas(mesh)) {
        if (time <= 0.0) return;
        SymmetricForm a = time * stiffness_matrix(mesh);
        for (int i = 0; i < a.rows(); ++i) a.coeffRef(i, i) += m0_[i];
        solver_.compute(a);
        if (solver_.info() != Eigen::Success) throw SolverError("heat smoothing factorization failed");
        active_ = true;
    }
    Eigen::VectorXd operator()(const Eigen::VectorXd& x) const {
        if (!active_) return x;
        return solver_.solve(m0_.cwiseProduct(x));
    }

private:
    Eigen::VectorXd m0_;
    Eigen::SimplicialLDLT<SymmetricForm> solver_;
    bool active_ = false;
};

ConformalDensity unit_area(const TriMesh& mesh, const Eigen::VectorXd& values) {
    const ConformalDensity raw(mesh, values);
    return ConformalDensity(mesh, values / area(mesh, raw));
}

// Indices of the eigenvalues grouped with lambda_1.
std::vector<int> first_cluster(const Spectrum& s, double window) {
    std::vector<int> idx;
    for (int i = 1; i < s.size() && s.values[i] <= s.values[1] * (1.0 + window); ++i) idx.push_back(i);
    return idx;
}

// Euclidean projection of a symmetric matrix onto {W >= 0, tr W = 1}.
Eigen::MatrixXd project_spectraplex(const Eigen::MatrixXd& w) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (w + w.transpose()));
    Eigen::VectorXd v = es.eigenvalues();
    std::vector<double> sorted(v.data(), v.data() + v.size());
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    double cum = 0.0, theta = 0.0;
    for (std::size_t k = 0; k < sorted.size(); ++k) {
        cum += sorted[k];
        const double t = (cum - 1.0) / static_cast<double>(k + 1);
        if (sorted[k] - t > 0.0) theta = t;
    }
    v = (v.array() - theta).cwiseMax(0.0);
    return es.eigenvectors() * v.asDiagonal() * es.eigenvectors().transpose();
}

// Minimum-norm element of the supergradient set of lambda_1 * area:
// d = 1 - A * phi^T W phi over PSD W with unit trace, phi the lambda_1 cluster.
Eigen::VectorXd ascent_direction(const TriMesh& mesh, const AscentState& st, double window) {
    const Eigen::VectorXd m = mass_matrix(mesh, st.f);
    const double a = m.sum();
    const auto idx = first_cluster(st.spectrum, window);
    const int c = static_cast<int>(idx.size());
    const int nv = static_cast<int>(m.size());

    Eigen::MatrixXd prod(nv, c * c);
    for (int i = 0; i < c; ++i)
        for (int j = 0; j < c; ++j)
            prod.col(i * c + j) = st.spectrum.vectors.col(idx[i]).cwiseProduct(st.spectrum.vectors.col(idx[j]));
    const Eigen::MatrixXd g = prod.transpose() * m.asDiagonal() * prod;

    Eigen::MatrixXd w = Eigen::MatrixXd::Identity(c, c) / c;
    if (c > 1) {
        const double lip = 2.0 * Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(g).eigenvalues().maxCoeff();
        Eigen::MatrixXd y = w, prev = w;
        double t = 1.0;
        for (int it = 0; it < 3000; ++it) {
            const Eigen::VectorXd grad = 2.0 * g * Eigen::Map<const Eigen::VectorXd>(y.data(), c * c);
            const Eigen::MatrixXd next =
                project_spectraplex(y - Eigen::Map<const Eigen::MatrixXd>(grad.data(), c, c) / lip);
            const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
            y = next + ((t - 1.0) / t_next) * (next - prev);
            if ((next - prev).norm() < 1e-15) {
                prev = next;
                break;
            }
            prev = next;
            t = t_next;
        }
        w = prev;
    }
    return (1.0 - a * (prod * Eigen::Map<const Eigen::VectorXd>(w.data(), c * c)).array()).matrix();
}

// L^2(f) norm of the ascent direction relative to the area.
double gap_of(const TriMesh& mesh, const AscentState& st, const Eigen::VectorXd& dir) {
    const Eigen::VectorXd m = mass_matrix(mesh, st.f);
    return std::sqrt(m.dot(dir.cwiseAbs2()) / m.sum());
}

AscentState evaluate(const TriMesh& mesh, const ConformalDensity& f, const MaximizerOptions& opt,
                     const Eigen::MatrixXd* warm) {
    SolverOptions so = opt.solver;
    if (warm) so.initial = *warm;
    AscentState st{f, laplace_eigs(mesh, f, std::max(opt.eigen_count, 2), so), 0.0};
    st.lambda = st.spectrum.values[1] * area(mesh, f);
    return st;
}

Eigen::VectorXd apply_step(const TriMesh& mesh, const Eigen::VectorXd& f, const Eigen::VectorXd& dir,
                           double step, double floor, const HeatSmoother& smooth) {
    Eigen::VectorXd next = smooth(f.array() * (step * dir.array()).exp());
    if (floor > 0.0) {
        const Eigen::VectorXd areas = vertex_areas(mesh);
        const double mean = areas.dot(next) / areas.sum();
        next = next.cwiseMax(floor * mean);
    }
    return next;
}

}  // namespace

ConformalDensity maximizer_step(const TriMesh& mesh, const ConformalDensity& f, const MaximizerOptions& opt,
                                double step) {
    const HeatSmoother smooth(mesh, opt.smoothing * std::pow(mean_edge_length(mesh), 2));
    const AscentState st = evaluate(mesh, unit_area(mesh, f.values()), opt, nullptr);
    return unit_area(mesh, apply_step(mesh, st.f.values(), ascent_direction(mesh, st, opt.cluster_window), step,
                                      opt.floor, smooth));
}

MaximizerReport maximize_lambda1_conformal(const TriMesh& mesh, const MaximizerOptions& opt) {
    if (mesh.has_boundary()) throw DomainError("conformal maximization needs a closed mesh");
    if (mesh.num_components() != 1) throw DomainError("conformal maximization needs a connected mesh");
    if (!(opt.step > 0.0) || opt.iterations < 0) throw DomainError("invalid maximizer step or iterations");
    const double h2 = std::pow(mean_edge_length(mesh), 2);
    const HeatSmoother smooth(mesh, opt.smoothing * h2);
    const HeatSmoother identity(mesh, 0.0);
    const HeatSmoother weak(mesh, 10.0 * h2);
    const Eigen::VectorXd areas = vertex_areas(mesh);

    const ConformalDensity start = opt.initial ? *opt.initial : ConformalDensity::constant(mesh);
    if (start.size() != mesh.num_vertices()) throw DomainError("initial density size does not match the mesh");
    AscentState cur = evaluate(mesh, unit_area(mesh, start.values()), opt, nullptr);

    MaximizerReport rep;
    rep.history.push_back(cur.lambda);
    Eigen::VectorXd previous = cur.f.values();
    double step = opt.step;
    // A small gap over a wide window only certifies approximate stationarity, so the
    // window narrows until the cluster it spans has merged to cluster_tol.
    const double tight = opt.solver.cluster_tol;
    double window = std::max(opt.cluster_window, tight);
    Eigen::VectorXd dir;
    double gap = 0.0;
    auto refresh = [&] {
        for (;;) {
            dir = ascent_direction(mesh, cur, window);
            gap = gap_of(mesh, cur, dir);
            const auto idx = first_cluster(cur.spectrum, window);
            const double spread = cur.spectrum.values[idx.back()] / cur.spectrum.values[1] - 1.0;
            if (gap >= opt.gap_tol || spread <= tight || window <= tight) return;
            window = std::max(0.5 * window, tight);
        }
    };
    refresh();
    int it = 0;
    for (; it < opt.iterations && gap >= opt.gap_tol; ++it) {
        bool accepted = false;
        // Smoothing can undo small ascent steps near a maximizer; retry without it.
        for (const HeatSmoother* sm : {&smooth, &identity}) {
            for (double s = step; s >= 1e-4 * opt.step && !accepted; s *= 0.5) {
                const ConformalDensity trial_f =
                    unit_area(mesh, apply_step(mesh, cur.f.values(), dir, s, opt.floor, *sm));
                AscentState trial = evaluate(mesh, trial_f, opt, &cur.spectrum.vectors);
                if (trial.lambda >= cur.lambda - 1e-12 * std::abs(cur.lambda)) {
                    previous = cur.f.values();
                    cur = std::move(trial);
                    accepted = true;
                    step = std::min(s * 1.5, opt.step);
                }
            }
            if (accepted) break;
        }
        if (!accepted) break;
        rep.history.push_back(cur.lambda);
        refresh();
    }

    const Eigen::VectorXd change = cur.f.values() - previous;
    rep.density = cur.f;
    rep.lambda_bar = cur.lambda;
    rep.iterations = it;
    rep.stationarity_gap = gap;
    rep.density_change_l2 = std::sqrt(areas.dot(change.cwiseAbs2()));
    const Eigen::VectorXd smoothed = weak(change);
    rep.density_change_weak = std::sqrt(areas.dot(smoothed.cwiseAbs2()));
    const double fmax = cur.f.values().maxCoeff();
    rep.measure_rank = static_cast<int>((cur.f.values().array() > 1e-12 * fmax).count());
    rep.multiplicity = cluster_size(cur.spectrum, 1);
    rep.converged = gap < opt.gap_tol;
    return rep;
}

}  // namespace specx
