#include "specx/glminmax.hpp"

#include <algorithm>
#include <functional>
#include <cmath>
#include <limits>
#include <random>

#include <Eigen/LU>

#include "specx/error.hpp"

namespace specx {
namespace {

void check_map(const TriMesh& mesh, const VectorMap& u) {
    if (u.rows() != mesh.num_vertices()) throw DomainError("map size does not match the mesh");
    if (u.cols() < 1) throw DomainError("map needs at least one component");
}

void check_eps(double eps) {
    if (!(eps > 0.0) || !std::isfinite(eps)) throw DomainError("eps must be positive");
}

GlEnergyParts parts_with(const SymmetricForm& k, const Eigen::VectorXd& areas, const VectorMap& u, double eps) {
    GlEnergyParts p;
    // Edge form 1/2 sum_{i<j} w_ij |u_i - u_j|^2: exact zero on constants.
    for (int c = 0; c < k.outerSize(); ++c)
        for (SymmetricForm::InnerIterator it(k, c); it; ++it)
            if (it.row() > it.col()) p.dirichlet -= 0.5 * it.value() * (u.row(it.row()) - u.row(it.col())).squaredNorm();
    const Eigen::VectorXd sq = u.rowwise().squaredNorm();
    p.potential = (areas.array() * (1.0 - sq.array()).square()).sum() / (4.0 * eps * eps);
    p.total = p.dirichlet + p.potential;
    p.avg_norm = areas.dot(sq.cwiseSqrt()) / areas.sum();
    return p;
}

// E(v) - E(u) without cancellation, given the Dirichlet change computed from u and the step.
double energy_change(const Eigen::VectorXd& areas, const VectorMap& u, const VectorMap& v, double eps,
                     double dirichlet_change) {
    double pot = 0.0;
    for (int i = 0; i < u.rows(); ++i) {
        const double qu = 1.0 - u.row(i).squaredNorm();
        const double qv = 1.0 - v.row(i).squaredNorm();
        const double dq = -(v.row(i) - u.row(i)).dot(v.row(i) + u.row(i));
        pot += areas[i] * dq * (qu + qv);
    }
    return dirichlet_change + pot / (4.0 * eps * eps);
}

VectorMap gradient_with(const SymmetricForm& k, const Eigen::VectorXd& areas, const VectorMap& u, double eps) {
    const Eigen::VectorXd w = areas.array() * (1.0 - u.rowwise().squaredNorm().array()) / (eps * eps);
    return k * u - w.asDiagonal() * u;
}

VectorMap hessian_with(const SymmetricForm& k, const Eigen::VectorXd& areas, const VectorMap& u, double eps,
                       const VectorMap& v) {
    VectorMap out = k * v;
    const double s = 1.0 / (eps * eps);
    for (int i = 0; i < u.rows(); ++i) {
        const double uv = u.row(i).dot(v.row(i));
        const double slack = 1.0 - u.row(i).squaredNorm();
        out.row(i) += s * areas[i] * (2.0 * uv * u.row(i) - slack * v.row(i));
    }
    return out;
}

double riesz_norm(const Eigen::VectorXd& areas, const VectorMap& g) {
    return std::sqrt((g.rowwise().squaredNorm().array() / areas.array()).sum());
}

VectorMap vertexwise(const SphereMap& phi, const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f) {
    VectorMap out(phi.size(), phi.ambient_dim());
    for (int i = 0; i < phi.size(); ++i) out.row(i) = f(phi.values().row(i).transpose()).transpose();
    return out;
}

VectorMap constant_map(int rows, const Eigen::VectorXd& value) {
    return value.transpose().replicate(rows, 1);
}

Eigen::VectorXd weighted_sum(const Eigen::VectorXd& w, const VectorMap& f) { return f.transpose() * w; }

// Damped Newton on g: R^d -> R^d with a central-difference Jacobian, kept inside the
// domain accepted by `feasible`. Returns the best point and its residual norm.
struct RootResult {
    Eigen::VectorXd x;
    double residual = std::numeric_limits<double>::infinity();
};

RootResult newton(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& g,
                  const std::function<bool(const Eigen::VectorXd&)>& feasible, Eigen::VectorXd x, double target) {
    RootResult best;
    Eigen::VectorXd gx = g(x);
    best.x = x;
    best.residual = gx.norm();
    const int d = static_cast<int>(x.size());
    for (int it = 0; it < 60 && best.residual > target; ++it) {
        Eigen::MatrixXd jac(gx.size(), d);
        const double h = 1e-6;
        for (int j = 0; j < d; ++j) {
            Eigen::VectorXd xp = x, xm = x;
            xp[j] += h;
            xm[j] -= h;
            if (feasible(xp) && feasible(xm)) {
                jac.col(j) = (g(xp) - g(xm)) / (2.0 * h);
            } else {
                jac.col(j) = (g(feasible(xp) ? xp : xm) - gx) / (feasible(xp) ? h : -h);
            }
        }
        const Eigen::VectorXd step = -jac.fullPivLu().solve(gx);
        if (!step.allFinite()) break;
        double s = 1.0;
        bool moved = false;
        while (s > 1e-8) {
            const Eigen::VectorXd trial = x + s * step;
            if (feasible(trial)) {
                const Eigen::VectorXd gt = g(trial);
                if (gt.norm() < gx.norm()) {
                    x = trial;
                    gx = gt;
                    moved = true;
                    break;
                }
            }
            s *= 0.5;
        }
        if (!moved) break;
        if (gx.norm() < best.residual) {
            best.x = x;
            best.residual = gx.norm();
        }
    }
    return best;
}

bool in_open_balls(const Eigen::VectorXd& p, int dim) {
    for (int k = 0; k * dim < p.size(); ++k)
        if (p.segment(k * dim, dim).norm() >= 1.0 - 1e-9) return false;
    return true;
}

std::vector<Eigen::VectorXd> random_ball_points(int dim, int factors, int count, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<Eigen::VectorXd> out;
    for (int c = 0; c < count; ++c) {
        Eigen::VectorXd p(dim * factors);
        for (int f = 0; f < factors; ++f) {
            Eigen::VectorXd v(dim);
            for (int i = 0; i < dim; ++i) v[i] = g(rng);
            p.segment(f * dim, dim) = 0.9 * std::pow(u(rng), 1.0 / dim) * v.normalized();
        }
        out.push_back(std::move(p));
    }
    return out;
}

// Interior points of the family grid (first factor only for product grids).
std::vector<Eigen::VectorXd> grid_interior(int dim, const BallSearchOptions& grid) {
    std::vector<Eigen::VectorXd> out;
    BallSearchOptions once = grid;
    once.refine_rounds = 0;
    once.boundary_samples = false;
    try {
        ball_sup(dim, 1, [&](const Eigen::VectorXd& p) {
            if (p.norm() < 1.0 - 1e-12) out.push_back(p);
            return 0.0;
        }, once);
    } catch (const DomainError&) {
    }
    return out;
}

BalancedPoint solve_balanced(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& g,
                             std::vector<Eigen::VectorXd> candidates, int dim, double target) {
    std::vector<std::pair<double, Eigen::VectorXd>> ranked;
    for (auto& c : candidates) ranked.emplace_back(g(c).norm(), std::move(c));
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
    const int starts = std::min<int>(8, static_cast<int>(ranked.size()));
    auto feasible = [dim](const Eigen::VectorXd& p) { return in_open_balls(p, dim); };
    BalancedPoint best;
    best.residual = std::numeric_limits<double>::infinity();
    for (int s = 0; s < starts; ++s) {
        const RootResult r = newton(g, feasible, ranked[s].second, 1e-3 * target);
        ++best.starts;
        if (r.residual < best.residual) {
            best.residual = r.residual;
            best.parameter = r.x;
        }
        if (best.residual < 1e-3 * target) break;
    }
    if (!(best.residual < target))
        throw SolverError("balanced point search failed; best residual " + std::to_string(best.residual));
    return best;
}

double dirichlet_of(const SymmetricForm& k, const VectorMap& u) { return (u.transpose() * (k * u)).trace(); }

}  // namespace

double gl_energy(const TriMesh& mesh, const VectorMap& u, double eps) { return gl_energy_parts(mesh, u, eps).total; }

GlEnergyParts gl_energy_parts(const TriMesh& mesh, const VectorMap& u, double eps) {
    check_map(mesh, u);
    check_eps(eps);
    return parts_with(stiffness_matrix(mesh), vertex_areas(mesh), u, eps);
}

VectorMap gl_gradient(const TriMesh& mesh, const VectorMap& u, double eps) {
    check_map(mesh, u);
    check_eps(eps);
    return gradient_with(stiffness_matrix(mesh), vertex_areas(mesh), u, eps);
}

VectorMap gl_hessian_apply(const TriMesh& mesh, const VectorMap& u, double eps, const VectorMap& v) {
    check_map(mesh, u);
    check_eps(eps);
    if (v.rows() != u.rows() || v.cols() != u.cols()) throw DomainError("variation shape does not match the map");
    return hessian_with(stiffness_matrix(mesh), vertex_areas(mesh), u, eps, v);
}

double gl_second_variation(const TriMesh& mesh, const VectorMap& u, double eps, const VectorMap& v) {
    return (v.array() * gl_hessian_apply(mesh, u, eps, v).array()).sum();
}

double gradient_norm(const TriMesh& mesh, const VectorMap& dual) {
    check_map(mesh, dual);
    return riesz_norm(vertex_areas(mesh), dual);
}

DescentResult gl_descend(const TriMesh& mesh, const VectorMap& u0, double eps, const DescentOptions& opt) {
    check_map(mesh, u0);
    check_eps(eps);
    const SymmetricForm k = stiffness_matrix(mesh);
    const Eigen::VectorXd areas = vertex_areas(mesh);
    SymmetricForm p = k;
    for (int i = 0; i < p.rows(); ++i) p.coeffRef(i, i) += areas[i] / (eps * eps);
    Eigen::SimplicialLDLT<SymmetricForm> precond(p);
    if (precond.info() != Eigen::Success) throw SolverError("descent preconditioner factorization failed");

    DescentResult r;
    r.u = u0;
    r.seed = opt.seed;
    double e = parts_with(k, areas, r.u, eps).total;
    VectorMap g = gradient_with(k, areas, r.u, eps);
    double gn = riesz_norm(areas, g);

    if (gn < opt.tol) {
        // Zero gradient: leave the critical point along a direction of negative curvature, if any.
        std::mt19937_64 rng(opt.seed);
        std::normal_distribution<double> normal;
        Eigen::VectorXd c(u0.cols());
        for (int j = 0; j < c.size(); ++j) c[j] = normal(rng);
        VectorMap field(u0.rows(), u0.cols());
        for (int i = 0; i < field.size(); ++i) field.data()[i] = normal(rng);
        const VectorMap candidates[2] = {constant_map(static_cast<int>(u0.rows()), c.normalized()),
                                         precond.solve(areas.asDiagonal() * field)};
        double best = 0.0;
        VectorMap dir;
        for (const auto& v : candidates) {
            const double l2 = std::sqrt(areas.dot(v.rowwise().squaredNorm()));
            const double curv = (v.array() * hessian_with(k, areas, r.u, eps, v).array()).sum() / (l2 * l2);
            if (curv < best) {
                best = curv;
                dir = v / l2;
            }
        }
        if (best < 0.0) {
            r.u += 1e-3 * std::sqrt(areas.sum()) * dir;
            r.perturbed = true;
            e = parts_with(k, areas, r.u, eps).total;
            g = gradient_with(k, areas, r.u, eps);
            gn = riesz_norm(areas, g);
        }
    }

    double step = 1.0;
    int it = 0;
    for (; it < opt.max_iterations && gn >= opt.tol; ++it) {
        const VectorMap d = -precond.solve(g);
        const double slope = (g.array() * d.array()).sum();
        if (!(slope < 0.0)) break;
        bool accepted = false;
        double s = std::min(2.0, 2.0 * step);
        const VectorMap kd = k * d;
        const double dkd = (d.array() * kd.array()).sum();
        const double ku_d = (d.array() * (k * r.u).array()).sum();
        while (s > 1e-12) {
            const VectorMap trial = r.u + s * d;
            const double de = energy_change(areas, r.u, trial, eps, s * ku_d + 0.5 * s * s * dkd);
            if (de <= 1e-4 * s * slope) {
                r.u = trial;
                e += de;
                accepted = true;
                break;
            }
            s *= 0.5;
        }
        if (!accepted) break;
        step = s;
        g = gradient_with(k, areas, r.u, eps);
        gn = riesz_norm(areas, g);
    }
    r.iterations = it;
    r.energy = parts_with(k, areas, r.u, eps).total;
    r.gradient_norm = gn;
    r.converged = gn < opt.tol;
    return r;
}

Mollifier::Mollifier(const TriMesh& mesh, double t) : t_(t), areas_(vertex_areas(mesh)) {
    if (!(t > 0.0) || !std::isfinite(t)) throw DomainError("mollification time must be positive");
    SymmetricForm a = t * stiffness_matrix(mesh);
    for (int i = 0; i < a.rows(); ++i) a.coeffRef(i, i) += areas_[i];
    solver_.compute(a);
    if (solver_.info() != Eigen::Success) throw SolverError("mollifier factorization failed");
}

VectorMap Mollifier::operator()(const VectorMap& f) const {
    if (f.rows() != areas_.size()) throw DomainError("map size does not match the mesh");
    return solver_.solve(areas_.asDiagonal() * f);
}

VectorMap mollify(const TriMesh& mesh, const VectorMap& f, double t) { return Mollifier(mesh, t)(f); }

Family::Family(const TriMesh& mesh, FamilySpec spec)
    : mesh_(&mesh), spec_(std::move(spec)), mollifier_(mesh, spec_.mollify_time) {
    if (spec_.base_map.size() != mesh.num_vertices()) throw DomainError("base map size does not match the mesh");
    check_eps(spec_.eps);
}

int Family::parameter_dim() const {
    return spec_.kind == FamilyKind::first ? ambient_dim() : 2 * ambient_dim();
}

VectorMap Family::first(const Eigen::VectorXd& a) const {
    if (a.size() != ambient_dim()) throw DomainError("parameter dimension does not match the target sphere");
    const double na = a.norm();
    if (na > 1.0 + 1e-12) throw DomainError("parameter must lie in the closed unit ball");
    if (na >= 1.0 - 1e-12) return constant_map(mesh_->num_vertices(), a);
    return mollifier_(vertexwise(spec_.base_map, [&](const Eigen::VectorXd& x) { return mobius_apply(a, x); }));
}

VectorMap Family::second(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const {
    if (a.size() != ambient_dim() || b.size() != ambient_dim())
        throw DomainError("parameter dimension does not match the target sphere");
    const double na = a.norm();
    if (na > 1.0 + 1e-12 || b.norm() > 1.0 + 1e-12) throw DomainError("parameters must lie in the closed unit ball");
    if (na >= 1.0 - 1e-12) return constant_map(mesh_->num_vertices(), a);
    return mollifier_(vertexwise(spec_.base_map, [&](const Eigen::VectorXd& x) { return upsilon(a, b, x); }));
}

VectorMap Family::member(const Eigen::VectorXd& p) const {
    if (p.size() != parameter_dim()) throw DomainError("parameter vector has the wrong length");
    if (spec_.kind == FamilyKind::first) return first(p);
    const int d = ambient_dim();
    return second(p.head(d), p.tail(d));
}

VectorMap Family::lifted(const Eigen::VectorXd& p) const {
    const int d = ambient_dim();
    if (p.size() != d + 1) throw DomainError("lifted parameter has the wrong length");
    if (p.norm() > 1.0 + 1e-12) throw DomainError("parameter must lie in the closed unit ball");
    const double s = p[d];
    const double r = std::sqrt(std::max(0.0, 1.0 - s * s));
    VectorMap out(mesh_->num_vertices(), d + 1);
    if (r <= 0.0 || p.head(d).norm() >= r) {
        const Eigen::VectorXd q = p / p.norm();
        return constant_map(mesh_->num_vertices(), q);
    }
    out.leftCols(d) = r * first(p.head(d) / r);
    out.col(d).setConstant(s);
    return out;
}

VectorMap family_first(const Family& family, const Eigen::VectorXd& a) { return family.first(a); }

VectorMap family_second(const Family& family, const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    return family.second(a, b);
}

BalancedPoint balanced_point(const Family& family, const std::optional<Eigen::VectorXd>& weights) {
    const TriMesh& mesh = family.mesh();
    const Eigen::VectorXd w = weights ? *weights : vertex_areas(mesh);
    if (w.size() != mesh.num_vertices()) throw DomainError("weights size does not match the mesh");
    const int dim = family.ambient_dim();
    auto candidates = grid_interior(dim, family.spec().grid);
    if (candidates.empty()) throw DomainError("balanced point search needs interior grid points");
    for (auto& p : random_ball_points(dim, 1, 8, family.spec().seed)) candidates.push_back(std::move(p));
    auto g = [&](const Eigen::VectorXd& a) { return weighted_sum(w, family.first(a)); };
    return solve_balanced(g, std::move(candidates), dim, 1e-6 * w.sum());
}

BalancedPoint balanced_point_second(const Family& family, const Eigen::VectorXd& phi1, const MeshMeasure& mu) {
    const TriMesh& mesh = family.mesh();
    if (family.spec().kind != FamilyKind::second) throw DomainError("balanced_point_second needs a second-family spec");
    if (phi1.size() != mesh.num_vertices() || mu.weights.size() != mesh.num_vertices())
        throw DomainError("eigenfunction or measure size does not match the mesh");
    const int dim = family.ambient_dim();
    auto interior = grid_interior(dim, family.spec().grid);
    if (interior.empty()) throw DomainError("balanced point search needs interior grid points");
    std::vector<Eigen::VectorXd> candidates;
    for (const auto& b : interior) {
        Eigen::VectorXd p = Eigen::VectorXd::Zero(2 * dim);
        p.tail(dim) = b;
        candidates.push_back(std::move(p));
    }
    for (auto& p : random_ball_points(dim, 2, 8, family.spec().seed)) candidates.push_back(std::move(p));
    const Eigen::VectorXd wphi = mu.weights.cwiseProduct(phi1);
    auto g = [&](const Eigen::VectorXd& p) {
        const VectorMap f = family.second(p.head(dim), p.tail(dim));
        Eigen::VectorXd out(2 * dim);
        out.head(dim) = weighted_sum(mu.weights, f);
        out.tail(dim) = weighted_sum(wphi, f);
        return out;
    };
    return solve_balanced(g, std::move(candidates), dim, 1e-6 * mu.total_mass());
}

MinMaxReport minmax_upper(const Family& family) {
    const TriMesh& mesh = family.mesh();
    const double eps = family.spec().eps;
    const SymmetricForm k = stiffness_matrix(mesh);
    const Eigen::VectorXd areas = vertex_areas(mesh);
    auto energy_at = [&](const Eigen::VectorXd& p) { return parts_with(k, areas, family.member(p), eps).total; };
    const int factors = family.spec().kind == FamilyKind::first ? 1 : 2;
    const BallSearchResult r = ball_sup(family.ambient_dim(), factors, energy_at, family.spec().grid);

    MinMaxReport rep;
    rep.eps = eps;
    rep.mollify_time = family.spec().mollify_time;
    rep.sup_energy = r.value;
    rep.argmax = r.argmax;
    rep.evaluations = r.evaluations;
    rep.rounds = r.rounds;
    const double area_total = areas.sum();
    if (factors == 1) {
        rep.balanced = balanced_point(family);
        const VectorMap f = family.first(rep.balanced->parameter);
        const double e = parts_with(k, areas, f, eps).total;
        ++rep.evaluations;
        if (e > rep.sup_energy) {
            rep.sup_energy = e;
            rep.argmax = rep.balanced->parameter;
        }
        rep.rayleigh = dirichlet_of(k, f) / areas.dot(f.rowwise().squaredNorm());
    }
    const double denom = area_total - 2.0 * eps * std::sqrt(area_total * rep.sup_energy);
    rep.eigenvalue_bound = denom > 0.0 ? 2.0 * rep.sup_energy / denom : std::numeric_limits<double>::infinity();
    return rep;
}

BallSearchResult minmax_upper_lifted(const Family& family) {
    if (family.spec().kind != FamilyKind::first) throw DomainError("lifting is defined for the first family");
    const TriMesh& mesh = family.mesh();
    const double eps = family.spec().eps;
    const SymmetricForm k = stiffness_matrix(mesh);
    const Eigen::VectorXd areas = vertex_areas(mesh);
    const int d = family.ambient_dim();

    // Lift exactly the parameters sampled by minmax_upper: p = (r y, s) with r = sqrt(1 - s^2).
    std::vector<Eigen::VectorXd> samples;
    ball_sup(d, 1, [&](const Eigen::VectorXd& y) {
        samples.push_back(y);
        return parts_with(k, areas, family.first(y), eps).total;
    }, family.spec().grid);

    BallSearchResult res;
    res.value = -std::numeric_limits<double>::infinity();
    const int levels = std::max(3, family.spec().grid.points_per_axis);
    for (const auto& y : samples) {
        for (int l = 0; l < levels; ++l) {
            const double s = -1.0 + 2.0 * l / (levels - 1);
            const double r = std::sqrt(std::max(0.0, 1.0 - s * s));
            Eigen::VectorXd p(d + 1);
            p.head(d) = r * y;
            p[d] = s;
            const double v = parts_with(k, areas, family.lifted(p), eps).total;
            ++res.evaluations;
            if (v > res.value) {
                res.value = v;
                res.argmax = p;
            }
        }
    }
    res.rounds.push_back(res.value);
    return res;
}

EigenLowerReport eigen_lower_from_family(const Family& family, const MeshMeasure& mu, double sup_energy) {
    const TriMesh& mesh = family.mesh();
    if (family.spec().kind != FamilyKind::first) throw DomainError("eigenvalue bound uses the first family");
    if (mu.weights.size() != mesh.num_vertices()) throw DomainError("measure size does not match the mesh");
    EigenLowerReport rep;
    rep.sup_energy = sup_energy;
    rep.balanced = balanced_point(family, mu.weights);
    const VectorMap f = family.first(rep.balanced.parameter);
    const double denom = mu.weights.dot(f.rowwise().squaredNorm());
    const SymmetricForm k = stiffness_matrix(mesh);
    rep.rayleigh = dirichlet_of(k, f) / denom;
    rep.bound = 2.0 * sup_energy / denom;
    rep.lambda1 = measure_eigs(mesh, mu, 1).values[1];
    // Exact balance would give lambda1 <= rayleigh; the residual perturbs it by O(residual).
    const double slack = 1e-6 + rep.balanced.residual / mu.total_mass();
    rep.holds = rep.lambda1 <= rep.rayleigh * (1.0 + slack) && rep.rayleigh <= rep.bound * (1.0 + 1e-12);
    return rep;
}

MinMaxReport extract_critical(const Family& family, MinMaxReport report, const DescentOptions& options) {
    const DescentResult d = gl_descend(family.mesh(), family.member(report.argmax), family.spec().eps, options);
    CriticalPoint c;
    c.u = d.u;
    c.energy = d.energy;
    c.gradient_norm = d.gradient_norm;
    c.converged = d.converged;
    try {
        c.tension = tension_residual(family.mesh(), SphereMap::normalize(d.u)).aggregate;
    } catch (const DomainError&) {
        c.tension = std::numeric_limits<double>::infinity();
    }
    report.critical = std::move(c);
    return report;
}

std::vector<ScheduleEntry> eps_schedule(const TriMesh& mesh, const FamilySpec& spec, const std::vector<double>& eps_list,
                                        const DescentOptions& options) {
    std::vector<ScheduleEntry> out;
    std::optional<VectorMap> warm;
    for (double eps : eps_list) {
        FamilySpec s = spec;
        s.eps = eps;
        const Family family(mesh, s);
        MinMaxReport rep = minmax_upper(family);
        const VectorMap start = warm ? *warm : family.member(rep.argmax);
        const DescentResult d = gl_descend(mesh, start, eps, options);
        ScheduleEntry e;
        e.eps = eps;
        e.sup_energy = rep.sup_energy;
        e.critical.u = d.u;
        e.critical.energy = d.energy;
        e.critical.gradient_norm = d.gradient_norm;
        e.critical.converged = d.converged;
        try {
            e.critical.tension = tension_residual(mesh, SphereMap::normalize(d.u)).aggregate;
        } catch (const DomainError&) {
            e.critical.tension = std::numeric_limits<double>::infinity();
        }
        warm = d.u;
        rep.critical = e.critical;
        e.report = std::move(rep);
        out.push_back(std::move(e));
    }
    return out;
}

}  // namespace specx
