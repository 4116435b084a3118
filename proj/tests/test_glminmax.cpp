#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/QR>
#include <doctest.h>

#include "specx/error.hpp"
#include "specx/glminmax.hpp"
#include "support.hpp"

using namespace specx;
using testing_support::rel_err;

namespace {

constexpr double pi = std::numbers::pi;

VectorMap random_field(int rows, int cols, std::mt19937_64& rng, double scale = 1.0) {
    std::normal_distribution<double> g;
    VectorMap v(rows, cols);
    for (int i = 0; i < v.size(); ++i) v.data()[i] = scale * g(rng);
    return v;
}

FamilySpec sphere_spec(const TriMesh& m, double eps, FamilyKind kind = FamilyKind::first) {
    FamilySpec s;
    s.base_map = identity_map(m);
    s.eps = eps;
    s.kind = kind;
    s.mollify_time = 1e-3;
    return s;
}

}  // namespace

TEST_CASE("Ginzburg-Landau energy") {
    const TriMesh s2 = build_sphere_mesh(2);
    const int n = s2.num_vertices();
    Eigen::VectorXd p(3);
    p << 0.6, 0.0, 0.8;
    CHECK(gl_energy(s2, p.transpose().replicate(n, 1), 0.1) == doctest::Approx(0.0).epsilon(1e-14));
    // u = 0: only the potential, area / (4 eps^2).
    CHECK(rel_err(gl_energy(s2, VectorMap::Zero(n, 3), 0.5), area(s2)) < 1e-14);

    std::mt19937_64 rng(5);
    const VectorMap u = random_field(n, 4, rng, 0.6);
    const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(random_field(4, 4, rng)).householderQ();
    const GlEnergyParts a = gl_energy_parts(s2, u, 0.2);
    const GlEnergyParts b = gl_energy_parts(s2, u * q.transpose(), 0.2);
    CHECK(rel_err(b.total, a.total) < 1e-12);
    CHECK(a.total == doctest::Approx(a.dirichlet + a.potential));
    CHECK_THROWS_AS(gl_energy(s2, u, 0.0), DomainError);
    CHECK_THROWS_AS(gl_energy(s2, u.topRows(3), 0.1), DomainError);
}

TEST_CASE("gradient and Hessian match finite differences") {
    const TriMesh meshes[2] = {build_sphere_mesh(1), build_torus_mesh({0.3, 1.1}, 6)};
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> unif(0.05, 0.5);
    int worst_grad = 0, worst_hess = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const TriMesh& m = meshes[trial % 2];
        const int dim = 3 + trial % 3;
        const double eps = unif(rng);
        const VectorMap u = random_field(m.num_vertices(), dim, rng, 0.7);
        const VectorMap v = random_field(m.num_vertices(), dim, rng);
        const double h = 1e-5;
        const double fd = (gl_energy(m, u + h * v, eps) - gl_energy(m, u - h * v, eps)) / (2.0 * h);
        const double an = (gl_gradient(m, u, eps).array() * v.array()).sum();
        if (rel_err(an, fd) >= 1e-6) ++worst_grad;
        const VectorMap hv = gl_hessian_apply(m, u, eps, v);
        const VectorMap fdh = (gl_gradient(m, u + h * v, eps) - gl_gradient(m, u - h * v, eps)) / (2.0 * h);
        if ((hv - fdh).norm() >= 1e-4 * hv.norm()) ++worst_hess;
        CHECK(gl_second_variation(m, u, eps, v) == doctest::Approx((hv.array() * v.array()).sum()));
    }
    CHECK(worst_grad == 0);
    CHECK(worst_hess == 0);
}

TEST_CASE("descent") {
    const TriMesh s3 = build_sphere_mesh(3);
    const int n = s3.num_vertices();

    SUBCASE("unit constant is already critical") {
        const VectorMap c = Eigen::RowVector3d(0.0, 0.0, 1.0).replicate(n, 1);
        const DescentResult r = gl_descend(s3, c, 0.1);
        CHECK(r.converged);
        CHECK(r.iterations == 0);
        CHECK_FALSE(r.perturbed);
        CHECK(r.energy == doctest::Approx(0.0).epsilon(1e-14));
    }
    SUBCASE("identity stays near the identity") {
        const VectorMap id = identity_map(s3).values();
        const DescentResult r = gl_descend(s3, id, 0.05);
        CHECK(r.converged);
        CHECK(r.energy <= gl_energy(s3, id, 0.05));
        CHECK(rel_err(r.energy, 4.0 * pi) < 0.01);
    }
    SUBCASE("zero map breaks symmetry into a unit constant") {
        const DescentResult r = gl_descend(s3, VectorMap::Zero(n, 3), 0.2);
        CHECK(r.perturbed);
        CHECK(r.seed == 1);
        CHECK(r.converged);
        CHECK(r.energy < 1e-6);
        const Eigen::VectorXd norms = r.u.rowwise().norm();
        CHECK((norms.array() - 1.0).abs().maxCoeff() < 1e-3);
    }
}

TEST_CASE("mollifier") {
    const TriMesh s3 = build_sphere_mesh(3);
    const int n = s3.num_vertices();
    const VectorMap c = Eigen::RowVector3d(0.3, -0.4, 0.2).replicate(n, 1);
    CHECK((mollify(s3, c, 0.05) - c).cwiseAbs().maxCoeff() < 1e-14);

    std::mt19937_64 rng(3);
    const SymmetricForm k = stiffness_matrix(s3);
    for (const VectorMap& f : {identity_map(s3).values(), random_field(n, 3, rng)}) {
        const VectorMap g = mollify(s3, f, 1e-2);
        CHECK((g.transpose() * (k * g)).trace() < (f.transpose() * (k * f)).trace());
    }
    // The resolvent deviates by about t |A^-1 K f|, small for a smooth map.
    const VectorMap id = identity_map(s3).values();
    CHECK((mollify(s3, id, 1e-8) - id).cwiseAbs().maxCoeff() < 1e-6);
    CHECK_THROWS_AS(Mollifier(s3, 0.0), DomainError);
}

TEST_CASE("first family") {
    const TriMesh s3 = build_sphere_mesh(3);
    FamilySpec spec = sphere_spec(s3, 0.1);
    spec.mollify_time = 1e-9;
    const Family tiny(s3, spec);
    CHECK((tiny.first(Eigen::VectorXd::Zero(3)) - identity_map(s3).values()).cwiseAbs().maxCoeff() < 1e-6);

    const Family fam(s3, sphere_spec(s3, 0.1));
    const Eigen::VectorXd e1 = Eigen::VectorXd::Unit(3, 0);
    const VectorMap boundary = fam.first(e1);
    CHECK(boundary == e1.transpose().replicate(s3.num_vertices(), 1));
    CHECK(gl_energy(s3, boundary, 0.1) == 0.0);

    const VectorMap f = fam.first(0.9 * e1);
    CHECK(gl_energy(s3, f, 0.1) <= 4.0 * pi * 1.03);
    CHECK(f.rowwise().norm().maxCoeff() <= 1.0 + 1e-12);
    CHECK_THROWS_AS(fam.first(Eigen::VectorXd::Zero(4)), DomainError);
    CHECK_THROWS_AS(fam.first(1.1 * e1), DomainError);
}

TEST_CASE("second family boundary values") {
    const TriMesh s2 = build_sphere_mesh(2);
    const Family fam(s2, sphere_spec(s2, 0.1, FamilyKind::second));
    std::mt19937_64 rng(9);
    std::normal_distribution<double> g;
    for (int trial = 0; trial < 20; ++trial) {
        Eigen::VectorXd a(3), b(3);
        for (int i = 0; i < 3; ++i) {
            a[i] = g(rng);
            b[i] = g(rng);
        }
        a *= 0.9 / a.norm() * std::abs(std::sin(trial + 1.0));
        b.normalize();
        CHECK(fam.second(a, Eigen::VectorXd::Zero(3)) == fam.first(a));
        const Eigen::VectorXd ah = a.normalized();
        CHECK(fam.second(ah, 0.5 * b) == ah.transpose().replicate(s2.num_vertices(), 1));
        // tau_b o F_{tau_b(a), -b} = F_{a, b} for |b| = 1.
        const Eigen::MatrixXd tau = Eigen::MatrixXd::Identity(3, 3) - 2.0 * b * b.transpose();
        const VectorMap lhs = fam.second(a, b);
        const VectorMap rhs = fam.second(tau * a, -b) * tau.transpose();
        CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("min-max upper bound on the sphere") {
    const TriMesh s3 = build_sphere_mesh(3);
    const Family fam(s3, sphere_spec(s3, 0.1));
    const MinMaxReport rep = minmax_upper(fam);
    CHECK(std::abs(rep.sup_energy - 4.0 * pi) < 0.03 * 4.0 * pi);
    REQUIRE(rep.balanced);
    CHECK(rep.balanced->parameter.norm() < 1e-6);
    CHECK(rep.rounds.size() == 4);
    for (std::size_t i = 1; i < rep.rounds.size(); ++i) CHECK(rep.rounds[i] >= rep.rounds[i - 1]);

    FamilySpec only = sphere_spec(s3, 0.1);
    only.grid.points_per_axis = 1;
    only.grid.refine_rounds = 0;
    const Family single(s3, only);
    const MinMaxReport r0 = minmax_upper(single);
    CHECK(r0.sup_energy == doctest::Approx(gl_energy(s3, single.first(Eigen::VectorXd::Zero(3)), 0.1)).epsilon(1e-12));

    const BallSearchResult lifted = minmax_upper_lifted(fam);
    CHECK(lifted.value <= rep.sup_energy + 1e-9);

    const MinMaxReport crit = extract_critical(fam, rep);
    REQUIRE(crit.critical);
    CHECK(crit.critical->converged);
    CHECK(crit.critical->energy <= rep.sup_energy);
    CHECK(rel_err(crit.critical->energy, 4.0 * pi) < 0.02);
    CHECK(crit.critical->tension < 1e-2);
}

TEST_CASE("second family upper bound") {
    const TriMesh s2 = build_sphere_mesh(2);
    FamilySpec spec = sphere_spec(s2, 0.1, FamilyKind::second);
    spec.grid.points_per_axis = 5;
    const MinMaxReport rep = minmax_upper(Family(s2, spec));
    CHECK(rep.sup_energy <= 8.0 * pi * 1.03);
    CHECK(rep.sup_energy > 4.0 * pi);
    CHECK(rep.argmax.size() == 6);
    CHECK_FALSE(rep.balanced);
}

TEST_CASE("balanced points") {
    const TriMesh s3 = build_sphere_mesh(3);
    const Family fam(s3, sphere_spec(s3, 0.1));
    const BalancedPoint sym = balanced_point(fam);
    CHECK(sym.parameter.norm() < 1e-6);

    FamilySpec shifted = sphere_spec(s3, 0.1);
    shifted.base_map = mobius_apply(0.5 * Eigen::VectorXd::Unit(3, 0), identity_map(s3));
    const Family moved(s3, shifted);
    const BalancedPoint bp = balanced_point(moved);
    CHECK(bp.residual < 1e-6 * area(s3));
    CHECK(bp.parameter.norm() > 0.2);

    FamilySpec degenerate = sphere_spec(s3, 0.1);
    degenerate.grid.points_per_axis = 2;
    CHECK_THROWS_AS(balanced_point(Family(s3, degenerate)), DomainError);
}

TEST_CASE("second balanced point") {
    const TriMesh s2 = build_sphere_mesh(2);
    FamilySpec spec = sphere_spec(s2, 0.1, FamilyKind::second);
    spec.grid.points_per_axis = 5;
    const Family fam(s2, spec);
    const MeshMeasure mu = volume_measure(s2, ConformalDensity::constant(s2));
    const Spectrum sp = measure_eigs(s2, mu, 1);
    const BalancedPoint r = balanced_point_second(fam, sp.vectors.col(1), mu);
    CHECK(r.residual < 1e-6 * mu.total_mass());
    const BalancedPoint r3 = balanced_point_second(fam, sp.vectors.col(1), mu.scaled(3.0));
    CHECK((r3.parameter - r.parameter).norm() < 1e-8);
    CHECK_THROWS_AS(balanced_point_second(Family(s2, sphere_spec(s2, 0.1)), sp.vectors.col(1), mu), DomainError);
    CHECK_THROWS_AS(balanced_point_second(fam, sp.vectors.col(1).head(5), mu), DomainError);
}

TEST_CASE("eigenvalue bounds from the family") {
    SUBCASE("round sphere attains the bound") {
        const TriMesh s3 = build_sphere_mesh(3);
        const Family fam(s3, sphere_spec(s3, 0.1));
        const MinMaxReport rep = minmax_upper(fam);
        const MeshMeasure mu = volume_measure(s3, ConformalDensity::constant(s3)).normalized();
        const EigenLowerReport r = eigen_lower_from_family(fam, mu, rep.sup_energy);
        CHECK(r.holds);
        CHECK(rel_err(r.rayleigh, 8.0 * pi) < 0.02);
        CHECK(rel_err(r.lambda1, 8.0 * pi) < 0.02);
    }
    SUBCASE("square torus") {
        const TriMesh t = build_torus_mesh({0.0, 1.0}, 24);
        const MeshMeasure mu = volume_measure(t, ConformalDensity::constant(t)).normalized();
        FamilySpec spec;
        spec.eps = 0.1;
        spec.mollify_time = 1e-4;
        spec.grid.points_per_axis = 5;

        // Degree-2 branched conformal map to S^2: strict slack.
        spec.base_map = elliptic_map(t);
        const Family ell(t, spec);
        const MinMaxReport re = minmax_upper(ell);
        const EigenLowerReport r = eigen_lower_from_family(ell, mu, re.sup_energy);
        CHECK(r.holds);
        CHECK(r.lambda1 < 0.9 * 2.0 * re.sup_energy);

        // The Clifford torus is extremal: 2 sup sits at lambda1 = 4 pi^2 up to eps and mollification.
        spec.base_map = clifford_map(t);
        const Family cl(t, spec);
        const MinMaxReport rc = minmax_upper(cl);
        const EigenLowerReport c = eigen_lower_from_family(cl, mu, rc.sup_energy);
        CHECK(c.holds);
        CHECK(rel_err(2.0 * rc.sup_energy, c.lambda1) < 0.02);
        CHECK(2.0 * rc.sup_energy >= (1.0 - 2.0 * spec.eps * std::sqrt(rc.sup_energy)) * c.lambda1);
    }
    SUBCASE("boundary measure of a punctured sphere") {
        const TriMesh s3 = build_sphere_mesh(3);
        const std::vector<int> centers{0, 5};
        const TriMesh omega = puncture(s3, centers, 0.4);
        FamilySpec spec;
        spec.base_map = identity_map(omega);
        spec.eps = 0.1;
        spec.mollify_time = 1e-3;
        spec.grid.points_per_axis = 7;
        const Family fam(omega, spec);
        const MinMaxReport rep = minmax_upper(fam);
        const MeshMeasure mu = boundary_measure(omega).normalized();
        const EigenLowerReport r = eigen_lower_from_family(fam, mu, rep.sup_energy);
        CHECK(r.holds);
        CHECK(r.lambda1 < 2.0 * rep.sup_energy);
    }
}

TEST_CASE("eps schedule and sandwich") {
    const TriMesh unit = build_sphere_mesh(2).scaled(1.0 / std::sqrt(4.0 * pi));
    FamilySpec spec = sphere_spec(unit, 0.2);
    spec.mollify_time = 1e-4;
    spec.grid.points_per_axis = 5;
    const std::vector<ScheduleEntry> sched = eps_schedule(unit, spec, {0.2, 0.1, 0.05});
    REQUIRE(sched.size() == 3);
    for (std::size_t i = 1; i < sched.size(); ++i)
        CHECK(sched[i].critical.energy >= sched[i - 1].critical.energy - 1e-6);
    const double lambda1 = laplace_eigs(unit, 1).values[1];
    for (const auto& e : sched) {
        CHECK(2.0 * e.sup_energy >= (1.0 - 2.0 * e.eps * std::sqrt(e.sup_energy)) * lambda1);
        CHECK(e.critical.energy <= e.sup_energy + 1e-9);
    }
}
