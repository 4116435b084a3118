#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Geometry>
#include <doctest.h>

#include "specx/error.hpp"
#include "specx/mobius.hpp"
#include "support.hpp"

using namespace specx;
using testing_support::rel_err;

namespace {

constexpr double pi = std::numbers::pi;

Eigen::VectorXd random_unit(int dim, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    Eigen::VectorXd v(dim);
    for (int i = 0; i < dim; ++i) v[i] = g(rng);
    return v.normalized();
}

Eigen::VectorXd random_ball(int dim, std::mt19937_64& rng, double max_radius = 1.0) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    return max_radius * std::pow(u(rng), 1.0 / dim) * random_unit(dim, rng);
}

}  // namespace

TEST_CASE("Mobius maps") {
    std::mt19937_64 rng(1);
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(3);
    for (int trial = 0; trial < 200; ++trial) {
        const int dim = 3 + trial % 3;
        const Eigen::VectorXd x = random_unit(dim, rng);
        const Eigen::VectorXd a = random_ball(dim, rng, 0.999);
        CHECK(std::abs(mobius_apply(a, x).norm() - 1.0) < 1e-12);
        CHECK((mobius_apply(Eigen::VectorXd::Zero(dim), x) - x).norm() < 1e-15);
        const Eigen::VectorXd ah = a.normalized();
        CHECK((mobius_apply(a, ah) - ah).norm() < 1e-12);
        CHECK((mobius_apply(a, -ah) + ah).norm() < 1e-12);
    }
    Eigen::VectorXd a(3);
    a << 0.0, 0.0, 1.0;
    CHECK(mobius_apply(a, Eigen::VectorXd::Unit(3, 0)) == a);
    // Near |a| = 1 the antipodal point stays fixed without cancellation.
    a << 0.0, 0.0, 1.0 - 1e-13;
    const Eigen::VectorXd south = -Eigen::VectorXd::Unit(3, 2);
    CHECK((mobius_apply(a, south) - south).norm() < 1e-12);
    CHECK_THROWS_AS(mobius_apply(Eigen::VectorXd::Ones(3), south), DomainError);
    CHECK_THROWS_AS(mobius_apply(Eigen::VectorXd::Zero(4), south), DomainError);
}

TEST_CASE("cap reflections") {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 300; ++trial) {
        const int dim = 3 + trial % 2;
        const Eigen::VectorXd b = random_ball(dim, rng);
        const Eigen::VectorXd x = random_unit(dim, rng);
        const double c = b.norm() - b.squaredNorm();
        const Eigen::VectorXd y = cap_reflection(b, x);
        CHECK(std::abs(y.norm() - 1.0) < 1e-12);
        if (x.dot(b) <= c) {
            CHECK(y == x);
        } else {
            // Conjugate of an inversion: an involution that lands in the cap.
            CHECK((cap_inversion(b, y) - x).norm() < 1e-10);
            CHECK(y.dot(b) <= c + 1e-12);
        }
        // Points of the boundary circle are fixed by the inversion.
        const Eigen::VectorXd bh = b.normalized();
        Eigen::VectorXd w = x - x.dot(bh) * bh;
        if (w.norm() < 1e-6) continue;
        const double h = 1.0 - b.norm();
        const Eigen::VectorXd edge = h * bh + std::sqrt(1.0 - h * h) * w.normalized();
        CHECK((cap_inversion(b, edge) - edge).norm() < 1e-12);
        CHECK((cap_reflection(b, edge) - edge).norm() < 1e-12);
    }
    const Eigen::VectorXd x = random_unit(3, rng);
    CHECK(cap_reflection(Eigen::VectorXd::Zero(3), x) == x);

    // |b| = 1: identity on the closed hemisphere <x, b> <= 0, linear reflection elsewhere.
    const Eigen::VectorXd b = random_unit(3, rng);
    for (int trial = 0; trial < 100; ++trial) {
        const Eigen::VectorXd p = random_unit(3, rng);
        const Eigen::VectorXd want = p.dot(b) <= 0.0 ? p : linear_reflection(b, p);
        CHECK((cap_reflection(b, p) - want).norm() < 1e-15);
    }
}

TEST_CASE("cap reflection is continuous across the boundary") {
    Eigen::VectorXd b(3);
    b << 0.1, 0.2, 0.5;
    const Eigen::VectorXd bh = b.normalized();
    const double c = b.norm() - b.squaredNorm();
    const Eigen::VectorXd w = bh.unitOrthogonal();
    for (double d : {1e-4, 1e-6, 1e-8}) {
        const double h = c + d;
        const Eigen::VectorXd x = h * bh + std::sqrt(1.0 - h * h) * w;
        CHECK((cap_reflection(b, x) - x).norm() < 10.0 * d);
    }
}

TEST_CASE("upsilon") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 200; ++trial) {
        const Eigen::VectorXd a = random_ball(3, rng, 0.99);
        const Eigen::VectorXd x = random_unit(3, rng);
        CHECK(upsilon(a, Eigen::VectorXd::Zero(3), x) == mobius_apply(a, x));
        CHECK(upsilon(Eigen::VectorXd::Zero(3), Eigen::VectorXd::Zero(3), x) == x);
        // |b| = 1: G_{tau_b(a)} o T_{-b} = tau_b o G_a o T_b.
        const Eigen::VectorXd b = random_unit(3, rng);
        const Eigen::VectorXd lhs = upsilon(linear_reflection(b, a), -b, x);
        const Eigen::VectorXd rhs = linear_reflection(b, upsilon(a, b, x));
        CHECK((lhs - rhs).norm() < 1e-12);
    }
}

TEST_CASE("ball search") {
    Eigen::VectorXd c(3);
    c << 0.21, -0.33, 0.17;
    BallSearchOptions opt;
    const BallSearchResult r =
        ball_sup(3, 1, [&](const Eigen::VectorXd& p) { return -(p - c).squaredNorm(); }, opt);
    CHECK((r.argmax - c).norm() < 0.25 / 8.0);
    CHECK(r.rounds.size() == 4);
    for (std::size_t i = 1; i < r.rounds.size(); ++i) CHECK(r.rounds[i] >= r.rounds[i - 1]);

    BallSearchOptions small;
    small.points_per_axis = 5;
    const BallSearchResult two = ball_sup(
        2, 2, [&](const Eigen::VectorXd& p) { return -p.head(2).squaredNorm() - (p.tail(2) - c.head(2)).squaredNorm(); },
        small);
    CHECK(two.argmax.size() == 4);
    CHECK(two.argmax.head(2).norm() <= 1.0 + 1e-12);
    CHECK((two.argmax.tail(2) - c.head(2)).norm() < 0.1);

    BallSearchOptions empty;
    empty.points_per_axis = 2;
    CHECK_THROWS_AS(ball_sup(3, 1, [](const Eigen::VectorXd&) { return 0.0; }, empty), DomainError);
    BallSearchOptions bad;
    bad.max_radius = 1.5;
    CHECK_THROWS_AS(ball_sup(3, 1, [](const Eigen::VectorXd&) { return 0.0; }, bad), DomainError);
}

TEST_CASE("conformal volume") {
    const TriMesh s4 = build_sphere_mesh(4);
    const ConformalVolumeReport id = conformal_volume(s4, identity_map(s4));
    CHECK(rel_err(id.estimate, 4.0 * pi) < 0.01);
    CHECK(id.hopf_defect < 1e-12);
    for (double r : {0.2, 0.4, 0.6}) {
        Eigen::VectorXd a = r * Eigen::VectorXd::Unit(3, 1);
        CHECK(rel_err(energy(s4, mobius_apply(a, identity_map(s4))), 4.0 * pi) < 0.01);
    }
    const ConformalVolumeReport two = conformal_volume(s4, power_map(s4, 2));
    CHECK(rel_err(two.estimate, 8.0 * pi) < 0.02);

    const TriMesh s3 = build_sphere_mesh(3);
    const TriMesh big = s3.scaled(3.0);
    const double v1 = conformal_volume(s3, identity_map(s3)).estimate;
    const double v3 = conformal_volume(big, identity_map(big)).estimate;
    CHECK(rel_err(v3, v1) < 1e-12);
}
