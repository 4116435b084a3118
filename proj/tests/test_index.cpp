#include <cmath>

#include <doctest.h>

#include "specx/error.hpp"
#include "specx/index.hpp"
#include "support.hpp"

using namespace specx;
using testing_support::rel_err;

TEST_CASE("spectral index of the identity") {
    const TriMesh s3 = build_sphere_mesh(3);
    const SphereMap id = identity_map(s3);
    const SpectralIndex si = spectral_index(s3, id);
    CHECK(si.ind_S == 1);
    CHECK(si.nul_S == 3);
    CHECK(si.stable);
    CHECK(si.margins[0] > 0.5);
    CHECK(si.margins[1] > 0.5);

    const TriMesh big = s3.scaled(2.5);
    const SpectralIndex scaled = spectral_index(big, identity_map(big));
    CHECK(scaled.ind_S == 1);
    CHECK(scaled.nul_S == 3);

    const SpectralIndex eq = spectral_index(s3, id.included(5));
    CHECK(eq.ind_S == 1);
    CHECK(eq.nul_S == 3);

    const SphereMap c = SphereMap::constant(s3.num_vertices(), Eigen::VectorXd::Unit(3, 0));
    CHECK_THROWS_AS(spectral_index(s3, c), DomainError);
    CHECK_THROWS_AS(energy_index(s3, c), DomainError);
}

TEST_CASE("normalized eigenvalue at the spectral index equals twice the energy") {
    for (int s : {3, 4}) {
        const TriMesh m = build_sphere_mesh(s);
        const SphereMap id = identity_map(m);
        const SpectralIndex si = spectral_index(m, id);
        const double e = energy(m, id);
        // Eigenvalue of g_Phi = 1/2 |dPhi|^2 g is twice the pencil value; its area is E.
        const double lambda_bar = 2.0 * si.values[si.ind_S] * e;
        CHECK(rel_err(lambda_bar, 2.0 * e) < 0.02);
    }
}

TEST_CASE("tangent frames") {
    const TriMesh s2 = build_sphere_mesh(2);
    const SphereMap phi = identity_map(s2).included(4);
    for (std::uint64_t seed : {0ull, 3ull}) {
        const auto frames = tangent_frames(phi, seed);
        for (int i = 0; i < phi.size(); ++i) {
            const Eigen::MatrixXd& f = frames[i];
            REQUIRE(f.rows() == 4);
            REQUIRE(f.cols() == 3);
            CHECK((f.transpose() * f - Eigen::MatrixXd::Identity(3, 3)).norm() < 1e-12);
            CHECK((f.transpose() * phi.values().row(i).transpose()).norm() < 1e-12);
        }
    }
}

TEST_CASE("energy index is frame independent") {
    const TriMesh s3 = build_sphere_mesh(3);
    for (const SphereMap& phi : {identity_map(s3), identity_map(s3).included(4), power_map(s3, 2)}) {
        IndexOptions a;
        IndexOptions b;
        b.frame_seed = 7;
        const EnergyIndex ea = energy_index(s3, phi, a);
        const EnergyIndex eb = energy_index(s3, phi, b);
        CHECK(ea.ind_E == eb.ind_E);
        CHECK(ea.dimension == s3.num_vertices() * (phi.ambient_dim() - 1));
        CHECK(ea.threshold == doctest::Approx(1e-6 * ea.norm));
    }
}

TEST_CASE("composition law") {
    const TriMesh s3 = build_sphere_mesh(3);
    const CompositionLaw id3 = check_composition_law(s3, identity_map(s3), 3);
    CHECK(id3.equal);
    CHECK(id3.ind_S == 1);
    const CompositionLaw z4 = check_composition_law(s3, power_map(s3, 2), 4);
    CHECK(z4.equal);
    CHECK(z4.lhs == z4.ind_E + 2 * z4.ind_S);
    CHECK_THROWS_AS(check_composition_law(s3, identity_map(s3), 1), DomainError);
}

TEST_CASE("conformal modes of the identity shrink like h^2") {
    // The discrete identity carries three slightly negative Q_E modes (the conformal
    // directions); they drop below the 1e-6 margin only at subdivision 5.
    double prev = 0.0;
    for (int s : {2, 3, 4}) {
        const TriMesh m = build_sphere_mesh(s);
        const EnergyIndex ei = energy_index(m, identity_map(m));
        CHECK(ei.ind_E == 3);
        const double lowest = -ei.values[0];
        CHECK(lowest > 0.0);
        if (s > 2) {
            CHECK(lowest < 0.3 * prev);
        }
        prev = lowest;
    }
}

TEST_CASE("identity at subdivision 5") {
    const TriMesh s5 = build_sphere_mesh(5);
    const SphereMap id = identity_map(s5);
    const EnergyIndex ei = energy_index(s5, id);
    CHECK(ei.ind_E == 0);
    const CompositionLaw law = check_composition_law(s5, id, 2);
    CHECK(law.equal);
    CHECK(law.lhs == 0);
    const IndexReport rep = index_report(s5, id);
    CHECK(rep.spectral.ind_S == 1);
    CHECK(rep.spectral.nul_S == 3);
    CHECK(rep.energy.ind_E == 0);
    CHECK(rep.warnings.empty());
}
