#include <cmath>
#include <numbers>

#include <doctest.h>

#include "specx/error.hpp"
#include "specx/mesh.hpp"
#include "support.hpp"

using namespace specx;
using testing_support::rel_err;
using testing_support::scratch_dir;
using testing_support::write_file;

namespace {

constexpr double pi = std::numbers::pi;

const char* kTetra = R"(OFF
# regular tetrahedron
4 4 6
1 1 1
1 -1 -1
-1 1 -1
-1 -1 1
3 0 1 2
3 0 3 1
3 0 2 3
3 1 3 2
)";

double weight(const SymmetricForm& k, int i, int j) { return -k.coeff(i, j); }

}  // namespace

TEST_CASE("tetrahedron OFF loads as a closed genus-0 mesh") {
    const auto dir = scratch_dir("tetra");
    const TriMesh m = load_mesh(write_file(dir / "t.off", kTetra));
    CHECK(m.num_vertices() == 4);
    CHECK(m.num_triangles() == 4);
    CHECK(m.num_edges() == 6);
    CHECK(m.genus_hint() == 0);
    CHECK_FALSE(m.has_boundary());
    CHECK(m.euler_characteristic() == 2);
}

TEST_CASE("single triangle has one boundary loop of length 3") {
    const auto dir = scratch_dir("tri");
    const TriMesh m = load_mesh(write_file(dir / "t.off", "OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n"));
    REQUIRE(m.boundary_loops().size() == 1);
    CHECK(m.boundary_loops()[0].size() == 3);
    CHECK(m.genus_hint() == 0);
}

TEST_CASE("OFF parse and topology errors") {
    const auto dir = scratch_dir("bad");
    // Edge 0-1 shared by three faces.
    const auto nonmanifold = write_file(dir / "nm.off",
                                        "OFF\n5 3 0\n0 0 0\n1 0 0\n0 1 0\n0 -1 0\n0 0 1\n"
                                        "3 0 1 2\n3 1 0 3\n3 0 1 4\n");
    CHECK_THROWS_AS(load_mesh(nonmanifold), TopologyError);
    const auto flipped = write_file(dir / "flip.off",
                                    "OFF\n4 2 0\n0 0 0\n1 0 0\n0 1 0\n1 1 0\n3 0 1 2\n3 1 2 3\n");
    CHECK_THROWS_AS(load_mesh(flipped), TopologyError);
    CHECK_THROWS_AS(load_mesh(write_file(dir / "hdr.off", "PLY\n")), ParseError);
    CHECK_THROWS_AS(load_mesh(write_file(dir / "short.off", "OFF\n3 1 0\n0 0 0\n1 0 0\n")), ParseError);
    CHECK_THROWS_AS(load_mesh(write_file(dir / "range.off", "OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 7\n")),
                    Error);
    CHECK_THROWS_AS(load_mesh(dir / "missing.off"), ParseError);
}

TEST_CASE("parse errors carry the line number") {
    const auto dir = scratch_dir("lineno");
    const auto p = write_file(dir / "x.off", "OFF\n3 1 0\n0 0 0\n1 zero 0\n0 1 0\n3 0 1 2\n");
    try {
        load_mesh(p);
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find(":4:") != std::string::npos);
    }
}

TEST_CASE("icosphere counts and area") {
    CHECK(build_sphere_mesh(0).num_vertices() == 12);
    CHECK(build_sphere_mesh(0).num_triangles() == 20);
    CHECK(build_sphere_mesh(2).num_vertices() == 162);
    for (int s = 0; s <= 4; ++s) {
        const TriMesh m = build_sphere_mesh(s);
        CHECK(m.num_vertices() == 10 * (1 << (2 * s)) + 2);
        CHECK(m.euler_characteristic() == 2);
    }
    CHECK(rel_err(area(build_sphere_mesh(4)), 4 * pi) < 0.01);
    // Inscribed polyhedra increase in area toward 4 pi.
    double prev = 0.0;
    for (int s = 0; s <= 4; ++s) {
        const double a = area(build_sphere_mesh(s));
        CHECK(a > prev);
        CHECK(a < 4 * pi);
        prev = a;
    }
}

TEST_CASE("flat torus counts, area and modulus errors") {
    const TriMesh sq = build_torus_mesh({0.0, 1.0}, 16);
    CHECK(sq.num_vertices() == 256);
    CHECK(sq.num_triangles() == 512);
    CHECK(sq.genus_hint() == 1);
    CHECK(sq.euler_characteristic() == 0);
    CHECK(area(sq) == doctest::Approx(1.0).epsilon(1e-12));
    const std::complex<double> hex = std::polar(1.0, pi / 3);
    for (int n : {3, 7, 20}) CHECK(area(build_torus_mesh(hex, n)) == doctest::Approx(std::sin(pi / 3)).epsilon(1e-12));
    CHECK_THROWS_AS(build_torus_mesh({0.0, 1.0}, 2), DomainError);
    CHECK_THROWS_AS(build_torus_mesh({0.3, 0.0}, 8), DomainError);
    CHECK_THROWS_AS(build_torus_mesh({0.3, -1.0}, 8), DomainError);
}

TEST_CASE("cotangent weights of a right isosceles triangle") {
    const TriMesh m = TriMesh::create({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}}, {Triangle{0, 1, 2}});
    const SymmetricForm k = stiffness_matrix(m);
    // Legs meet at vertex 0 (right angle); hypotenuse 1-2 faces the right angle.
    CHECK(weight(k, 0, 1) == doctest::Approx(0.5));
    CHECK(weight(k, 0, 2) == doctest::Approx(0.5));
    CHECK(weight(k, 1, 2) == doctest::Approx(0.0));
}

TEST_CASE("stiffness: kernel, symmetry, scale invariance") {
    for (const TriMesh& m : {build_sphere_mesh(2), build_torus_mesh({0.2, 0.9}, 9)}) {
        const SymmetricForm k = stiffness_matrix(m);
        const Eigen::VectorXd ones = Eigen::VectorXd::Ones(m.num_vertices());
        CHECK((k * ones).cwiseAbs().maxCoeff() < 1e-12);
        CHECK((Eigen::MatrixXd(k) - Eigen::MatrixXd(k).transpose()).cwiseAbs().maxCoeff() == 0.0);
        const SymmetricForm k2 = stiffness_matrix(m.scaled(2.0));
        CHECK((Eigen::MatrixXd(k2) - Eigen::MatrixXd(k)).cwiseAbs().maxCoeff() == 0.0);
        // Positive semidefinite on a random vector.
        const Eigen::VectorXd r = Eigen::VectorXd::Random(m.num_vertices());
        CHECK(r.dot(k * r) >= 0.0);
    }
    const TriMesh flat = TriMesh::create({{0, 0, 0}, {1, 0, 0}, {2, 0, 0}}, {Triangle{0, 1, 2}});
    CHECK_THROWS_AS(stiffness_matrix(flat), GeometryError);
}

TEST_CASE("mass matrix traces") {
    const TriMesh t = build_torus_mesh({0.0, 1.0}, 12);
    CHECK(mass_matrix(t, ConformalDensity::constant(t)).sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(area(t, ConformalDensity::constant(t, 4.0)) == doctest::Approx(4.0 * area(t)).epsilon(1e-12));
    const TriMesh s = build_sphere_mesh(3);
    const ConformalDensity f(s, Eigen::VectorXd::Random(s.num_vertices()).cwiseAbs() +
                                    Eigen::VectorXd::Constant(s.num_vertices(), 0.1));
    CHECK(mass_matrix(s, f).sum() == area(s, f));

    // Density supported at one vertex star: mass is f_v times a third of the star area.
    Eigen::VectorXd star = Eigen::VectorXd::Zero(s.num_vertices());
    Eigen::VectorXd pos = Eigen::VectorXd::Constant(s.num_vertices(), 1.0);
    // A density vanishing on all but one vertex would leave all-zero triangles, so compare
    // the difference of two valid densities instead.
    star[5] = 2.0;
    double star_area = 0.0;
    for (int t = 0; t < s.num_triangles(); ++t)
        for (int v : s.triangles()[t])
            if (v == 5) star_area += triangle_area(s, t);
    const double with = area(s, ConformalDensity(s, pos + star));
    CHECK(with - area(s) == doctest::Approx(2.0 * star_area / 3.0).epsilon(1e-10));
}

TEST_CASE("conformal density validation") {
    const TriMesh m = TriMesh::create({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}}, {Triangle{0, 1, 2}});
    CHECK_NOTHROW(ConformalDensity(m, Eigen::Vector3d(0, 0, 1)));
    CHECK_THROWS_AS(ConformalDensity(m, Eigen::Vector3d(0, 0, 0)), DomainError);
    CHECK_THROWS_AS(ConformalDensity(m, Eigen::Vector3d(-1, 1, 1)), DomainError);
    CHECK_THROWS_AS(ConformalDensity(m, Eigen::Vector2d(1, 1)), DomainError);
}

TEST_CASE("curve measure of a polygonal unit circle") {
    for (int rings : {2, 4, 8, 16}) {
        const TriMesh d = build_disk_mesh(rings);
        const int n = 6 * rings;
        REQUIRE(d.boundary_loops().size() == 1);
        const std::vector<int> ids{0};
        const MeshMeasure mu = curve_measure(d, ids);
        CHECK(mu.kind == MeasureKind::curve);
        CHECK(mu.total_mass() == doctest::Approx(n * 2.0 * std::sin(pi / n)).epsilon(1e-12));
        for (int v = 0; v < d.num_vertices(); ++v)
            if (mu.weights[v] > 0.0)
                CHECK(std::find(d.boundary_loops()[0].begin(), d.boundary_loops()[0].end(), v) !=
                      d.boundary_loops()[0].end());
    }
    // O(N^-2) convergence: error ratio close to 4 when N doubles.
    const double e1 = 2 * pi - boundary_length(build_disk_mesh(8));
    const double e2 = 2 * pi - boundary_length(build_disk_mesh(16));
    CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.02));
}

TEST_CASE("curve measure selection rules") {
    const TriMesh a = build_annulus_mesh(0.4, 4, 24);
    REQUIRE(a.boundary_loops().size() == 2);
    const std::vector<int> l0{0}, l1{1}, both{0, 1}, bad{2}, none{};
    CHECK(curve_measure(a, both).total_mass() ==
          doctest::Approx(curve_measure(a, l0).total_mass() + curve_measure(a, l1).total_mass()));
    CHECK(curve_measure(a, both).total_mass() == doctest::Approx(2 * 24 * std::sin(pi / 24) * 1.4));
    CHECK_THROWS_AS(curve_measure(a, bad), DomainError);
    CHECK_THROWS_AS(curve_measure(a, none), DomainError);
    CHECK_THROWS_AS(curve_measure(build_sphere_mesh(1), l0), DomainError);
}

TEST_CASE("disk and annulus builders are consistent meshes") {
    const TriMesh d = build_disk_mesh(6);
    CHECK(d.num_vertices() == 1 + 3 * 6 * 7);
    CHECK(d.euler_characteristic() == 1);
    CHECK(rel_err(area(d), pi) < 0.05);
    const TriMesh a = build_annulus_mesh(0.25, 5, 30);
    CHECK(a.euler_characteristic() == 0);
    CHECK(a.num_components() == 1);
    for (int t = 0; t < a.num_triangles(); ++t) CHECK(triangle_area(a, t) > 0.0);
}

TEST_CASE("puncture topology") {
    const TriMesh s = build_sphere_mesh(3);
    const double h = mean_edge_length(s);
    CHECK(puncture(s, {}, 0.1).num_vertices() == s.num_vertices());

    const std::vector<int> one{0};
    const TriMesh p = puncture(s, one, 2.5 * h);
    CHECK(p.boundary_loops().size() == 1);
    CHECK(p.euler_characteristic() == s.euler_characteristic() - 1);
    for (int v = 0; v < p.num_vertices(); ++v)
        CHECK((p.vertices()[v] - s.vertices()[p.parent_vertex()[v]]).norm() == 0.0);

    // Two antipodal-ish holes, then a pair that overlaps.
    int far = 0;
    for (int v = 0; v < s.num_vertices(); ++v)
        if (s.vertices()[v].dot(s.vertices()[0]) < s.vertices()[far].dot(s.vertices()[0])) far = v;
    const std::vector<int> two{0, far};
    const TriMesh p2 = puncture(s, two, 2.5 * h);
    CHECK(p2.euler_characteristic() == 0);
    CHECK(p2.boundary_loops().size() == 2);

    int near = -1;
    for (const auto& e : mesh_edges(s))
        if (e.i == 0) near = e.j;
    REQUIRE(near >= 0);
    const std::vector<int> overlap{0, near};
    CHECK_THROWS_AS(puncture(s, overlap, 2.5 * h), GeometryError);
    CHECK_THROWS_AS(puncture(s, one, 0.1 * h), GeometryError);
}

TEST_CASE("torus puncture keeps lattice shifts") {
    const TriMesh t = build_torus_mesh({0.0, 1.0}, 24);
    const std::vector<int> c{0, 12 * 24 + 12};
    const TriMesh p = puncture(t, c, 0.12);
    CHECK(p.is_periodic());
    CHECK(p.euler_characteristic() == -2);
    CHECK(p.boundary_loops().size() == 2);
    double a = 0.0;
    for (int i = 0; i < p.num_triangles(); ++i) a += triangle_area(p, i);
    CHECK(a < 1.0);
    CHECK(a > 0.8);
}

TEST_CASE("save and reload round trip") {
    const auto dir = scratch_dir("io");
    const TriMesh s = build_sphere_mesh(1);
    save_mesh(s, dir / "s.off");
    const TriMesh s2 = load_mesh(dir / "s.off");
    CHECK(s2.num_vertices() == s.num_vertices());
    CHECK(area(s2) == doctest::Approx(area(s)).epsilon(1e-14));

    const TriMesh t = build_torus_mesh({0.5, 0.8}, 10);
    save_mesh(t, dir / "t.off");
    CHECK(std::filesystem::exists(torus_sidecar_path(dir / "t.off")));
    const TriMesh t2 = load_mesh(dir / "t.off");
    CHECK(t2.is_periodic());
    CHECK(t2.chart()->tau == t.chart()->tau);
    CHECK(area(t2) == doctest::Approx(0.8).epsilon(1e-12));
    // Overwriting with a plain mesh drops the stale sidecar.
    save_mesh(s, dir / "t.off");
    CHECK_FALSE(std::filesystem::exists(torus_sidecar_path(dir / "t.off")));
}
