#include <sstream>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "cli.hpp"
#include "specx/error.hpp"
#include "specx/glminmax.hpp"
#include "specx/index.hpp"
#include "specx/spectra.hpp"
#include "specx/version.hpp"

namespace py = pybind11;
using namespace specx;

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using IndexMatrix = Eigen::Matrix<int, Eigen::Dynamic, 3, Eigen::RowMajor>;

TriMesh mesh_from_arrays(const RowMatrix& v, const IndexMatrix& f) {
    if (v.cols() != 3) throw DomainError("vertices must have shape (n, 3)");
    std::vector<Vec3> verts(v.rows());
    for (Eigen::Index i = 0; i < v.rows(); ++i) verts[i] = v.row(i).transpose();
    std::vector<Triangle> tris(f.rows());
    for (Eigen::Index t = 0; t < f.rows(); ++t) tris[t] = {f(t, 0), f(t, 1), f(t, 2)};
    return TriMesh::create(std::move(verts), std::move(tris));
}

RowMatrix vertex_array(const TriMesh& m) {
    RowMatrix v(m.num_vertices(), 3);
    for (int i = 0; i < m.num_vertices(); ++i) v.row(i) = m.vertices()[i].transpose();
    return v;
}

IndexMatrix triangle_array(const TriMesh& m) {
    IndexMatrix f(m.num_triangles(), 3);
    for (int t = 0; t < m.num_triangles(); ++t)
        for (int c = 0; c < 3; ++c) f(t, c) = m.triangles()[t][c];
    return f;
}

py::tuple run_cli(const std::vector<std::string>& args) {
    std::vector<std::string> full{"specx"};
    full.insert(full.end(), args.begin(), args.end());
    std::ostringstream out, err;
    const int code = cli::run(full, out, err);
    return py::make_tuple(code, out.str(), err.str());
}

}  // namespace

PYBIND11_MODULE(_specx, mod) {
    mod.attr("__version__") = specx::version;

    auto base = py::register_exception<Error>(mod, "SpecxError", PyExc_RuntimeError);
    py::register_exception<ParseError>(mod, "ParseError", base.ptr());
    py::register_exception<TopologyError>(mod, "TopologyError", base.ptr());
    py::register_exception<GeometryError>(mod, "GeometryError", base.ptr());
    py::register_exception<DomainError>(mod, "DomainError", base.ptr());
    py::register_exception<SolverError>(mod, "SolverError", base.ptr());

    py::class_<TriMesh>(mod, "TriMesh")
        .def(py::init(&mesh_from_arrays), py::arg("vertices"), py::arg("triangles"))
        .def_property_readonly("num_vertices", &TriMesh::num_vertices)
        .def_property_readonly("num_triangles", &TriMesh::num_triangles)
        .def_property_readonly("num_edges", &TriMesh::num_edges)
        .def_property_readonly("euler_characteristic", &TriMesh::euler_characteristic)
        .def_property_readonly("is_periodic", &TriMesh::is_periodic)
        .def_property_readonly("has_boundary", &TriMesh::has_boundary)
        .def_property_readonly("boundary_loops", &TriMesh::boundary_loops)
        .def_property_readonly("vertices", &vertex_array)
        .def_property_readonly("triangles", &triangle_array)
        .def("scaled", &TriMesh::scaled)
        .def("__repr__", [](const TriMesh& m) {
            return "<TriMesh V=" + std::to_string(m.num_vertices()) + " F=" + std::to_string(m.num_triangles()) + ">";
        });

    mod.def("sphere_mesh", &build_sphere_mesh, py::arg("subdivisions"));
    mod.def("torus_mesh", &build_torus_mesh, py::arg("tau"), py::arg("resolution"));
    mod.def("disk_mesh", &build_disk_mesh, py::arg("rings"));
    mod.def("annulus_mesh", &build_annulus_mesh, py::arg("inner_radius"), py::arg("rings"), py::arg("segments"));
    mod.def("load_mesh", &load_mesh);
    mod.def("save_mesh", &save_mesh);
    mod.def("area", py::overload_cast<const TriMesh&>(&area));
    mod.def("vertex_areas", &vertex_areas);
    mod.def("boundary_length", &boundary_length);
    mod.def("mean_edge_length", &mean_edge_length);
    mod.def("spread_centers", &spread_centers, py::arg("mesh"), py::arg("count"));
    mod.def(
        "puncture",
        [](const TriMesh& m, const std::vector<int>& centers, double radius) { return puncture(m, centers, radius); },
        py::arg("mesh"), py::arg("centers"), py::arg("radius"));

    py::class_<ConformalDensity>(mod, "ConformalDensity")
        .def(py::init<const TriMesh&, Eigen::VectorXd>(), py::arg("mesh"), py::arg("values"))
        .def_property_readonly("values", &ConformalDensity::values);

    py::class_<Spectrum>(mod, "Spectrum")
        .def_readonly("values", &Spectrum::values)
        .def_readonly("vectors", &Spectrum::vectors)
        .def_readonly("residuals", &Spectrum::residuals)
        .def_readonly("mass", &Spectrum::mass)
        .def_readonly("warnings", &Spectrum::warnings)
        .def("normalized", &Spectrum::normalized)
        .def("multiplicity", [](const Spectrum& s, int index) { return cluster_size(s, index); });

    mod.def(
        "laplace_eigs",
        [](const TriMesh& m, int k, std::optional<Eigen::VectorXd> density) {
            if (density) return laplace_eigs(m, ConformalDensity(m, *density), k);
            return laplace_eigs(m, k);
        },
        py::arg("mesh"), py::arg("k") = 5, py::arg("density") = py::none());
    mod.def(
        "steklov_eigs", [](const TriMesh& m, int k) { return steklov_eigs(m, k); }, py::arg("mesh"), py::arg("k") = 5);
    mod.def("normalized_steklov", &normalized_steklov);

    py::class_<MaximizerReport>(mod, "MaximizerReport")
        .def_property_readonly("density", [](const MaximizerReport& r) { return r.density.values(); })
        .def_readonly("lambda_bar", &MaximizerReport::lambda_bar)
        .def_readonly("iterations", &MaximizerReport::iterations)
        .def_readonly("stationarity_gap", &MaximizerReport::stationarity_gap)
        .def_readonly("multiplicity", &MaximizerReport::multiplicity)
        .def_readonly("converged", &MaximizerReport::converged)
        .def_readonly("history", &MaximizerReport::history);
    mod.def(
        "maximize_lambda1",
        [](const TriMesh& m, std::optional<Eigen::VectorXd> initial, int iterations) {
            MaximizerOptions opt;
            opt.iterations = iterations;
            if (initial) opt.initial = ConformalDensity(m, *initial);
            return maximize_lambda1_conformal(m, opt);
        },
        py::arg("mesh"), py::arg("initial") = py::none(), py::arg("iterations") = 200);

    py::class_<SphereMap>(mod, "SphereMap")
        .def(py::init([](const Eigen::MatrixXd& v) { return SphereMap::normalize(v); }), py::arg("values"))
        .def_property_readonly("values", &SphereMap::values)
        .def_property_readonly("ambient_dim", &SphereMap::ambient_dim)
        .def("included", &SphereMap::included);
    mod.def("identity_map", &identity_map);
    mod.def("power_map", &power_map, py::arg("sphere"), py::arg("degree"));
    mod.def("clifford_map", &clifford_map);
    mod.def("elliptic_map", &elliptic_map);
    mod.def("energy", &energy);
    mod.def("tension", [](const TriMesh& m, const SphereMap& phi) { return tension_residual(m, phi).aggregate; });
    mod.def(
        "conformal_volume",
        [](const TriMesh& m, const SphereMap& phi) { return conformal_volume(m, phi).estimate; });
    mod.def("mobius_apply", py::overload_cast<const Eigen::VectorXd&, const Eigen::VectorXd&>(&mobius_apply),
            py::arg("a"), py::arg("x"));

    mod.def("gl_energy", &gl_energy, py::arg("mesh"), py::arg("u"), py::arg("eps"));
    mod.def("gl_gradient", &gl_gradient, py::arg("mesh"), py::arg("u"), py::arg("eps"));
    mod.def("gl_hessian_apply", &gl_hessian_apply, py::arg("mesh"), py::arg("u"), py::arg("eps"), py::arg("v"));

    py::class_<MinMaxReport>(mod, "MinMaxReport")
        .def_readonly("eps", &MinMaxReport::eps)
        .def_readonly("sup_energy", &MinMaxReport::sup_energy)
        .def_readonly("argmax", &MinMaxReport::argmax)
        .def_readonly("evaluations", &MinMaxReport::evaluations)
        .def_readonly("rounds", &MinMaxReport::rounds)
        .def_readonly("eigenvalue_bound", &MinMaxReport::eigenvalue_bound);
    mod.def(
        "minmax_upper",
        [](const TriMesh& m, const SphereMap& phi, double eps, bool second, int grid, double mollify_time) {
            FamilySpec spec;
            spec.base_map = phi;
            spec.eps = eps;
            spec.kind = second ? FamilyKind::second : FamilyKind::first;
            spec.grid.points_per_axis = grid;
            spec.mollify_time = mollify_time;
            return minmax_upper(Family(m, spec));
        },
        py::arg("mesh"), py::arg("map"), py::arg("eps") = 0.1, py::arg("second") = false, py::arg("grid") = 9,
        py::arg("mollify_time") = 1e-3);

    py::class_<SpectralIndex>(mod, "SpectralIndex")
        .def_readonly("ind_S", &SpectralIndex::ind_S)
        .def_readonly("nul_S", &SpectralIndex::nul_S)
        .def_readonly("stable", &SpectralIndex::stable)
        .def_readonly("values", &SpectralIndex::values);
    py::class_<EnergyIndex>(mod, "EnergyIndex")
        .def_readonly("ind_E", &EnergyIndex::ind_E)
        .def_readonly("threshold", &EnergyIndex::threshold)
        .def_readonly("values", &EnergyIndex::values);
    py::class_<CompositionLaw>(mod, "CompositionLaw")
        .def_readonly("lhs", &CompositionLaw::lhs)
        .def_readonly("rhs", &CompositionLaw::rhs)
        .def_readonly("equal", &CompositionLaw::equal);
    mod.def("spectral_index", [](const TriMesh& m, const SphereMap& phi) { return spectral_index(m, phi); });
    mod.def("energy_index", [](const TriMesh& m, const SphereMap& phi) { return energy_index(m, phi); });
    mod.def(
        "composition_law", [](const TriMesh& m, const SphereMap& phi, int k) { return check_composition_law(m, phi, k); },
        py::arg("mesh"), py::arg("map"), py::arg("m"));

    mod.def("run_cli", &run_cli, py::arg("args"), "Run the specx command line; returns (exit_code, stdout, stderr).");
}
