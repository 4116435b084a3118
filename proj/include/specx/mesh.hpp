#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace specx {

using Vec3 = Eigen::Vector3d;
using Triangle = std::array<int, 3>;
/// Integer lattice shift (multiples of the two periods) of a triangle corner.
using LatticeShift = std::array<int, 2>;

/// Sparse symmetric matrix; used for the Dirichlet (stiffness) form.
using SymmetricForm = Eigen::SparseMatrix<double>;

/// Periods of a flat torus chart together with its generating parameters.
struct TorusChart {
    std::complex<double> tau;
    int resolution = 0;
    Vec3 period1 = Vec3::UnitX();
    Vec3 period2 = Vec3::UnitY();
};

/// Oriented triangle mesh, optionally with boundary and optionally periodic.
///
/// Instances are immutable and always satisfy the manifold invariants:
/// every edge has at most two incident triangles, interior edges are used
/// once in each direction, and boundary_loops lists every border edge.
/// Periodic meshes (flat tori) store vertex positions in a 2D chart; each
/// triangle corner carries a lattice shift so that corner(t, c) is the
/// unwrapped position.
class TriMesh {
public:
    struct Options {
        std::optional<TorusChart> chart;
        std::vector<std::array<LatticeShift, 3>> corner_shifts;
        std::vector<int> parent_vertex;
    };

    TriMesh() = default;

    /// Validates and builds a mesh. Throws TopologyError / GeometryError.
    static TriMesh create(std::vector<Vec3> vertices, std::vector<Triangle> triangles,
                          Options options);
    static TriMesh create(std::vector<Vec3> vertices, std::vector<Triangle> triangles) {
        return create(std::move(vertices), std::move(triangles), Options{});
    }

    int num_vertices() const { return static_cast<int>(vertices_.size()); }
    int num_triangles() const { return static_cast<int>(triangles_.size()); }
    int num_edges() const { return num_edges_; }
    int euler_characteristic() const { return num_vertices() - num_edges() + num_triangles(); }
    int num_components() const { return num_components_; }

    const std::vector<Vec3>& vertices() const { return vertices_; }
    const std::vector<Triangle>& triangles() const { return triangles_; }
    const std::vector<std::vector<int>>& boundary_loops() const { return boundary_loops_; }
    int genus_hint() const { return genus_hint_; }
    bool has_boundary() const { return !boundary_loops_.empty(); }
    bool is_periodic() const { return chart_.has_value(); }
    const std::optional<TorusChart>& chart() const { return chart_; }
    const std::vector<std::array<LatticeShift, 3>>& corner_shifts() const { return corner_shifts_; }

    /// Index of each vertex in the mesh this one was cut from (identity if none).
    const std::vector<int>& parent_vertex() const { return parent_vertex_; }

    /// Unwrapped position of corner c of triangle t.
    Vec3 corner(int t, int c) const;

    /// Scaled copy (vertex positions and periods multiplied by s).
    TriMesh scaled(double s) const;

private:
    std::vector<Vec3> vertices_;
    std::vector<Triangle> triangles_;
    std::vector<std::vector<int>> boundary_loops_;
    std::vector<std::array<LatticeShift, 3>> corner_shifts_;
    std::vector<int> parent_vertex_;
    std::optional<TorusChart> chart_;
    int genus_hint_ = 0;
    int num_edges_ = 0;
    int num_components_ = 0;
};

/// Per-vertex nonnegative density f defining the metric f * g0.
///
/// Zeros are allowed as long as no triangle has all three corners at zero.
class ConformalDensity {
public:
    ConformalDensity() = default;
    ConformalDensity(const TriMesh& mesh, Eigen::VectorXd values);

    static ConformalDensity constant(const TriMesh& mesh, double c = 1.0);

    const Eigen::VectorXd& values() const { return values_; }
    double operator[](int i) const { return values_[i]; }
    int size() const { return static_cast<int>(values_.size()); }

private:
    Eigen::VectorXd values_;
};

enum class MeasureKind { volume, curve };

/// Vertex-lumped Radon measure on a mesh.
struct MeshMeasure {
    MeasureKind kind = MeasureKind::volume;
    Eigen::VectorXd weights;

    double total_mass() const { return weights.sum(); }
    MeshMeasure scaled(double c) const { return {kind, c * weights}; }
    MeshMeasure normalized() const { return scaled(1.0 / total_mass()); }
};

// ---------------------------------------------------------------------------
// Builders

/// Icosahedron subdivided `subdivisions` times, projected to the unit sphere.
TriMesh build_sphere_mesh(int subdivisions);

/// Flat torus C / (Z + tau Z) on a resolution x resolution grid.
TriMesh build_torus_mesh(std::complex<double> tau, int resolution);

/// Unit disk with `rings` concentric rings (ring i carries 6i vertices).
TriMesh build_disk_mesh(int rings);

/// Annulus inner_radius <= r <= 1 with geometrically spaced rings.
TriMesh build_annulus_mesh(double inner_radius, int rings, int segments);

// ---------------------------------------------------------------------------
// Discrete operators

double triangle_area(const TriMesh& mesh, int t);

/// Cotangent stiffness matrix; never reads densities.
SymmetricForm stiffness_matrix(const TriMesh& mesh);

/// One third of the summed incident triangle areas per vertex.
Eigen::VectorXd vertex_areas(const TriMesh& mesh);

/// Diagonal of the lumped mass matrix of f * g0.
Eigen::VectorXd mass_matrix(const TriMesh& mesh, const ConformalDensity& f);

/// Area of (M, f g0); equal to the trace of mass_matrix bit for bit.
double area(const TriMesh& mesh, const ConformalDensity& f);
double area(const TriMesh& mesh);

/// Volume measure of the density f.
MeshMeasure volume_measure(const TriMesh& mesh, const ConformalDensity& f);

/// Length measure of the selected boundary loops.
MeshMeasure curve_measure(const TriMesh& mesh, std::span<const int> loop_ids);
/// Length measure of every boundary loop.
MeshMeasure boundary_measure(const TriMesh& mesh);

double boundary_length(const TriMesh& mesh);

/// Undirected edges (i < j) with their lengths.
struct Edge {
    int i = 0;
    int j = 0;
    double length = 0.0;
};
std::vector<Edge> mesh_edges(const TriMesh& mesh);

/// Mean edge length, the mesh resolution h.
double mean_edge_length(const TriMesh& mesh);

/// Shortest-path distances along mesh edges from `source`.
std::vector<double> edge_distances(const TriMesh& mesh, int source);

/// Removes a metric disk around each center and returns the subdomain.
TriMesh puncture(const TriMesh& mesh, std::span<const int> centers, double radius);

/// Greedy farthest-point sequence of `count` vertices starting at vertex 0, in the flat
/// metric on periodic meshes and chord length otherwise. Prefixes are nested, so a hole
/// sweep adds one hole at a time.
std::vector<int> spread_centers(const TriMesh& mesh, int count);

// ---------------------------------------------------------------------------
// File I/O

TriMesh load_mesh(const std::filesystem::path& path);
void save_mesh(const TriMesh& mesh, const std::filesystem::path& path);

/// Sidecar path holding torus parameters for an OFF file.
std::filesystem::path torus_sidecar_path(const std::filesystem::path& off_path);

}  // namespace specx
