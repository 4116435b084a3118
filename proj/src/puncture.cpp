#include <algorithm>
#include <limits>
#include <string>

#include "specx/error.hpp"
#include "specx/mesh.hpp"

namespace specx {

TriMesh puncture(const TriMesh& mesh, std::span<const int> centers, double radius) {
    if (centers.empty()) return mesh;
    if (!(radius > 0.0)) throw DomainError("puncture radius must be positive");
    const int nv = mesh.num_vertices();
    const int nt = mesh.num_triangles();

    // Shortest edge at each vertex: a disk smaller than that is not resolved by triangles.
    std::vector<double> shortest(nv, std::numeric_limits<double>::infinity());
    for (const auto& e : mesh_edges(mesh)) {
        shortest[e.i] = std::min(shortest[e.i], e.length);
        shortest[e.j] = std::min(shortest[e.j], e.length);
    }

    std::vector<int> owner_vertex(nv, -1);  // hole id touching each vertex
    std::vector<char> removed(nt, 0);
    for (std::size_t h = 0; h < centers.size(); ++h) {
        const int c = centers[h];
        if (c < 0 || c >= nv) throw DomainError("puncture center out of range");
        if (radius <= shortest[c])
            throw GeometryError("puncture radius is below the mesh resolution at vertex " +
                                std::to_string(c));
        const auto dist = edge_distances(mesh, c);
        std::vector<int> touched;
        for (int t = 0; t < nt; ++t) {
            const auto& tri = mesh.triangles()[t];
            if (dist[tri[0]] < radius || dist[tri[1]] < radius || dist[tri[2]] < radius) {
                if (removed[t]) throw GeometryError("puncture disks overlap");
                removed[t] = 1;
                touched.insert(touched.end(), tri.begin(), tri.end());
            }
        }
        for (int v : touched) {
            if (owner_vertex[v] != -1 && owner_vertex[v] != static_cast<int>(h))
                throw GeometryError("puncture disks overlap");
            owner_vertex[v] = static_cast<int>(h);
        }
    }

    std::vector<char> keep_vertex(nv, 0);
    for (int t = 0; t < nt; ++t)
        if (!removed[t])
            for (int v : mesh.triangles()[t]) keep_vertex[v] = 1;

    std::vector<int> new_index(nv, -1);
    std::vector<Vec3> vertices;
    std::vector<int> parent;
    for (int v = 0; v < nv; ++v) {
        if (!keep_vertex[v]) continue;
        new_index[v] = static_cast<int>(vertices.size());
        vertices.push_back(mesh.vertices()[v]);
        parent.push_back(mesh.parent_vertex()[v]);
    }
    std::vector<Triangle> triangles;
    std::vector<std::array<LatticeShift, 3>> shifts;
    for (int t = 0; t < nt; ++t) {
        if (removed[t]) continue;
        const auto& tri = mesh.triangles()[t];
        triangles.push_back({new_index[tri[0]], new_index[tri[1]], new_index[tri[2]]});
        if (mesh.is_periodic()) shifts.push_back(mesh.corner_shifts()[t]);
    }

    TriMesh::Options opts;
    opts.chart = mesh.chart();
    opts.corner_shifts = std::move(shifts);
    opts.parent_vertex = std::move(parent);
    TriMesh out;
    try {
        out = TriMesh::create(std::move(vertices), std::move(triangles), std::move(opts));
    } catch (const TopologyError& e) {
        throw GeometryError(std::string("puncture produced a non-manifold subdomain: ") + e.what());
    }
    const int holes = static_cast<int>(centers.size());
    if (out.euler_characteristic() != mesh.euler_characteristic() - holes ||
        out.boundary_loops().size() != mesh.boundary_loops().size() + centers.size() ||
        out.num_components() != mesh.num_components())
        throw GeometryError("puncture disks are not embedded topological disks");
    return out;
}

std::vector<int> spread_centers(const TriMesh& mesh, int count) {
    if (count < 0 || count > mesh.num_vertices()) throw DomainError("center count out of range");
    const auto& chart = mesh.chart();
    // Flat metric with minimal lattice image on tori, chord length otherwise.
    auto dist = [&](int a, int b) {
        const Vec3 d = mesh.vertices()[b] - mesh.vertices()[a];
        if (!chart) return d.norm();
        double best = std::numeric_limits<double>::infinity();
        for (int i = -2; i <= 2; ++i)
            for (int j = -2; j <= 2; ++j) best = std::min(best, (d + i * chart->period1 + j * chart->period2).norm());
        return best;
    };
    std::vector<int> centers;
    if (count == 0) return centers;
    centers.push_back(0);
    std::vector<double> nearest(mesh.num_vertices());
    for (int i = 0; i < mesh.num_vertices(); ++i) nearest[i] = dist(0, i);
    while (static_cast<int>(centers.size()) < count) {
        const int next = static_cast<int>(std::max_element(nearest.begin(), nearest.end()) - nearest.begin());
        centers.push_back(next);
        for (int i = 0; i < mesh.num_vertices(); ++i) nearest[i] = std::min(nearest[i], dist(next, i));
    }
    return centers;
}

}  // namespace specx
