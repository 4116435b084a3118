#include "specx/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <string>
#include <unordered_map>

#include <Eigen/Geometry>

#include "specx/error.hpp"

namespace specx {
namespace {

std::uint64_t edge_key(int i, int j) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(i)) << 32) |
           static_cast<std::uint32_t>(j);
}

struct UnionFind {
    std::vector<int> parent;
    explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    int find(int x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    }
    void unite(int a, int b) { parent[find(a)] = find(b); }
};

}  // namespace

TriMesh TriMesh::create(std::vector<Vec3> vertices, std::vector<Triangle> triangles,
                        Options options) {
    const int nv = static_cast<int>(vertices.size());
    const int nt = static_cast<int>(triangles.size());
    if (nv == 0 || nt == 0) throw TopologyError("mesh has no vertices or no triangles");

    if (options.chart && options.corner_shifts.size() != triangles.size())
        throw DomainError("periodic mesh needs one lattice shift per triangle corner");
    if (!options.chart && !options.corner_shifts.empty())
        throw DomainError("lattice shifts given without a periodic chart");

    std::vector<char> referenced(nv, 0);
    for (int t = 0; t < nt; ++t) {
        const auto& tri = triangles[t];
        for (int c = 0; c < 3; ++c) {
            if (tri[c] < 0 || tri[c] >= nv)
                throw TopologyError("triangle " + std::to_string(t) + " references vertex " +
                                    std::to_string(tri[c]) + " out of range");
            referenced[tri[c]] = 1;
        }
        if (tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2])
            throw TopologyError("triangle " + std::to_string(t) + " repeats a vertex");
    }
    for (int v = 0; v < nv; ++v)
        if (!referenced[v]) throw TopologyError("vertex " + std::to_string(v) + " is isolated");

    std::unordered_map<std::uint64_t, int> directed;
    std::unordered_map<std::uint64_t, int> undirected;
    directed.reserve(3 * nt);
    undirected.reserve(3 * nt);
    for (const auto& tri : triangles) {
        for (int c = 0; c < 3; ++c) {
            const int i = tri[c];
            const int j = tri[(c + 1) % 3];
            if (++undirected[edge_key(std::min(i, j), std::max(i, j))] > 2)
                throw TopologyError("non-manifold edge (" + std::to_string(std::min(i, j)) + ", " +
                                    std::to_string(std::max(i, j)) +
                                    ") has more than two triangles");
            if (++directed[edge_key(i, j)] > 1)
                throw TopologyError("inconsistent orientation at edge (" + std::to_string(i) +
                                    ", " + std::to_string(j) + ")");
        }
    }

    // Border edges are directed edges without a twin.
    std::vector<int> next_on_border(nv, -1);
    int border_edges = 0;
    for (const auto& tri : triangles) {
        for (int c = 0; c < 3; ++c) {
            const int i = tri[c];
            const int j = tri[(c + 1) % 3];
            if (directed.count(edge_key(j, i))) continue;
            if (next_on_border[i] != -1)
                throw TopologyError("non-manifold vertex " + std::to_string(i) +
                                    " lies on two border strands");
            next_on_border[i] = j;
            ++border_edges;
        }
    }
    std::vector<std::vector<int>> loops;
    std::vector<char> visited(nv, 0);
    int walked = 0;
    for (int start = 0; start < nv; ++start) {
        if (next_on_border[start] == -1 || visited[start]) continue;
        std::vector<int> loop;
        int v = start;
        while (!visited[v]) {
            visited[v] = 1;
            loop.push_back(v);
            v = next_on_border[v];
            if (v == -1) throw TopologyError("open border strand");
        }
        if (v != start) throw TopologyError("border strands do not form simple loops");
        walked += static_cast<int>(loop.size());
        loops.push_back(std::move(loop));
    }
    if (walked != border_edges) throw TopologyError("border edges do not close into loops");

    UnionFind uf(nv);
    for (const auto& tri : triangles) {
        uf.unite(tri[0], tri[1]);
        uf.unite(tri[1], tri[2]);
    }
    std::unordered_map<int, int> comp_index;
    for (int v = 0; v < nv; ++v) comp_index.emplace(uf.find(v), static_cast<int>(comp_index.size()));
    const int ncomp = static_cast<int>(comp_index.size());
    std::vector<int> comp_v(ncomp, 0), comp_e(ncomp, 0), comp_f(ncomp, 0), comp_b(ncomp, 0);
    for (int v = 0; v < nv; ++v) ++comp_v[comp_index[uf.find(v)]];
    for (const auto& tri : triangles) ++comp_f[comp_index[uf.find(tri[0])]];
    for (const auto& [key, count] : undirected) {
        (void)count;
        ++comp_e[comp_index[uf.find(static_cast<int>(key >> 32))]];
    }
    for (const auto& loop : loops) ++comp_b[comp_index[uf.find(loop.front())]];
    int genus = 0;
    for (int c = 0; c < ncomp; ++c) {
        const int chi = comp_v[c] - comp_e[c] + comp_f[c];
        const int twice_genus = 2 - comp_b[c] - chi;
        if (twice_genus < 0 || twice_genus % 2 != 0)
            throw TopologyError("Euler characteristic " + std::to_string(chi) +
                                " is inconsistent with an orientable surface");
        genus += twice_genus / 2;
    }

    TriMesh mesh;
    mesh.vertices_ = std::move(vertices);
    mesh.triangles_ = std::move(triangles);
    mesh.boundary_loops_ = std::move(loops);
    mesh.corner_shifts_ = std::move(options.corner_shifts);
    mesh.chart_ = options.chart;
    mesh.genus_hint_ = genus;
    mesh.num_edges_ = static_cast<int>(undirected.size());
    mesh.num_components_ = ncomp;
    if (options.parent_vertex.empty()) {
        mesh.parent_vertex_.resize(nv);
        std::iota(mesh.parent_vertex_.begin(), mesh.parent_vertex_.end(), 0);
    } else {
        if (static_cast<int>(options.parent_vertex.size()) != nv)
            throw DomainError("parent_vertex must have one entry per vertex");
        mesh.parent_vertex_ = std::move(options.parent_vertex);
    }
    return mesh;
}

Vec3 TriMesh::corner(int t, int c) const {
    const Vec3& p = vertices_[triangles_[t][c]];
    if (!chart_) return p;
    const LatticeShift& s = corner_shifts_[t][c];
    return p + s[0] * chart_->period1 + s[1] * chart_->period2;
}

TriMesh TriMesh::scaled(double s) const {
    TriMesh out = *this;
    for (auto& p : out.vertices_) p *= s;
    if (out.chart_) {
        out.chart_->period1 *= s;
        out.chart_->period2 *= s;
        out.chart_->tau = {};  // no longer a unit-period lattice
        out.chart_->resolution = 0;
    }
    return out;
}

// ---------------------------------------------------------------------------

ConformalDensity::ConformalDensity(const TriMesh& mesh, Eigen::VectorXd values)
    : values_(std::move(values)) {
    if (values_.size() != mesh.num_vertices())
        throw DomainError("density must have one value per vertex");
    for (int i = 0; i < values_.size(); ++i)
        if (!(values_[i] >= 0.0) || !std::isfinite(values_[i]))
            throw DomainError("density must be finite and nonnegative");
    for (const auto& tri : mesh.triangles())
        if (values_[tri[0]] == 0.0 && values_[tri[1]] == 0.0 && values_[tri[2]] == 0.0)
            throw DomainError("density zeros are not isolated: a triangle vanishes identically");
}

ConformalDensity ConformalDensity::constant(const TriMesh& mesh, double c) {
    if (!(c > 0.0)) throw DomainError("constant density must be positive");
    return ConformalDensity(mesh, Eigen::VectorXd::Constant(mesh.num_vertices(), c));
}

// ---------------------------------------------------------------------------

double triangle_area(const TriMesh& mesh, int t) {
    const Vec3 p0 = mesh.corner(t, 0);
    return 0.5 * (mesh.corner(t, 1) - p0).cross(mesh.corner(t, 2) - p0).norm();
}

SymmetricForm stiffness_matrix(const TriMesh& mesh) {
    std::vector<Eigen::Triplet<double>> entries;
    entries.reserve(12 * mesh.num_triangles());
    for (int t = 0; t < mesh.num_triangles(); ++t) {
        const auto& tri = mesh.triangles()[t];
        const std::array<Vec3, 3> p{mesh.corner(t, 0), mesh.corner(t, 1), mesh.corner(t, 2)};
        for (int c = 0; c < 3; ++c) {
            const Vec3 u = p[(c + 1) % 3] - p[c];
            const Vec3 v = p[(c + 2) % 3] - p[c];
            const double cross = u.cross(v).norm();
            if (!(cross > 1e-14 * u.norm() * v.norm()))
                throw GeometryError("degenerate triangle " + std::to_string(t));
            const double w = 0.5 * u.dot(v) / cross;
            const int i = tri[(c + 1) % 3];
            const int j = tri[(c + 2) % 3];
            entries.emplace_back(i, j, -w);
            entries.emplace_back(j, i, -w);
            entries.emplace_back(i, i, w);
            entries.emplace_back(j, j, w);
        }
    }
    SymmetricForm k(mesh.num_vertices(), mesh.num_vertices());
    k.setFromTriplets(entries.begin(), entries.end());
    k.makeCompressed();
    return k;
}

Eigen::VectorXd vertex_areas(const TriMesh& mesh) {
    Eigen::VectorXd a = Eigen::VectorXd::Zero(mesh.num_vertices());
    for (int t = 0; t < mesh.num_triangles(); ++t) {
        const double third = triangle_area(mesh, t) / 3.0;
        for (int v : mesh.triangles()[t]) a[v] += third;
    }
    return a;
}

Eigen::VectorXd mass_matrix(const TriMesh& mesh, const ConformalDensity& f) {
    if (f.size() != mesh.num_vertices()) throw DomainError("density size does not match mesh");
    Eigen::VectorXd m = vertex_areas(mesh).cwiseProduct(f.values());
    if (!(m.sum() > 0.0)) throw DomainError("density has zero total mass");
    return m;
}

double area(const TriMesh& mesh, const ConformalDensity& f) { return mass_matrix(mesh, f).sum(); }

double area(const TriMesh& mesh) { return vertex_areas(mesh).sum(); }

MeshMeasure volume_measure(const TriMesh& mesh, const ConformalDensity& f) {
    return {MeasureKind::volume, mass_matrix(mesh, f)};
}

MeshMeasure curve_measure(const TriMesh& mesh, std::span<const int> loop_ids) {
    if (loop_ids.empty()) throw DomainError("curve measure needs at least one boundary loop");
    const int nloops = static_cast<int>(mesh.boundary_loops().size());
    std::vector<char> used(nloops, 0);
    Eigen::VectorXd w = Eigen::VectorXd::Zero(mesh.num_vertices());

    // Border edge lengths must respect lattice shifts, so read them off triangles.
    std::unordered_map<std::uint64_t, double> border_length;
    for (int t = 0; t < mesh.num_triangles(); ++t)
        for (int c = 0; c < 3; ++c)
            border_length[edge_key(mesh.triangles()[t][c], mesh.triangles()[t][(c + 1) % 3])] =
                (mesh.corner(t, (c + 1) % 3) - mesh.corner(t, c)).norm();

    for (int id : loop_ids) {
        if (id < 0 || id >= nloops)
            throw DomainError("boundary loop id " + std::to_string(id) + " does not exist");
        if (used[id]) throw DomainError("boundary loop selected twice");
        used[id] = 1;
        const auto& loop = mesh.boundary_loops()[id];
        for (std::size_t k = 0; k < loop.size(); ++k) {
            const int i = loop[k];
            const int j = loop[(k + 1) % loop.size()];
            const double len = border_length.at(edge_key(i, j));
            w[i] += 0.5 * len;
            w[j] += 0.5 * len;
        }
    }
    return {MeasureKind::curve, w};
}

MeshMeasure boundary_measure(const TriMesh& mesh) {
    std::vector<int> ids(mesh.boundary_loops().size());
    std::iota(ids.begin(), ids.end(), 0);
    return curve_measure(mesh, ids);
}

double boundary_length(const TriMesh& mesh) {
    if (!mesh.has_boundary()) return 0.0;
    return boundary_measure(mesh).total_mass();
}

std::vector<Edge> mesh_edges(const TriMesh& mesh) {
    std::unordered_map<std::uint64_t, double> seen;
    std::vector<Edge> edges;
    edges.reserve(mesh.num_edges());
    for (int t = 0; t < mesh.num_triangles(); ++t) {
        for (int c = 0; c < 3; ++c) {
            int i = mesh.triangles()[t][c];
            int j = mesh.triangles()[t][(c + 1) % 3];
            if (i > j) std::swap(i, j);
            if (seen.emplace(edge_key(i, j), 0.0).second)
                edges.push_back({i, j, (mesh.corner(t, (c + 1) % 3) - mesh.corner(t, c)).norm()});
        }
    }
    return edges;
}

double mean_edge_length(const TriMesh& mesh) {
    const auto edges = mesh_edges(mesh);
    double sum = 0.0;
    for (const auto& e : edges) sum += e.length;
    return sum / static_cast<double>(edges.size());
}

std::vector<double> edge_distances(const TriMesh& mesh, int source) {
    const int nv = mesh.num_vertices();
    if (source < 0 || source >= nv) throw DomainError("source vertex out of range");
    std::vector<std::vector<std::pair<int, double>>> adj(nv);
    for (const auto& e : mesh_edges(mesh)) {
        adj[e.i].emplace_back(e.j, e.length);
        adj[e.j].emplace_back(e.i, e.length);
    }
    std::vector<double> dist(nv, std::numeric_limits<double>::infinity());
    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
    dist[source] = 0.0;
    queue.emplace(0.0, source);
    while (!queue.empty()) {
        const auto [d, v] = queue.top();
        queue.pop();
        if (d > dist[v]) continue;
        for (const auto& [w, len] : adj[v]) {
            if (d + len < dist[w]) {
                dist[w] = d + len;
                queue.emplace(dist[w], w);
            }
        }
    }
    return dist;
}

}  // namespace specx
