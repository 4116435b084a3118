#include <cmath>
#include <map>
#include <numbers>

#include "specx/error.hpp"
#include "specx/mesh.hpp"

namespace specx {
namespace {

// Triangulates the strip between two concentric rings given by vertex ids and
// angles in [0, 2pi). Produces counter-clockwise triangles (normal +z).
void stitch_rings(const std::vector<int>& inner, const std::vector<double>& inner_angle,
                  const std::vector<int>& outer, const std::vector<double>& outer_angle,
                  std::vector<Triangle>& out) {
    const std::size_t ni = inner.size();
    const std::size_t no = outer.size();
    auto unwrap = [](const std::vector<double>& ang, std::size_t k) {
        const std::size_t n = ang.size();
        return ang[k % n] + 2.0 * std::numbers::pi * static_cast<double>(k / n);
    };
    std::size_t a = 0, b = 0;
    while (a < ni || b < no) {
        const bool advance_outer =
            a == ni || (b < no && unwrap(outer_angle, b + 1) <= unwrap(inner_angle, a + 1));
        if (advance_outer) {
            out.push_back({inner[a % ni], outer[b % no], outer[(b + 1) % no]});
            ++b;
        } else {
            out.push_back({inner[a % ni], outer[b % no], inner[(a + 1) % ni]});
            ++a;
        }
    }
}

}  // namespace

TriMesh build_sphere_mesh(int subdivisions) {
    if (subdivisions < 0) throw DomainError("subdivisions must be nonnegative");
    const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
    std::vector<Vec3> v = {{-1, phi, 0}, {1, phi, 0},  {-1, -phi, 0}, {1, -phi, 0},
                           {0, -1, phi}, {0, 1, phi},  {0, -1, -phi}, {0, 1, -phi},
                           {phi, 0, -1}, {phi, 0, 1},  {-phi, 0, -1}, {-phi, 0, 1}};
    for (auto& p : v) p.normalize();
    std::vector<Triangle> f = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                               {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                               {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                               {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
    for (int s = 0; s < subdivisions; ++s) {
        std::map<std::pair<int, int>, int> midpoint;
        auto mid = [&](int a, int b) {
            const auto key = std::minmax(a, b);
            auto it = midpoint.find(key);
            if (it != midpoint.end()) return it->second;
            v.push_back((v[a] + v[b]).normalized());
            const int id = static_cast<int>(v.size()) - 1;
            midpoint.emplace(key, id);
            return id;
        };
        std::vector<Triangle> refined;
        refined.reserve(4 * f.size());
        for (const auto& t : f) {
            const int ab = mid(t[0], t[1]);
            const int bc = mid(t[1], t[2]);
            const int ca = mid(t[2], t[0]);
            refined.push_back({t[0], ab, ca});
            refined.push_back({t[1], bc, ab});
            refined.push_back({t[2], ca, bc});
            refined.push_back({ab, bc, ca});
        }
        f = std::move(refined);
    }
    return TriMesh::create(std::move(v), std::move(f));
}

TriMesh build_torus_mesh(std::complex<double> tau, int resolution) {
    if (!(tau.imag() > 0.0)) throw DomainError("torus modulus needs Im(tau) > 0");
    if (resolution < 3) throw DomainError("torus resolution must be at least 3");
    const int n = resolution;
    TorusChart chart;
    chart.tau = tau;
    chart.resolution = n;
    chart.period1 = Vec3(1.0, 0.0, 0.0);
    chart.period2 = Vec3(tau.real(), tau.imag(), 0.0);

    std::vector<Vec3> v;
    v.reserve(n * n);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i)
            v.push_back((static_cast<double>(i) * chart.period1 + static_cast<double>(j) * chart.period2) /
                        static_cast<double>(n));

    // Split every cell along its shorter diagonal.
    const bool main_diagonal =
        (chart.period1 + chart.period2).norm() <= (chart.period1 - chart.period2).norm() + 1e-12;

    std::vector<Triangle> f;
    std::vector<std::array<LatticeShift, 3>> shifts;
    f.reserve(2 * n * n);
    shifts.reserve(2 * n * n);
    auto id = [n](int i, int j) { return (j % n) * n + (i % n); };
    auto shift = [n](int i, int j) { return LatticeShift{i / n, j / n}; };
    auto emit = [&](std::array<std::pair<int, int>, 3> c) {
        f.push_back({id(c[0].first, c[0].second), id(c[1].first, c[1].second),
                     id(c[2].first, c[2].second)});
        shifts.push_back({shift(c[0].first, c[0].second), shift(c[1].first, c[1].second),
                          shift(c[2].first, c[2].second)});
    };
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            const std::pair p00{i, j}, p10{i + 1, j}, p11{i + 1, j + 1}, p01{i, j + 1};
            if (main_diagonal) {
                emit({p00, p10, p11});
                emit({p00, p11, p01});
            } else {
                emit({p00, p10, p01});
                emit({p10, p11, p01});
            }
        }
    }
    TriMesh::Options opts;
    opts.chart = chart;
    opts.corner_shifts = std::move(shifts);
    return TriMesh::create(std::move(v), std::move(f), std::move(opts));
}

TriMesh build_disk_mesh(int rings) {
    if (rings < 1) throw DomainError("disk needs at least one ring");
    std::vector<Vec3> v{Vec3::Zero()};
    std::vector<Triangle> f;
    std::vector<int> prev{0};
    std::vector<double> prev_angle{0.0};
    for (int r = 1; r <= rings; ++r) {
        const int count = 6 * r;
        const double radius = static_cast<double>(r) / rings;
        std::vector<int> ring(count);
        std::vector<double> angle(count);
        for (int k = 0; k < count; ++k) {
            angle[k] = 2.0 * std::numbers::pi * k / count;
            ring[k] = static_cast<int>(v.size());
            v.emplace_back(radius * std::cos(angle[k]), radius * std::sin(angle[k]), 0.0);
        }
        if (r == 1) {
            for (int k = 0; k < count; ++k) f.push_back({0, ring[k], ring[(k + 1) % count]});
        } else {
            stitch_rings(prev, prev_angle, ring, angle, f);
        }
        prev = std::move(ring);
        prev_angle = std::move(angle);
    }
    return TriMesh::create(std::move(v), std::move(f));
}

TriMesh build_annulus_mesh(double inner_radius, int rings, int segments) {
    if (!(inner_radius > 0.0 && inner_radius < 1.0))
        throw DomainError("annulus inner radius must lie in (0, 1)");
    if (rings < 1 || segments < 3) throw DomainError("annulus needs rings >= 1, segments >= 3");
    std::vector<Vec3> v;
    std::vector<Triangle> f;
    std::vector<int> prev;
    std::vector<double> prev_angle;
    for (int r = 0; r <= rings; ++r) {
        const double radius = inner_radius * std::pow(1.0 / inner_radius, static_cast<double>(r) / rings);
        const double offset = (r % 2) ? std::numbers::pi / segments : 0.0;
        std::vector<int> ring(segments);
        std::vector<double> angle(segments);
        for (int k = 0; k < segments; ++k) {
            angle[k] = offset + 2.0 * std::numbers::pi * k / segments;
            ring[k] = static_cast<int>(v.size());
            v.emplace_back(radius * std::cos(angle[k]), radius * std::sin(angle[k]), 0.0);
        }
        if (r > 0) stitch_rings(prev, prev_angle, ring, angle, f);
        prev = std::move(ring);
        prev_angle = std::move(angle);
    }
    return TriMesh::create(std::move(v), std::move(f));
}

}  // namespace specx
