#include "specx/mobius.hpp"

#include <cmath>

#include "specx/error.hpp"

namespace specx {
namespace {

void check_dims(const Eigen::VectorXd& p, const Eigen::VectorXd& x) {
    if (p.size() != x.size()) throw DomainError("parameter and point dimensions differ");
    if (p.norm() > 1.0 + 1e-12) throw DomainError("parameter must lie in the closed unit ball");
}

// Cube grid points per axis in [-r, r], kept when inside the ball of radius r.
std::vector<Eigen::VectorXd> ball_points(int dim, int per_axis, double r) {
    std::vector<Eigen::VectorXd> out;
    if (per_axis <= 1) {
        out.push_back(Eigen::VectorXd::Zero(dim));
        return out;
    }
    std::vector<int> idx(dim, 0);
    const double h = 2.0 * r / (per_axis - 1);
    for (;;) {
        Eigen::VectorXd p(dim);
        for (int d = 0; d < dim; ++d) p[d] = -r + h * idx[d];
        if (p.norm() <= r * (1.0 + 1e-12)) out.push_back(p);
        int d = 0;
        while (d < dim && ++idx[d] == per_axis) idx[d++] = 0;
        if (d == dim) break;
    }
    return out;
}

std::vector<Eigen::VectorXd> sphere_points(int dim, double r) {
    std::vector<Eigen::VectorXd> out;
    for (int d = 0; d < dim; ++d)
        for (double s : {1.0, -1.0}) {
            Eigen::VectorXd p = Eigen::VectorXd::Zero(dim);
            p[d] = s * r;
            out.push_back(p);
        }
    const int corners = 1 << dim;
    for (int c = 0; c < corners; ++c) {
        Eigen::VectorXd p(dim);
        for (int d = 0; d < dim; ++d) p[d] = (c >> d) & 1 ? -1.0 : 1.0;
        out.push_back(r * p.normalized());
    }
    return out;
}

bool inside(const Eigen::VectorXd& p, int dim, int factors, double r) {
    for (int f = 0; f < factors; ++f)
        if (p.segment(f * dim, dim).norm() > r * (1.0 + 1e-12)) return false;
    return true;
}

}  // namespace

Eigen::VectorXd mobius_apply(const Eigen::VectorXd& a, const Eigen::VectorXd& x) {
    check_dims(a, x);
    const double na = a.norm();
    if (na >= 1.0) return a / na;
    if (na == 0.0) return x;
    const Eigen::VectorXd ah = a / na;
    // |x + a|^2 = (1 - |a|)^2 + |a| |x + a^|^2, free of cancellation near x = -a^.
    const double d = (1.0 - na) * (1.0 - na) + na * (x + ah).squaredNorm();
    const double scale = (1.0 - na) * (1.0 + na) / d;
    Eigen::VectorXd y = scale * (x + a) + a;
    return y / y.norm();
}

Eigen::VectorXd linear_reflection(const Eigen::VectorXd& b, const Eigen::VectorXd& x) {
    if (b.size() != x.size()) throw DomainError("parameter and point dimensions differ");
    const double nb = b.norm();
    if (nb == 0.0) throw DomainError("reflection needs a nonzero direction");
    const Eigen::VectorXd bh = b / nb;
    return x - 2.0 * x.dot(bh) * bh;
}

Eigen::VectorXd cap_inversion(const Eigen::VectorXd& b, const Eigen::VectorXd& x) {
    check_dims(b, x);
    const double nb = b.norm();
    if (nb == 0.0) return x;
    if (nb >= 1.0) return linear_reflection(b, x);
    const Eigen::VectorXd bh = b / nb;
    const double c = 1.0 - nb;  // boundary circle <x, b^> = c
    // Stereographic projection from -b^ sends the boundary circle to |y| = rho.
    const double h = x.dot(bh);
    const Eigen::VectorXd w = x - h * bh;
    const double rho2 = (1.0 - c) / (1.0 + c);
    if (1.0 + h <= 0.0) return bh;  // the pole -b^ goes to b^
    const Eigen::VectorXd y = w / (1.0 + h);
    const double y2 = y.squaredNorm();
    // Inversion y' = rho^2 y / |y|^2, then back to the sphere: |y'|^2 = rho^4 / |y|^2.
    // Written in terms of |y|^2 to stay finite at y = 0 (x = b^ goes to -b^).
    const double yp2_num = rho2 * rho2;
    const double hp = (y2 - yp2_num) / (y2 + yp2_num);
    const Eigen::VectorXd wp = (y2 + yp2_num) > 0.0 ? Eigen::VectorXd((2.0 * rho2 / (y2 + yp2_num)) * y)
                                                    : Eigen::VectorXd(Eigen::VectorXd::Zero(x.size()));
    Eigen::VectorXd out = wp + hp * bh;
    return out / out.norm();
}

Eigen::VectorXd cap_reflection(const Eigen::VectorXd& b, const Eigen::VectorXd& x) {
    check_dims(b, x);
    const double nb = b.norm();
    if (nb == 0.0) return x;
    const Eigen::VectorXd bh = b / nb;
    if (x.dot(bh) <= 1.0 - std::min(nb, 1.0)) return x;
    return cap_inversion(b, x);
}

Eigen::VectorXd upsilon(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const Eigen::VectorXd& x) {
    return mobius_apply(a, cap_reflection(b, x));
}

SphereMap mobius_apply(const Eigen::VectorXd& a, const SphereMap& phi) {
    Eigen::MatrixXd v(phi.size(), phi.ambient_dim());
    for (int i = 0; i < phi.size(); ++i) v.row(i) = mobius_apply(a, Eigen::VectorXd(phi.values().row(i).transpose())).transpose();
    return SphereMap::normalize(std::move(v));
}

SphereMap upsilon(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const SphereMap& phi) {
    Eigen::MatrixXd v(phi.size(), phi.ambient_dim());
    for (int i = 0; i < phi.size(); ++i) v.row(i) = upsilon(a, b, Eigen::VectorXd(phi.values().row(i).transpose())).transpose();
    return SphereMap::normalize(std::move(v));
}

BallSearchResult ball_sup(int dim, int factors, const std::function<double(const Eigen::VectorXd&)>& f,
                          const BallSearchOptions& opt) {
    if (dim < 1 || factors < 1) throw DomainError("ball search needs positive dimensions");
    if (!(opt.max_radius > 0.0 && opt.max_radius <= 1.0)) throw DomainError("max_radius must lie in (0, 1]");
    const int total = dim * factors;
    BallSearchResult res;
    res.value = -std::numeric_limits<double>::infinity();
    auto visit = [&](const Eigen::VectorXd& p) {
        const double v = f(p);
        ++res.evaluations;
        if (v > res.value) {
            res.value = v;
            res.argmax = p;
        }
    };

    const auto grid = ball_points(dim, opt.points_per_axis, opt.max_radius);
    if (grid.empty()) throw DomainError("search grid has no points inside the ball");
    std::vector<std::size_t> idx(factors, 0);
    for (;;) {
        Eigen::VectorXd p(total);
        for (int k = 0; k < factors; ++k) p.segment(k * dim, dim) = grid[idx[k]];
        visit(p);
        int k = 0;
        while (k < factors && ++idx[k] == grid.size()) idx[k++] = 0;
        if (k == factors) break;
    }
    if (opt.boundary_samples) {
        const auto rim = sphere_points(dim, 1.0);
        for (int k = 0; k < factors; ++k) {
            for (const auto& s : rim) {
                Eigen::VectorXd p = res.argmax;
                p.segment(k * dim, dim) = s;
                visit(p);
            }
        }
    }
    res.rounds.push_back(res.value);

    double radius = opt.points_per_axis > 1 ? 2.0 * opt.max_radius / (opt.points_per_axis - 1) : opt.max_radius;
    int per_axis = std::max(opt.refine_points, 3);
    while (per_axis > 3 && std::pow(per_axis, total) > 2000.0) per_axis -= 2;
    for (int r = 0; r < opt.refine_rounds; ++r) {
        const Eigen::VectorXd center = res.argmax;
        // Full cube stencil of per_axis^total offsets in [-radius, radius].
        std::vector<int> digit(total, 0);
        for (;;) {
            Eigen::VectorXd s(total);
            for (int k = 0; k < total; ++k) s[k] = radius * (2.0 * digit[k] / (per_axis - 1) - 1.0);
            if (!s.isZero(0.0)) {
                const Eigen::VectorXd p = center + s;
                if (inside(p, dim, factors, opt.max_radius)) visit(p);
            }
            int k = 0;
            while (k < total && ++digit[k] == per_axis) digit[k++] = 0;
            if (k == total) break;
        }
        res.rounds.push_back(res.value);
        radius *= 0.5;
    }
    return res;
}

ConformalVolumeReport conformal_volume(const TriMesh& mesh, const SphereMap& phi, BallSearchOptions options) {
    options.max_radius = std::min(options.max_radius, 0.999);
    const int dim = phi.ambient_dim();
    const BallSearchResult r = ball_sup(
        dim, 1, [&](const Eigen::VectorXd& a) { return energy(mesh, mobius_apply(a, phi)); }, options);
    ConformalVolumeReport rep;
    rep.estimate = r.value;
    rep.argmax = r.argmax;
    rep.evaluations = r.evaluations;
    rep.rounds = r.rounds;
    const HopfField hopf = hopf_differential(mesh, phi);
    double defect = 0.0;
    for (int t = 0; t < mesh.num_triangles(); ++t) defect += std::abs(hopf[t]) * triangle_area(mesh, t);
    const double e = energy(mesh, phi);
    rep.hopf_defect = e > 0.0 ? defect / (2.0 * e) : 0.0;
    return rep;
}

}  // namespace specx
