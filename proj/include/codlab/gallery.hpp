#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "codlab/bundle.hpp"
#include "codlab/hilbert.hpp"
#include "codlab/sampling.hpp"

namespace codlab {

// ---------------------------------------------------------------------------
// The curve t -> (t, t^2, t^3, t^4) as a graph chart on I = (-pi, pi).
// ---------------------------------------------------------------------------

inline Chart twisted_quartic() {
    auto f = [](const Vec& x) {
        const double t = x[0];
        Vec v(3);
        v << t * t, t * t * t, t * t * t * t;
        return v;
    };
    auto jac = [](const Vec& x) {
        const double t = x[0];
        Mat j(3, 1);
        j << 2 * t, 3 * t * t, 4 * t * t * t;
        return j;
    };
    auto hess = [](const Vec& x) {
        const double t = x[0];
        std::vector<Mat> h(3, Mat(1, 1));
        h[0] << 2.0;
        h[1] << 6.0 * t;
        h[2] << 12.0 * t * t;
        return h;
    };
    return Chart::graph(1, 4, Box::standard_cube(1), f, jac, hess,
                        "twisted-quartic");
}

// ---------------------------------------------------------------------------
// Tangent developable x(u, v) = g(u) + v g'(u) of a regular curve chart g.
// One-sided instances require v_min > 0 to stay off the cuspidal edge.
// ---------------------------------------------------------------------------

inline Chart tangent_developable(const Chart& g, bool one_sided, double v_min,
                                 double v_max) {
    if (g.dim_domain != 1)
        throw DimensionMismatch("developables need a curve chart");
    if (one_sided && !(v_min > 0))
        throw DomainViolation("one-sided developable needs v_min > 0");
    if (!(v_min < v_max)) throw BadGrid("empty ruling range");

    auto velocity = [g](double u) {
        Vec xu(1);
        xu << u;
        return Vec(embed_jacobian(g, xu).col(0));
    };
    auto acceleration = [g](double u) {
        Vec xu(1);
        xu << u;
        return embed_second_derivatives(g, xu)[0];
    };

    // Regularity probe along the sampled ruling range.
    for (int k = 0; k < 64; ++k) {
        const double u = g.domain.lo[0] +
                         (k + 0.5) / 64.0 * (g.domain.hi[0] - g.domain.lo[0]);
        if (velocity(u).norm() < 1e-9)
            throw DegenerateRuling("curve velocity vanishes on the ruling range");
    }

    const int n = g.dim_ambient;
    Vec lo(2), hi(2);
    lo << g.domain.lo[0], v_min;
    hi << g.domain.hi[0], v_max;
    auto psi = [g, velocity](const Vec& x) {
        Vec xu(1);
        xu << x[0];
        return Vec(embed(g, xu) + x[1] * velocity(x[0]));
    };
    auto jac = [velocity, acceleration, n](const Vec& x) {
        Mat j(n, 2);
        j.col(0) = velocity(x[0]) + x[1] * acceleration(x[0]);
        j.col(1) = velocity(x[0]);
        return j;
    };
    return Chart::parametric(2, n, Box(lo, hi), psi, jac,
                             "developable:" + g.label);
}

// ---------------------------------------------------------------------------
// Four circular arcs glued into a closed C^1 curve in R^2, arc-length
// parametrized. Centers {0, -3i, 2i, 5i}, radii {6, 3, 2, 1}; the third arc
// runs in reverse so consecutive arcs chain head-to-tail:
//   6i -> -6i -> 0 -> 4i -> 6i.
// ---------------------------------------------------------------------------

inline Chart circle_arc(Vec center, double radius, double theta0, int orientation,
                        double sweep_angle, std::string label) {
    const double length = radius * sweep_angle;
    auto angle = [=](double s) { return theta0 + orientation * s / radius; };
    auto psi = [=](const Vec& x) {
        const double th = angle(x[0]);
        Vec p(2);
        p << center[0] + radius * std::cos(th), center[1] + radius * std::sin(th);
        return p;
    };
    auto jac = [=](const Vec& x) {
        const double th = angle(x[0]);
        Mat j(2, 1);
        j << -orientation * std::sin(th), orientation * std::cos(th);
        return j;
    };
    return Chart::parametric(1, 2, Box::cube(1, 0.0, length), psi, jac,
                             std::move(label));
}

inline EmbeddedManifold glued_circles() {
    Vec c1(2), c2(2), c3(2), c4(2);
    c1 << 0, 0;
    c2 << 0, -3;
    c3 << 0, 2;
    c4 << 0, 5;
    std::vector<Chart> arcs;
    arcs.push_back(circle_arc(c1, 6.0, kPi / 2, +1, kPi, "arc1"));
    arcs.push_back(circle_arc(c2, 3.0, -kPi / 2, +1, kPi, "arc2"));
    arcs.push_back(circle_arc(c3, 2.0, 3 * kPi / 2, -1, kPi, "arc3"));
    arcs.push_back(circle_arc(c4, 1.0, -kPi / 2, +1, kPi, "arc4"));
    return EmbeddedManifold(std::move(arcs));
}

// ---------------------------------------------------------------------------
// Peano tangent curve: integrate alpha' = phi_order(t) - alpha, alpha(0) = 0,
// with phi_order the Hilbert approximation on [0,1]^2. RK4 steps are aligned
// with the polyline's dyadic kinks; residual_max compares the integrator to
// the exact per-segment variation-of-constants solution.
// ---------------------------------------------------------------------------

struct PeanoCurve {
    Chart chart;  // parametric d=1, n=2 (the curve alpha)
    int order = 0;
    double step = 0.0;
    double residual_max = 0.0;  // RK4 vs exact closed-form solution
    std::vector<Vec> grid;      // alpha at uniform grid points
    double grid_h = 0.0;

    Vec phi(double t) const { return hilbert_curve(order, t); }
};

inline PeanoCurve peano_tangent_curve(int order, double step) {
    if (order < 1) throw ConfigError("order must be >= 1");
    if (!(step > 0)) throw ConfigError("step must be positive");
    PeanoCurve pc;
    pc.order = order;
    pc.step = step;

    const std::uint64_t segments = 1ULL << (2 * order);
    const double seg_len = 1.0 / static_cast<double>(segments);
    const auto per_seg = std::max<std::uint64_t>(
        1, static_cast<std::uint64_t>(std::llround(seg_len / step)));
    const double h = seg_len / static_cast<double>(per_seg);
    const std::uint64_t steps = segments * per_seg;
    pc.grid_h = h;
    pc.grid.reserve(steps + 1);

    auto rhs = [order](double t, const Vec& a) {
        return Vec(hilbert_curve(order, t) - a);
    };

    Vec a = Vec::Zero(2);        // RK4 state
    Vec a_exact = Vec::Zero(2);  // closed-form state, advanced per step
    pc.grid.push_back(a);
    const double bound = 10.0 * (1.0 + std::sqrt(2.0));
    for (std::uint64_t i = 0; i < steps; ++i) {
        const double t = static_cast<double>(i) * h;
        Vec k1 = rhs(t, a);
        Vec k2 = rhs(t + h / 2, a + (h / 2) * k1);
        Vec k3 = rhs(t + h / 2, a + (h / 2) * k2);
        Vec k4 = rhs(t + h, a + h * k3);
        a += (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4);
        if (a.norm() > bound)
            throw IntegrationUnstable("step too large for the Peano ODE");
        pc.grid.push_back(a);

        // Exact: on the segment phi(t) = phi(t_i) + c1 (t - t_i), a particular
        // solution is phi(t) - c1, so the error term decays as e^{-(t - t_i)}.
        Vec phi0 = hilbert_curve(order, t);
        Vec phi1 = hilbert_curve(order, t + h);
        Vec c1 = (phi1 - phi0) / h;
        Vec part0 = phi0 - c1;
        a_exact = (phi1 - c1) + (a_exact - part0) * std::exp(-h);
        pc.residual_max = std::max(pc.residual_max, (a - a_exact).norm());
    }

    auto alpha = [grid = pc.grid, h](double t) {
        const double u = std::min(std::max(t, 0.0), 1.0) / h;
        auto j = static_cast<std::size_t>(u);
        if (j + 1 >= grid.size()) return grid.back();
        const double frac = u - static_cast<double>(j);
        return Vec(grid[j] + frac * (grid[j + 1] - grid[j]));
    };
    auto psi = [alpha](const Vec& x) { return alpha(x[0]); };
    auto jac = [alpha, order](const Vec& x) {
        Mat j(2, 1);
        j.col(0) = hilbert_curve(order, x[0]) - alpha(x[0]);
        return j;
    };
    pc.chart = Chart::parametric(1, 2, Box::cube(1, 0.0, 1.0), psi, jac,
                                 "peano-" + std::to_string(order));
    return pc;
}

// ---------------------------------------------------------------------------
// Cantor hyperplane family: hyperplanes {y = q * (sum x_i) + q} in R^(n+1)
// with q drawn from E = C ∪ {0}, C a two-map self-similar Cantor set of
// dimension s - n (contraction ratio r solving 2 r^(s-n) = 1). The union has
// box dimension s; s = n degenerates to the single hyperplane q = 0.
// ---------------------------------------------------------------------------

struct CantorFamily {
    double s = 1.0;
    int n = 1;
    int depth = 8;
    double ratio = 0.0;
    std::vector<double> params;  // E, enumerated to the given IFS depth
    Box sample_box;              // box the point generator fills
    Box x_box;                   // base-variable range

    Vec point(std::uint64_t seed, std::uint64_t index) const {
        const auto m = params.size();
        const double pick = uniform01(seed ^ 0xCA27ULL, index, n + 1);
        const double q =
            params[std::min<std::size_t>(static_cast<std::size_t>(pick * m), m - 1)];
        Vec u = unit_sample(SamplerKind::LowDiscrepancy, seed, index, n);
        Vec x = x_box.map_unit(u);
        Vec p(n + 1);
        p.head(n) = x;
        p[n] = q * (x.sum() + 1.0);
        return p;
    }
};

inline CantorFamily cantor_hyperplane_family(double s, int n, int depth) {
    if (depth < 4) throw ConfigError("IFS depth must be >= 4");
    if (s < n || s > n + 1) throw ConfigError("need n <= s <= n+1");
    CantorFamily fam;
    fam.s = s;
    fam.n = n;
    fam.depth = depth;
    const double dc = s - n;
    fam.params.push_back(0.0);
    if (dc > 1e-12) {
        fam.ratio = std::pow(2.0, -1.0 / dc);
        const double r = fam.ratio;
        const std::uint64_t m = 1ULL << depth;
        for (std::uint64_t bits = 0; bits < m; ++bits) {
            double q = 0.0, scale = 1.0 - r;
            for (int j = 0; j < depth; ++j) {
                if ((bits >> j) & 1ULL) q += scale;
                scale *= r;
            }
            fam.params.push_back(q);
        }
    }
    fam.x_box = Box::cube(n, 0.0, 2.0);
    Vec lo(n + 1), hi(n + 1);
    lo.head(n).setZero();
    hi.head(n).setConstant(2.0);
    lo[n] = 0.0;
    hi[n] = 2.0 * n + 1.0;
    fam.sample_box = Box(lo, hi);
    return fam;
}

// ---------------------------------------------------------------------------
// Line bundles over round spheres S^n(R) in R^(n+1), covered by two
// stereographic charts. Frame fields are ambient formulas, so tangency is
// exact where claimed.
// ---------------------------------------------------------------------------

enum class SphereField { TangentField, Tilted, Radial };

inline std::vector<FramedBundle> sphere_line_bundles(int n, SphereField mode,
                                                     double angle = 0.0,
                                                     double radius = 1.0) {
    if (n < 1) throw DimensionMismatch("sphere dimension must be >= 1");
    if (mode == SphereField::TangentField && n >= 2 && n % 2 == 0)
        throw NoSuchField(
            "even-dimensional spheres admit no continuous tangent line field");

    auto stereographic = [n, radius](bool from_north) {
        auto psi = [n, radius, from_north](const Vec& x) {
            const double r2 = x.squaredNorm();
            Vec p(n + 1);
            p.head(n) = 2.0 * radius * x / (r2 + 1.0);
            p[n] = radius * (r2 - 1.0) / (r2 + 1.0) * (from_north ? 1.0 : -1.0);
            return p;
        };
        return Chart::parametric(n, n + 1, Box::cube(n, -3.0, 3.0), psi, nullptr,
                                 from_north ? "sphere-north" : "sphere-south");
    };

    auto field = [n, mode, angle, radius](const Vec& p) {
        Vec x(n + 1);
        switch (mode) {
            case SphereField::TangentField:
                // Pairwise rotation field; exists for n = 1 and odd n.
                for (int i = 0; i + 1 <= n; i += 2) {
                    x[i] = -p[i + 1];
                    x[i + 1] = p[i];
                }
                if ((n + 1) % 2 != 0)
                    throw NoSuchField("tangent field undefined in odd ambient dim");
                return Vec(x / radius);
            case SphereField::Radial:
                return Vec(p / radius);
            case SphereField::Tilted: {
                Vec tau = Vec::Zero(n + 1);
                const double horiz = std::hypot(p[0], p[1]);
                if (horiz > 1e-12) {
                    tau[0] = -p[1] / horiz;
                    tau[1] = p[0] / horiz;
                } else {
                    tau[0] = 1.0;
                }
                return Vec(std::cos(angle) * tau + std::sin(angle) * p / radius);
            }
        }
        return x;
    };

    std::vector<FramedBundle> out;
    for (bool from_north : {true, false}) {
        Chart chart = stereographic(from_north);
        auto frame = [chart, field](const Vec& x) {
            Mat a(chart.dim_ambient, 1);
            a.col(0) = field(embed(chart, x));
            return a;
        };
        out.push_back(make_custom_bundle(chart, 1, frame,
                                         "sphere-" + std::to_string(n)));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Affine pushforward: base points map through x -> L x + b and fiber
// directions through the linear part (renormalized on evaluation). Tangent
// line bundles of spheres become tangent line bundles of ellipsoids.
// ---------------------------------------------------------------------------

inline FramedBundle ellipsoid_pushforward(const Mat& l, const Vec& b,
                                          const FramedBundle& src) {
    const int n = src.base.dim_ambient;
    if (l.rows() != n || l.cols() != n || b.size() != n)
        throw DimensionMismatch("affine map has wrong dimensions");
    if (numeric_rank(l) < n) throw SingularTransform("affine part is singular");
    Chart base = src.base;
    auto psi = [src_base = src.base, l, b](const Vec& x) {
        return Vec(l * embed(src_base, x) + b);
    };
    auto jac = [src_base = src.base, l](const Vec& x) {
        return Mat(l * embed_jacobian(src_base, x));
    };
    Chart pushed = Chart::parametric(base.dim_domain, n, base.domain, psi, jac,
                                     base.label + ":pushed");
    auto frame = [src, l](const Vec& x) { return Mat(l * src.frame(x)); };
    return make_custom_bundle(pushed, src.fiber_dim, frame, src.label + ":pushed");
}

// ---------------------------------------------------------------------------
// Line bundle over the graph of a strictly convex function, with direction
// angle phi(x). Convexity is certified by sampled second differences;
// piecewise-linear inputs are rejected.
// ---------------------------------------------------------------------------

inline FramedBundle convex_curve_bundle(const std::function<double(double)>& f,
                                        const std::function<double(double)>& phi,
                                        Box domain = Box::standard_cube(1)) {
    const double lo = domain.lo[0], hi = domain.hi[0];
    const double h = (hi - lo) / 256.0;
    double scale = 1.0;
    for (int k = 1; k < 255; ++k) {
        const double x = lo + k * h;
        scale = std::max(scale, std::abs(f(x)));
    }
    for (int k = 1; k < 255; ++k) {
        const double x = lo + k * h;
        const double second = f(x - h) - 2.0 * f(x) + f(x + h);
        if (!(second > 1e-12 * scale))
            throw NotStrictlyConvex("second differences are not strictly positive");
    }
    auto fv = [f](const Vec& x) {
        Vec v(1);
        v << f(x[0]);
        return v;
    };
    Chart chart = Chart::graph(1, 2, domain, fv, nullptr, nullptr, "convex-curve");
    auto frame = [phi](const Vec& x) {
        Mat a(2, 1);
        a << std::cos(phi(x[0])), std::sin(phi(x[0]));
        return a;
    };
    return make_custom_bundle(chart, 1, frame, "convex-curve");
}

}  // namespace codlab
