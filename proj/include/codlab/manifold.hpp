#pragma once

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "codlab/core.hpp"

namespace codlab {

// ---------------------------------------------------------------------------
// Chart: a rigid-motion-placed piece of a d-submanifold of R^n.
//
// Two gauges:
//   Graph      embed(x) = Q * (x, f(x)) + c  with  f : R^d -> R^(n-d)
//   Parametric embed(x) = Q * psi(x) + c     with  psi : R^d -> R^n
//
// The graph gauge is the workhorse (section transforms need it); parametric
// charts carry surfaces like arcs and tangent developables that are not
// graphs over their whole domain.
// ---------------------------------------------------------------------------

enum class ChartGauge { Graph, Parametric };

struct Chart {
    ChartGauge gauge = ChartGauge::Graph;
    int dim_domain = 0;
    int dim_ambient = 0;
    Box domain;
    std::string label;

    // graph gauge
    std::function<Vec(const Vec&)> graph_map;                   // R^d -> R^(n-d)
    std::function<Mat(const Vec&)> graph_jacobian;              // (n-d) x d
    std::function<std::vector<Mat>(const Vec&)> graph_hessian;  // d x d per component

    // parametric gauge
    std::function<Vec(const Vec&)> param_map;       // R^d -> R^n
    std::function<Mat(const Vec&)> param_jacobian;  // n x d

    // placement
    Mat rotation;     // n x n orthogonal
    Vec translation;  // n

    double h_fd = 0.0;  // 0 => per-coordinate default step

    bool has_placement = false;

    bool is_graph() const { return gauge == ChartGauge::Graph; }
    bool analytic() const {
        return is_graph() ? static_cast<bool>(graph_jacobian)
                          : static_cast<bool>(param_jacobian);
    }

    static Chart graph(int d, int n, Box dom, std::function<Vec(const Vec&)> f,
                       std::function<Mat(const Vec&)> jac = nullptr,
                       std::function<std::vector<Mat>(const Vec&)> hess = nullptr,
                       std::string label = {}) {
        if (d < 0 || n < d) throw DimensionMismatch("need 0 <= d <= n");
        Chart c;
        c.gauge = ChartGauge::Graph;
        c.dim_domain = d;
        c.dim_ambient = n;
        c.domain = std::move(dom);
        c.graph_map = std::move(f);
        c.graph_jacobian = std::move(jac);
        c.graph_hessian = std::move(hess);
        c.rotation = Mat::Identity(n, n);
        c.translation = Vec::Zero(n);
        c.label = std::move(label);
        return c;
    }

    static Chart parametric(int d, int n, Box dom,
                            std::function<Vec(const Vec&)> psi,
                            std::function<Mat(const Vec&)> jac = nullptr,
                            std::string label = {}) {
        if (d < 1 || n < d) throw DimensionMismatch("need 1 <= d <= n");
        Chart c;
        c.gauge = ChartGauge::Parametric;
        c.dim_domain = d;
        c.dim_ambient = n;
        c.domain = std::move(dom);
        c.param_map = std::move(psi);
        c.param_jacobian = std::move(jac);
        c.rotation = Mat::Identity(n, n);
        c.translation = Vec::Zero(n);
        c.label = std::move(label);
        return c;
    }

    Chart& place(Mat q, Vec c) {
        if (q.rows() != dim_ambient || q.cols() != dim_ambient ||
            c.size() != dim_ambient)
            throw DimensionMismatch("placement has wrong dimensions");
        rotation = std::move(q);
        translation = std::move(c);
        has_placement = true;
        return *this;
    }

    double step(double xi) const { return h_fd > 0.0 ? h_fd : fd_step(xi); }
    double step2(double xi) const { return h_fd > 0.0 ? h_fd : fd_step2(xi); }
};

struct EmbeddedManifold {
    std::vector<Chart> charts;

    explicit EmbeddedManifold(std::vector<Chart> cs) : charts(std::move(cs)) {
        if (charts.empty()) throw DimensionMismatch("manifold needs >= 1 chart");
        for (const auto& c : charts)
            if (c.dim_ambient != charts.front().dim_ambient)
                throw DimensionMismatch("charts disagree on ambient dimension");
    }

    int dim_ambient() const { return charts.front().dim_ambient; }
};

struct OsculatingReport {
    Vec x;
    int tangent_rank = 0;
    int osculating_rank = 0;
    double hessian_min_singular_value =
        std::numeric_limits<double>::quiet_NaN();  // hypersurfaces only
};

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

namespace detail {

inline void check_domain(const Chart& c, const Vec& x) {
    if (x.size() != c.dim_domain)
        throw DimensionMismatch("point has wrong domain dimension");
    if (!c.domain.contains(x))
        throw DomainViolation("point outside chart domain");
}

inline Vec graph_value(const Chart& c, const Vec& x) {
    if (!c.graph_map) throw DerivativeUnavailable("chart has no graph map");
    return c.graph_map(x);
}

}  // namespace detail

inline Vec embed(const Chart& c, const Vec& x) {
    detail::check_domain(c, x);
    Vec p(c.dim_ambient);
    if (c.is_graph()) {
        p.head(c.dim_domain) = x;
        p.tail(c.dim_ambient - c.dim_domain) = detail::graph_value(c, x);
    } else {
        p = c.param_map(x);
        if (p.size() != c.dim_ambient)
            throw DimensionMismatch("parametric map returned wrong dimension");
    }
    return c.rotation * p + c.translation;
}

// Graph-coordinate Jacobian J_x f, before placement.
inline Mat jacobian(const Chart& c, const Vec& x) {
    detail::check_domain(c, x);
    if (!c.is_graph())
        throw DerivativeUnavailable("jacobian() needs a graph-gauge chart");
    if (c.graph_jacobian) return c.graph_jacobian(x);
    if (!c.graph_map) throw DerivativeUnavailable("no evaluator for Jacobian");
    const int d = c.dim_domain;
    const int m = c.dim_ambient - d;
    Mat j(m, d);
    for (int i = 0; i < d; ++i) {
        const double h = c.step(x[i]);
        Vec xp = x, xm = x;
        xp[i] += h;
        xm[i] -= h;
        if (!c.domain.contains(xp) || !c.domain.contains(xm))
            throw DomainViolation("finite-difference stencil exits domain");
        j.col(i) = (c.graph_map(xp) - c.graph_map(xm)) / (2.0 * h);
    }
    return j;
}

// Hessian tensor of the graph map: one d x d matrix per codomain component.
inline std::vector<Mat> hessian(const Chart& c, const Vec& x) {
    detail::check_domain(c, x);
    if (!c.is_graph())
        throw DerivativeUnavailable("hessian() needs a graph-gauge chart");
    const int d = c.dim_domain;
    const int m = c.dim_ambient - d;
    if (c.graph_hessian) return c.graph_hessian(x);
    if (!c.graph_map) throw DerivativeUnavailable("no evaluator for Hessian");
    std::vector<Mat> h(m, Mat::Zero(d, d));
    const Vec f0 = c.graph_map(x);
    for (int i = 0; i < d; ++i) {
        const double hi = c.step2(x[i]);
        for (int j = i; j < d; ++j) {
            Vec val(m);
            if (i == j) {
                Vec xp = x, xm = x;
                xp[i] += hi;
                xm[i] -= hi;
                val = (c.graph_map(xp) - 2.0 * f0 + c.graph_map(xm)) / (hi * hi);
            } else {
                const double hj = c.step2(x[j]);
                Vec xpp = x, xpm = x, xmp = x, xmm = x;
                xpp[i] += hi; xpp[j] += hj;
                xpm[i] += hi; xpm[j] -= hj;
                xmp[i] -= hi; xmp[j] += hj;
                xmm[i] -= hi; xmm[j] -= hj;
                val = (c.graph_map(xpp) - c.graph_map(xpm) - c.graph_map(xmp) +
                       c.graph_map(xmm)) /
                      (4.0 * hi * hj);
            }
            for (int k = 0; k < m; ++k) {
                h[k](i, j) = val[k];
                h[k](j, i) = val[k];
            }
        }
    }
    return h;
}

// Embedded n x d Jacobian of the placed chart map (columns span T_p M).
inline Mat embed_jacobian(const Chart& c, const Vec& x) {
    detail::check_domain(c, x);
    const int d = c.dim_domain;
    const int n = c.dim_ambient;
    Mat j(n, d);
    if (c.is_graph()) {
        j.topRows(d) = Mat::Identity(d, d);
        j.bottomRows(n - d) = jacobian(c, x);
    } else if (c.param_jacobian) {
        j = c.param_jacobian(x);
    } else {
        for (int i = 0; i < d; ++i) {
            const double h = c.step(x[i]);
            Vec xp = x, xm = x;
            xp[i] += h;
            xm[i] -= h;
            if (!c.domain.contains(xp) || !c.domain.contains(xm))
                throw DomainViolation("finite-difference stencil exits domain");
            j.col(i) = (c.param_map(xp) - c.param_map(xm)) / (2.0 * h);
        }
    }
    return c.rotation * j;
}

inline Mat tangent_frame(const Chart& c, const Vec& x) {
    return orthonormalize(embed_jacobian(c, x));
}

inline Mat normal_frame(const Chart& c, const Vec& x) {
    return orthogonal_complement(embed_jacobian(c, x));
}

// Embedded second-derivative vectors d^2 psi / dx_i dx_j, placed.
inline std::vector<Vec> embed_second_derivatives(const Chart& c, const Vec& x) {
    const int d = c.dim_domain;
    const int n = c.dim_ambient;
    std::vector<Vec> out;
    out.reserve(d * (d + 1) / 2);
    if (c.is_graph()) {
        auto h = hessian(c, x);
        for (int i = 0; i < d; ++i)
            for (int j = i; j < d; ++j) {
                Vec v = Vec::Zero(n);
                for (int k = 0; k < n - d; ++k) v[d + k] = h[k](i, j);
                out.push_back(c.rotation * v);
            }
    } else {
        // second-order FD of the parametric map
        auto psi = [&](const Vec& u) { return c.param_map(u); };
        const Vec p0 = psi(x);
        for (int i = 0; i < d; ++i) {
            const double hi = c.step2(x[i]);
            for (int j = i; j < d; ++j) {
                Vec v(n);
                if (i == j) {
                    Vec xp = x, xm = x;
                    xp[i] += hi;
                    xm[i] -= hi;
                    v = (psi(xp) - 2.0 * p0 + psi(xm)) / (hi * hi);
                } else {
                    const double hj = c.step2(x[j]);
                    Vec xpp = x, xpm = x, xmp = x, xmm = x;
                    xpp[i] += hi; xpp[j] += hj;
                    xpm[i] += hi; xpm[j] -= hj;
                    xmp[i] -= hi; xmp[j] += hj;
                    xmm[i] -= hi; xmm[j] -= hj;
                    v = (psi(xpp) - psi(xpm) - psi(xmp) + psi(xmm)) / (4.0 * hi * hj);
                }
                out.push_back(c.rotation * v);
            }
        }
    }
    return out;
}

// Rank data of the second osculating space span{d psi, d^2 psi} at x.
inline OsculatingReport osculating_report(const Chart& c, const Vec& x) {
    const int d = c.dim_domain;
    const int n = c.dim_ambient;
    OsculatingReport rep;
    rep.x = x;
    Mat first = embed_jacobian(c, x);
    auto second = embed_second_derivatives(c, x);
    Mat all(n, d + static_cast<int>(second.size()));
    all.leftCols(d) = first;
    for (std::size_t k = 0; k < second.size(); ++k) all.col(d + static_cast<int>(k)) = second[k];
    rep.tangent_rank = numeric_rank(first);
    rep.osculating_rank = numeric_rank(all);
    if (c.is_graph() && n - d == 1) {
        auto h = hessian(c, x);
        rep.hessian_min_singular_value = smallest_singular_value(h[0]);
    }
    return rep;
}

// Inflection test for hypersurface charts via the second fundamental form
// along the unit normal (this realizes the J = 0 gauge without asking the
// caller to pre-rotate the chart).
inline bool is_inflection(const Chart& c, const Vec& x, double tol) {
    if (c.dim_ambient - c.dim_domain != 1)
        throw NotAHypersurface("inflection is defined for hypersurface charts");
    const int d = c.dim_domain;
    Vec nrm = normal_frame(c, x).col(0);
    auto second = embed_second_derivatives(c, x);
    Mat ii(d, d);
    int idx = 0;
    for (int i = 0; i < d; ++i)
        for (int j = i; j < d; ++j) {
            double v = nrm.dot(second[idx++]);
            ii(i, j) = v;
            ii(j, i) = v;
        }
    return smallest_singular_value(ii) < tol;
}

// Max deviation of the graph map from the chord between the segment's
// endpoint values; 0 <=> numerically linear along the segment.
inline double nonlinearity_probe(const Chart& c, const Vec& a, const Vec& b,
                                 int samples) {
    if (samples < 3) throw ConfigError("nonlinearity probe needs >= 3 samples");
    detail::check_domain(c, a);
    detail::check_domain(c, b);
    auto value = [&](const Vec& x) {
        return c.is_graph() ? detail::graph_value(c, x) : c.param_map(x);
    };
    const Vec fa = value(a);
    const Vec fb = value(b);
    double dev = 0.0;
    for (int k = 0; k < samples; ++k) {
        const double t = static_cast<double>(k) / (samples - 1);
        Vec x = (1.0 - t) * a + t * b;
        Vec chord = (1.0 - t) * fa + t * fb;
        dev = std::max(dev, (value(x) - chord).norm());
    }
    return dev;
}

}  // namespace codlab
