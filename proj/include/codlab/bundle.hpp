#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "codlab/manifold.hpp"
#include "codlab/sampling.hpp"

namespace codlab {

// ---------------------------------------------------------------------------
// FramedBundle: a k-plane field over a chart, given by a frame evaluator
// whose column span is the fiber. Frames are orthonormalized on evaluation,
// so callers may supply any full-column-rank matrix field.
// ---------------------------------------------------------------------------

enum class BundleKind { Tangent, Normal, Custom };

struct FramedBundle {
    Chart base;
    int fiber_dim = 1;
    std::function<Mat(const Vec&)> raw_frame;  // x (chart coords) -> n x k
    BundleKind kind = BundleKind::Custom;
    std::string label;

    Mat frame(const Vec& x) const {
        Mat a = raw_frame(x);
        if (a.rows() != base.dim_ambient || a.cols() != fiber_dim)
            throw DimensionMismatch("frame evaluator returned wrong shape");
        if (numeric_rank(a) < fiber_dim)
            throw NotADistribution("frame lost column rank");
        return orthonormalize(a);
    }
};

inline FramedBundle make_tangent_bundle(Chart c) {
    FramedBundle b;
    b.fiber_dim = c.dim_domain;
    b.kind = BundleKind::Tangent;
    b.base = std::move(c);
    b.raw_frame = [chart = b.base](const Vec& x) { return embed_jacobian(chart, x); };
    return b;
}

inline FramedBundle make_normal_bundle(Chart c) {
    FramedBundle b;
    b.fiber_dim = c.dim_ambient - c.dim_domain;
    b.kind = BundleKind::Normal;
    b.base = std::move(c);
    b.raw_frame = [chart = b.base](const Vec& x) { return normal_frame(chart, x); };
    return b;
}

inline FramedBundle make_custom_bundle(Chart c, int k,
                                       std::function<Mat(const Vec&)> frame,
                                       std::string label = {}) {
    if (k < 1 || k > c.dim_ambient)
        throw DimensionMismatch("fiber dimension out of range");
    FramedBundle b;
    b.base = std::move(c);
    b.fiber_dim = k;
    b.raw_frame = std::move(frame);
    b.label = std::move(label);
    return b;
}

// dim(fiber ∩ tangent) at x, and whether it is the generic (minimal) value.
inline std::pair<int, bool> general_position_at(const FramedBundle& b, const Vec& x) {
    const int n = b.base.dim_ambient;
    const int d = b.base.dim_domain;
    const int k = b.fiber_dim;
    Mat t = tangent_frame(b.base, x);
    Mat a = b.frame(x);
    Mat cat(n, k + d);
    cat.leftCols(k) = a;
    cat.rightCols(d) = t;
    const int inter = k + d - numeric_rank(cat);
    const int generic_dim = std::max(k + d - n, 0);
    return {inter, inter == generic_dim};
}

// true iff span A(x) + span V = R^n at every grid sample.
inline bool transverse_to(const FramedBundle& b, const Mat& v,
                          const std::vector<Vec>& sample_grid) {
    const int n = b.base.dim_ambient;
    if (v.rows() != n || v.cols() != n - b.fiber_dim)
        throw DimensionMismatch("complementary subspace has wrong dimensions");
    for (const Vec& x : sample_grid) {
        Mat cat(n, b.fiber_dim + v.cols());
        cat.leftCols(b.fiber_dim) = b.frame(x);
        cat.rightCols(v.cols()) = v;
        if (numeric_rank(cat) < n) return false;
    }
    return true;
}

// Norm of the normal component of D_X X at x, for a tangent line field X.
// Zero iff the field's integral curve osculates the manifold at embed(x).
inline double osculation_defect(const FramedBundle& b, const Vec& x) {
    if (b.fiber_dim != 1)
        throw NotADistribution("osculation defect needs a line distribution");
    auto [inter, generic] = general_position_at(b, x);
    (void)generic;
    if (inter != 1)
        throw NotADistribution("fiber direction is not tangent to the base");

    // Ambient unit field along the chart: X(u) = frame(u). Differentiate the
    // ambient field along its own direction by one FD step in chart
    // coordinates: pick du with J_embed(x) du = X(x) (least squares).
    const Mat j = embed_jacobian(b.base, x);
    const Vec ambient_x = b.frame(x).col(0);
    Vec du = j.colPivHouseholderQr().solve(ambient_x);
    const double h = fd_step(x.norm());
    Vec xp = x + h * du;
    Vec xm = x - h * du;
    if (!b.base.domain.contains(xp) || !b.base.domain.contains(xm))
        throw DomainViolation("finite-difference stencil exits domain");
    // Keep signs coherent: orthonormalization fixes sign per evaluation, so
    // align neighbors with the center direction before differencing.
    Vec fp = b.frame(xp).col(0);
    Vec fm = b.frame(xm).col(0);
    if (fp.dot(ambient_x) < 0) fp = -fp;
    if (fm.dot(ambient_x) < 0) fm = -fm;
    Vec dxx = (fp - fm) / (2.0 * h);
    Mat nrm = normal_frame(b.base, x);
    return (nrm.transpose() * dxx).norm();
}

// ---------------------------------------------------------------------------
// Sections and deformations along line bundles
// ---------------------------------------------------------------------------

struct Section {
    FramedBundle bundle;  // k = 1
    std::function<double(const Vec&)> coefficient;

    Vec vector(const Vec& x) const { return coefficient(x) * bundle.frame(x).col(0); }
};

// rho(u) = exp(1 - 1/(1 - |u|^2)) on the open unit ball, 0 outside; smooth,
// rho(0) = 1, grad rho(0) = 0.
inline double bump(double r2) {
    if (r2 >= 1.0) return 0.0;
    return std::exp(1.0 - 1.0 / (1.0 - r2));
}

inline Section bump_section(FramedBundle b, Vec center, double radius, double t) {
    if (b.fiber_dim != 1) throw NotADistribution("sections need a line bundle");
    if (!(radius > 0)) throw DomainViolation("bump radius must be positive");
    for (int i = 0; i < center.size(); ++i) {
        if (!(center[i] - radius > b.base.domain.lo[i] &&
              center[i] + radius < b.base.domain.hi[i]))
            throw DomainViolation("bump ball exits chart domain");
    }
    Section s;
    s.bundle = std::move(b);
    s.coefficient = [center = std::move(center), radius, t](const Vec& x) {
        return t * bump(((x - center) / radius).squaredNorm());
    };
    return s;
}

struct Deformation {
    Chart chart;
    Section section;
    std::function<Vec(const Vec&)> deformed_map;
    bool jacobian_ok = false;
    double sup_displacement = 0.0;
};

inline Deformation deform(const Chart& chart, const Section& section,
                          int grid_samples = 0) {
    const int d = chart.dim_domain;
    if (grid_samples <= 0) {
        grid_samples = 1;
        for (int i = 0; i < d; ++i) grid_samples *= 32;
        grid_samples = std::min(grid_samples, 4096);
    }
    Deformation def;
    def.chart = chart;
    def.section = section;
    def.deformed_map = [chart, section](const Vec& x) -> Vec {
        return embed(chart, x) + section.vector(x);
    };

    bool ok = true;
    double sup = 0.0;
    for (int g = 0; g < grid_samples; ++g) {
        Vec u = unit_sample(SamplerKind::Grid, 0, g, d,
                            static_cast<std::uint64_t>(grid_samples));
        Vec x = chart.domain.map_unit(u);
        sup = std::max(sup, section.vector(x).norm());
        Mat j(chart.dim_ambient, d);
        for (int i = 0; i < d; ++i) {
            const double h = fd_step(x[i]);
            Vec xp = x, xm = x;
            xp[i] += h;
            xm[i] -= h;
            if (!chart.domain.contains(xp) || !chart.domain.contains(xm)) {
                xp = x;
                xm = x;
                xp[i] += h / 2;
                xm[i] -= h / 2;
            }
            j.col(i) = (def.deformed_map(xp) - def.deformed_map(xm)) /
                       (xp[i] - xm[i]);
        }
        if (numeric_rank(j) < d) ok = false;
        // Rank alone misses folds of large tangential deformations: a single
        // Jacobian column only loses numeric rank at an exact critical grid
        // point. The deformation is a continuous path from the identity, so
        // an orientation flip relative to the undeformed Jacobian means the
        // rank dropped somewhere between samples.
        if (ok && (pseudoinverse(embed_jacobian(chart, x)) * j).determinant() <= 0.0)
            ok = false;
    }
    def.jacobian_ok = ok;
    def.sup_displacement = sup;
    return def;
}

}  // namespace codlab
