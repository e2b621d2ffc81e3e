#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace codlab {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DomainViolation : Error { using Error::Error; };
struct DerivativeUnavailable : Error { using Error::Error; };
struct NotAHypersurface : Error { using Error::Error; };
struct DimensionMismatch : Error { using Error::Error; };
struct NotADistribution : Error { using Error::Error; };
struct BoundaryConditionViolated : Error { using Error::Error; };
struct BadDirection : Error { using Error::Error; };
struct BadGrid : Error { using Error::Error; };
struct InsufficientSamples : Error { using Error::Error; };
struct FullRankFailure : Error { using Error::Error; };
struct ResidualTestFailed : Error { using Error::Error; };
struct NoSuchField : Error { using Error::Error; };
struct SingularTransform : Error { using Error::Error; };
struct NotStrictlyConvex : Error { using Error::Error; };
struct DegenerateRuling : Error { using Error::Error; };
struct IntegrationUnstable : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };

// ---------------------------------------------------------------------------
// Tolerances
// ---------------------------------------------------------------------------

inline constexpr double kMachineEps = std::numeric_limits<double>::epsilon();
inline constexpr double kTolOrth = 1e-9;
inline constexpr double kTolRankRel = 1e-8;
inline const double kPi = 3.14159265358979323846;

// Central-difference step, per coordinate: cbrt(eps) * max(1, |x|).
inline double fd_step(double x) {
    static const double h0 = std::cbrt(kMachineEps);
    return h0 * std::max(1.0, std::abs(x));
}

// Second-derivative stencil step: eps^(1/4) * max(1, |x|).
inline double fd_step2(double x) {
    static const double h0 = std::sqrt(std::sqrt(kMachineEps));
    return h0 * std::max(1.0, std::abs(x));
}

// ---------------------------------------------------------------------------
// Axis-aligned box in R^d (open; boundary points are rejected, not clamped)
// ---------------------------------------------------------------------------

struct Box {
    Vec lo;
    Vec hi;

    Box() = default;
    Box(Vec lo_, Vec hi_) : lo(std::move(lo_)), hi(std::move(hi_)) {
        if (lo.size() != hi.size())
            throw DimensionMismatch("box bounds have mismatched dimensions");
        for (int i = 0; i < lo.size(); ++i)
            if (!(lo[i] < hi[i])) throw BadGrid("degenerate box");
    }

    static Box cube(int d, double lo, double hi) {
        return Box(Vec::Constant(d, lo), Vec::Constant(d, hi));
    }

    // Default chart domain (-pi, pi)^d.
    static Box standard_cube(int d) { return cube(d, -kPi, kPi); }

    int dim() const { return static_cast<int>(lo.size()); }

    bool contains(const Vec& x) const {
        if (x.size() != lo.size()) return false;
        for (int i = 0; i < x.size(); ++i)
            if (!(x[i] > lo[i] && x[i] < hi[i])) return false;
        return true;
    }

    bool contains_interior(const Vec& x, double margin) const {
        for (int i = 0; i < x.size(); ++i)
            if (!(x[i] > lo[i] + margin && x[i] < hi[i] - margin)) return false;
        return true;
    }

    Vec extent() const { return hi - lo; }

    Vec map_unit(const Vec& u) const {
        return lo + u.cwiseProduct(hi - lo);
    }

    double volume() const {
        double v = 1.0;
        for (int i = 0; i < lo.size(); ++i) v *= hi[i] - lo[i];
        return v;
    }
};

// ---------------------------------------------------------------------------
// Deterministic linear algebra helpers
// ---------------------------------------------------------------------------

// Orthonormalize the columns of A with Householder QR, then fix signs so the
// largest-magnitude entry of each column is positive. Reproducible across
// runs and independent of the input column scaling.
inline Mat orthonormalize(const Mat& a) {
    Eigen::HouseholderQR<Mat> qr(a);
    Mat q = qr.householderQ() * Mat::Identity(a.rows(), a.cols());
    for (int j = 0; j < q.cols(); ++j) {
        int imax = 0;
        q.col(j).cwiseAbs().maxCoeff(&imax);
        if (q(imax, j) < 0) q.col(j) = -q.col(j);
    }
    return q;
}

// Orthonormal basis of the orthogonal complement of span(A), A of size n x d
// with full column rank. Returns n x (n - d).
inline Mat orthogonal_complement(const Mat& a) {
    const auto n = a.rows();
    const auto d = a.cols();
    Eigen::HouseholderQR<Mat> qr(a);
    Mat q = qr.householderQ() * Mat::Identity(n, n);
    Mat comp = q.rightCols(n - d);
    for (int j = 0; j < comp.cols(); ++j) {
        int imax = 0;
        comp.col(j).cwiseAbs().maxCoeff(&imax);
        if (comp(imax, j) < 0) comp.col(j) = -comp.col(j);
    }
    return comp;
}

// Numeric rank: singular values below kTolRankRel * sigma_max count as zero.
inline int numeric_rank(const Mat& a) {
    if (a.rows() == 0 || a.cols() == 0) return 0;
    Eigen::JacobiSVD<Mat> svd(a);
    const auto& s = svd.singularValues();
    if (s.size() == 0 || s[0] == 0.0) return 0;
    const double thresh = kTolRankRel * s[0];
    int r = 0;
    for (int i = 0; i < s.size(); ++i)
        if (s[i] > thresh) ++r;
    return r;
}

inline double operator_norm(const Mat& a) {
    Eigen::JacobiSVD<Mat> svd(a);
    return svd.singularValues().size() ? svd.singularValues()[0] : 0.0;
}

inline double smallest_singular_value(const Mat& a) {
    Eigen::JacobiSVD<Mat> svd(a);
    const auto& s = svd.singularValues();
    return s.size() ? s[s.size() - 1] : 0.0;
}

// Moore-Penrose pseudoinverse of a full-rank matrix.
inline Mat pseudoinverse(const Mat& a) {
    Eigen::JacobiSVD<Mat> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& s = svd.singularValues();
    if (s.size() == 0 || s[s.size() - 1] <= kTolRankRel * s[0])
        throw FullRankFailure("pseudoinverse of rank-deficient matrix");
    Vec inv = s.cwiseInverse();
    return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

}  // namespace codlab
