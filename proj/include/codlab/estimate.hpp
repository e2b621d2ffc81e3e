#pragma once

#include <bit>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "codlab/codiagonal.hpp"

namespace codlab {

using nlohmann::json;

// ---------------------------------------------------------------------------
// GridOccupancy: an axis-aligned box cut into half-open delta-cells with an
// occupancy bitset. The measurement substrate for coverage and Lebesgue
// lower-bound estimates.
// ---------------------------------------------------------------------------

struct GridOccupancy {
    Box box;
    double cell = 0.0;
    std::vector<std::uint64_t> counts;  // cells per axis
    std::vector<std::uint64_t> bits;
    std::uint64_t occupied_count = 0;
    std::uint64_t overflow = 0;  // points outside the box, ignored
    std::uint64_t total_cells = 0;

    GridOccupancy() = default;
    GridOccupancy(Box b, double delta) : box(std::move(b)), cell(delta) {
        if (!(delta > 0)) throw BadGrid("cell size must be positive");
        total_cells = 1;
        for (int i = 0; i < box.dim(); ++i) {
            auto c = static_cast<std::uint64_t>(
                std::ceil((box.hi[i] - box.lo[i]) / delta - 1e-12));
            if (c < 1) c = 1;
            counts.push_back(c);
            if (total_cells > (1ULL << 32) / c)
                throw BadGrid("occupancy grid too large; use box counting");
            total_cells *= c;
        }
        bits.assign((total_cells + 63) / 64, 0);
    }

    // Linear cell index, or nullopt if the point is outside the box.
    std::optional<std::uint64_t> cell_index(const double* q) const {
        std::uint64_t idx = 0;
        for (int i = 0; i < box.dim(); ++i) {
            const double t = (q[i] - box.lo[i]) / cell;
            if (!(t >= 0.0)) return std::nullopt;
            const auto k = static_cast<std::uint64_t>(t);
            if (k >= counts[i]) return std::nullopt;
            idx = idx * counts[i] + k;
        }
        return idx;
    }

    void insert(const double* q) {
        auto idx = cell_index(q);
        if (!idx) {
            ++overflow;
            return;
        }
        std::uint64_t& word = bits[*idx / 64];
        const std::uint64_t mask = 1ULL << (*idx % 64);
        if (!(word & mask)) {
            word |= mask;
            ++occupied_count;
        }
    }

    void insert(const Vec& q) { insert(q.data()); }

    // Bitwise OR merge of an occupancy over the same (box, cell).
    void merge(const GridOccupancy& other) {
        if (other.counts != counts || other.cell != cell)
            throw BadGrid("merging occupancies over different grids");
        occupied_count = 0;
        for (std::size_t w = 0; w < bits.size(); ++w) {
            bits[w] |= other.bits[w];
            occupied_count += static_cast<std::uint64_t>(std::popcount(bits[w]));
        }
        overflow += other.overflow;
    }
};

inline GridOccupancy grid_occupancy(const PointCloud& cloud, Box box, double delta) {
    GridOccupancy occ(std::move(box), delta);
    if (cloud.n != occ.box.dim())
        throw DimensionMismatch("cloud and occupancy box dimensions differ");
    const std::uint64_t m = cloud.size();
    for (std::uint64_t i = 0; i < m; ++i) occ.insert(cloud.data.data() + i * cloud.n);
    return occ;
}

inline double coverage_fraction(const GridOccupancy& occ) {
    return static_cast<double>(occ.occupied_count) /
           static_cast<double>(occ.total_cells);
}

struct MeasureEstimate {
    double value = 0.0;
    std::string caveat = "occupancy-based, not a verified lower bound";
};

inline MeasureEstimate measure_lower_bound(const GridOccupancy& occ) {
    MeasureEstimate m;
    m.value = static_cast<double>(occ.occupied_count) *
              std::pow(occ.cell, occ.box.dim());
    return m;
}

// ---------------------------------------------------------------------------
// Box-counting dimension
// ---------------------------------------------------------------------------

struct DimensionEstimate {
    std::vector<double> scales;        // delta ladder (absolute edge lengths)
    std::vector<std::uint64_t> counts; // N(delta), saturated where kept
    double slope = 0.0;                // LSQ slope of log N vs log(1/delta)
    double r2 = 0.0;
    std::vector<double> scale_window;  // scales actually used for the fit
};

struct BoxCountConfig {
    // Scale ladder as fractions of the box edge; each entry should halve.
    std::vector<double> scale_fractions = {1.0 / 8,  1.0 / 16,  1.0 / 32, 1.0 / 64,
                                           1.0 / 128, 1.0 / 256, 1.0 / 512};
    std::uint64_t initial_samples = 1ULL << 14;
    std::uint64_t max_samples = 1ULL << 22;
    double starvation_tol = 0.02;  // relative N growth under sample doubling
    std::uint64_t min_count = 100;
};

namespace detail {

// Sparse cell counter for one scale: hashes linearized cell indices, so fine
// ladders in R^4 stay cheap.
struct SparseCells {
    const Box* box;
    double delta;
    std::vector<std::uint64_t> counts;
    std::unordered_set<std::uint64_t> cells;

    SparseCells(const Box& b, double d) : box(&b), delta(d) {
        for (int i = 0; i < b.dim(); ++i) {
            auto c = static_cast<std::uint64_t>(
                std::ceil((b.hi[i] - b.lo[i]) / d - 1e-12));
            counts.push_back(std::max<std::uint64_t>(c, 1));
        }
    }

    void insert(const Vec& q) {
        std::uint64_t idx = 0;
        for (int i = 0; i < box->dim(); ++i) {
            const double t = (q[i] - box->lo[i]) / delta;
            if (!(t >= 0.0)) return;
            const auto k = static_cast<std::uint64_t>(t);
            if (k >= counts[i]) return;
            idx = idx * counts[i] + k;
        }
        cells.insert(idx);
    }
};

inline std::pair<double, double> least_squares_line(const std::vector<double>& xs,
                                                    const std::vector<double>& ys) {
    const auto n = static_cast<double>(xs.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
        syy += ys[i] * ys[i];
    }
    const double vx = n * sxx - sx * sx;
    const double cov = n * sxy - sx * sy;
    const double vy = n * syy - sy * sy;
    const double slope = cov / vx;
    const double r2 = vy > 0 ? (cov * cov) / (vx * vy) : 1.0;
    return {slope, r2};
}

}  // namespace detail

// Slope of log N(delta) vs log(1/delta) over the scales where N(delta) has
// saturated. The generator must be a pure function of the global sample
// index; samples are added in doubling batches and a scale is kept only once
// doubling the sample count changes its N(delta) by at most starvation_tol.
inline DimensionEstimate box_counting_dimension(
    const std::function<Vec(std::uint64_t)>& generator, const Box& box,
    const BoxCountConfig& config = {}) {
    if (config.scale_fractions.size() < 4)
        throw BadGrid("need at least 4 scales");
    for (std::size_t k = 1; k < config.scale_fractions.size(); ++k) {
        const double ratio = config.scale_fractions[k - 1] / config.scale_fractions[k];
        if (std::abs(ratio - 2.0) > 1e-9)
            throw BadGrid("scale ladder must halve at each step");
    }
    const double edge = box.extent().maxCoeff();
    const std::size_t ns = config.scale_fractions.size();
    std::vector<detail::SparseCells> cells;
    cells.reserve(ns);
    for (double f : config.scale_fractions) cells.emplace_back(box, f * edge);

    std::vector<std::uint64_t> half_counts(ns, 0);  // N at half the samples
    std::uint64_t generated = 0;
    // Ensure at least one doubling happens so starvation is measurable even
    // when the sample budget is small (e.g. fixed clouds).
    std::uint64_t target = std::max<std::uint64_t>(
        1, std::min(config.initial_samples, config.max_samples / 2));
    while (true) {
        for (std::uint64_t i = generated; i < target; ++i) {
            Vec p = generator(i);
            for (auto& c : cells) c.insert(p);
        }
        generated = target;
        if (generated >= config.max_samples) break;
        bool all_stable = true;
        for (std::size_t k = 0; k < ns; ++k) {
            const auto now = static_cast<std::uint64_t>(cells[k].cells.size());
            if (now >= config.min_count && half_counts[k] > 0) {
                const double growth =
                    static_cast<double>(now - half_counts[k]) / static_cast<double>(now);
                if (growth > config.starvation_tol) all_stable = false;
            } else if (now >= config.min_count) {
                all_stable = false;
            }
        }
        if (all_stable) break;
        for (std::size_t k = 0; k < ns; ++k)
            half_counts[k] = cells[k].cells.size();
        target = std::min(config.max_samples, generated * 2);
    }

    DimensionEstimate est;
    std::vector<double> xs, ys;
    for (std::size_t k = 0; k < ns; ++k) {
        const double delta = config.scale_fractions[k] * edge;
        const auto n_k = static_cast<std::uint64_t>(cells[k].cells.size());
        est.scales.push_back(delta);
        est.counts.push_back(n_k);
        if (n_k < config.min_count) continue;
        const double growth =
            half_counts[k] > 0
                ? static_cast<double>(n_k - half_counts[k]) / static_cast<double>(n_k)
                : 1.0;
        if (growth > config.starvation_tol) continue;  // sample-starved scale
        est.scale_window.push_back(delta);
        xs.push_back(std::log(1.0 / delta));
        ys.push_back(std::log(static_cast<double>(n_k)));
    }
    if (xs.size() < 2)
        throw InsufficientSamples("no stable scale window for box counting");
    auto [slope, r2] = detail::least_squares_line(xs, ys);
    est.slope = slope;
    est.r2 = r2;
    return est;
}

inline DimensionEstimate box_counting_dimension(const PointCloud& cloud,
                                                const Box& box,
                                                BoxCountConfig config = {}) {
    const std::uint64_t m = cloud.size();
    if (m == 0) throw InsufficientSamples("empty cloud");
    config.max_samples = std::min(config.max_samples, m);
    config.initial_samples = std::min(config.initial_samples, m);
    return box_counting_dimension(
        [&cloud](std::uint64_t i) { return Vec(cloud.point(i)); }, box, config);
}

// ---------------------------------------------------------------------------
// Constructive interior-ball certificate
// ---------------------------------------------------------------------------

struct BallCertificate {
    Vec x0;
    Vec y0;
    Mat jacobian;
    double lambda = 0.0;
    double epsilon = 0.0;
    std::vector<Vec> tested_targets;
    std::uint64_t success_count = 0;
    double residual_max = 0.0;
};

struct CertificateConfig {
    double max_eps = 1.0;
    int shell_samples = 200;
    int target_count = 50;
    int max_iterations = 200;
    int bisection_iterations = 40;
    std::uint64_t seed = 0;
};

namespace detail {

inline Vec gaussian_direction(std::uint64_t seed, std::uint64_t index, int dim) {
    Vec g(dim);
    for (int a = 0; a < dim; ++a) {
        double u1 = std::max(uniform01(seed, index, 2 * a), 1e-16);
        double u2 = uniform01(seed, index, 2 * a + 1);
        g[a] = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
    }
    if (g.norm() < 1e-12) g = Vec::Unit(dim, 0);
    return g.normalized();
}

inline Mat fd_jacobian(const std::function<Vec(const Vec&)>& h, const Vec& x, int n) {
    const int m = static_cast<int>(x.size());
    Mat j(n, m);
    for (int i = 0; i < m; ++i) {
        const double step = fd_step(x[i]);
        Vec xp = x, xm = x;
        xp[i] += step;
        xm[i] -= step;
        j.col(i) = (h(xp) - h(xm)) / (2.0 * step);
    }
    return j;
}

}  // namespace detail

// Empirical realization of the Brouwer interior-ball argument: lambda from
// the pseudoinverse norm, epsilon from a bisected differentiability-residual
// test, then the fixed-point iteration Psi_y(x) = x - J^+ (h(x) - y) for a
// deterministic family of targets in the closed lambda*epsilon ball.
inline BallCertificate interior_certificate(const std::function<Vec(const Vec&)>& h,
                                            const Vec& x0,
                                            const CertificateConfig& config = {}) {
    BallCertificate cert;
    cert.x0 = x0;
    cert.y0 = h(x0);
    const int m = static_cast<int>(x0.size());
    const int n = static_cast<int>(cert.y0.size());
    if (m < n) throw DimensionMismatch("need domain dimension >= range dimension");
    cert.jacobian = detail::fd_jacobian(h, x0, n);
    if (numeric_rank(cert.jacobian) < n)
        throw FullRankFailure("differential at x0 is rank deficient");
    const Mat jplus = pseudoinverse(cert.jacobian);
    cert.lambda = 1.0 / (2.0 * operator_norm(jplus));

    // Residual test on a shell family of radius eps: the linearization must
    // beat lambda * |x - x0| strictly at every probe.
    auto residual_ok = [&](double eps) {
        for (int s = 0; s < config.shell_samples; ++s) {
            const double frac = 1.0 - 0.75 * (s % 4) / 3.0;  // radii eps..eps/4
            Vec dir = detail::gaussian_direction(config.seed ^ 0x5E11ULL, s, m);
            Vec x = x0 + (eps * frac) * dir;
            const double lin =
                (h(x) - cert.y0 - cert.jacobian * (x - x0)).norm();
            if (!(lin < cert.lambda * (x - x0).norm())) return false;
        }
        return true;
    };

    const double eps_min = 1e-6;
    if (!residual_ok(eps_min))
        throw ResidualTestFailed("no epsilon satisfies the residual test");
    double lo = eps_min, hi = std::max(config.max_eps, eps_min);
    if (residual_ok(hi)) {
        cert.epsilon = hi;
    } else {
        for (int it = 0; it < config.bisection_iterations; ++it) {
            const double mid = 0.5 * (lo + hi);
            (residual_ok(mid) ? lo : hi) = mid;
        }
        cert.epsilon = lo;
    }

    // Deterministic targets filling the closed lambda*eps ball, boundary
    // included (radius profile ((j+1)/T)^(1/n) equidistributes by volume).
    const double rmax = cert.lambda * cert.epsilon;
    for (int j = 0; j < config.target_count; ++j) {
        const double r =
            rmax * std::pow((j + 1.0) / config.target_count, 1.0 / n);
        Vec dir = detail::gaussian_direction(config.seed ^ 0x7A26ULL, j, n);
        cert.tested_targets.push_back(cert.y0 + r * dir);
    }

    const double jnorm = operator_norm(cert.jacobian);
    for (const Vec& y : cert.tested_targets) {
        const double res_tol = 1e-9 * (1.0 + (y - cert.y0).norm());
        Vec x = x0;
        Vec hx = cert.y0;
        bool stalled = false;
        for (int it = 0; it < config.max_iterations; ++it) {
            Vec step = jplus * (hx - y);
            x -= step;
            hx = h(x);
            if ((hx - y).norm() <= 1e-12 * (1.0 + y.norm())) break;
            if (step.norm() < 1e-12 * (1.0 + x.norm()) &&
                (hx - y).norm() > 1e-9) {
                stalled = true;
                break;
            }
        }
        if (stalled || (hx - y).norm() > res_tol) {
            // Damped least-squares fallback on |h(x) - y|^2.
            x = x0;
            hx = cert.y0;
            double mu = 1e-3;
            for (int it = 0; it < config.max_iterations; ++it) {
                Mat j = detail::fd_jacobian(h, x, n);
                Mat a = j.transpose() * j + mu * Mat::Identity(m, m);
                Vec step = a.ldlt().solve(j.transpose() * (y - hx));
                Vec xn = x + step;
                Vec hn = h(xn);
                if ((hn - y).norm() < (hx - y).norm()) {
                    x = xn;
                    hx = hn;
                    mu = std::max(mu * 0.3, 1e-12);
                } else {
                    mu *= 10.0;
                    if (mu > 1e12) break;
                }
                if ((hx - y).norm() <= 1e-13 * (1.0 + y.norm())) break;
            }
        }
        const double res = (hx - y).norm();
        cert.residual_max = std::max(cert.residual_max, res);
        if (res > res_tol) continue;
        // Two-sided Lipschitz inequality for the solved target.
        const double dx = (x - x0).norm();
        const double dy = (y - cert.y0).norm();
        const double tol_cert = 1e-8 * (1.0 + dy);
        if (cert.lambda * dx <= dy + tol_cert && dy <= (jnorm + cert.lambda) * dx + tol_cert)
            ++cert.success_count;
    }
    return cert;
}

// ---------------------------------------------------------------------------
// JSON serialization (field names exactly as in the type definitions)
// ---------------------------------------------------------------------------

inline json to_json(const DimensionEstimate& e) {
    return json{{"scales", e.scales},
                {"counts", e.counts},
                {"slope", e.slope},
                {"r2", e.r2},
                {"scale_window", e.scale_window}};
}

inline json to_json(const Vec& v) {
    return json(std::vector<double>(v.data(), v.data() + v.size()));
}

inline json to_json(const Mat& m) {
    json rows = json::array();
    for (int r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(row);
    }
    return rows;
}

inline json to_json(const BallCertificate& c) {
    json targets = json::array();
    for (const Vec& y : c.tested_targets) targets.push_back(to_json(y));
    return json{{"x0", to_json(c.x0)},
                {"y0", to_json(c.y0)},
                {"jacobian", to_json(c.jacobian)},
                {"lambda", c.lambda},
                {"epsilon", c.epsilon},
                {"tested_targets", targets},
                {"success_count", c.success_count},
                {"residual_max", c.residual_max}};
}

}  // namespace codlab
