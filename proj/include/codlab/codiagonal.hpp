#pragma once

#include <algorithm>
#include <charconv>
#include <cstring>
#include <fstream>
#include <functional>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "codlab/bundle.hpp"

namespace codlab {

// ---------------------------------------------------------------------------
// PointCloud: a finite sample of a codiagonal image, with its generating
// spec so clouds can be regenerated bit-identically.
// ---------------------------------------------------------------------------

struct PointCloud {
    int n = 0;                 // ambient dimension
    std::vector<double> data;  // row-major, n doubles per point
    SweepSpec spec;            // generating spec (empty for loaded clouds)
    std::string generator;     // label of the producing map

    std::uint64_t size() const {
        return n ? data.size() / static_cast<std::uint64_t>(n) : 0;
    }

    Eigen::Map<const Vec> point(std::uint64_t i) const {
        return Eigen::Map<const Vec>(data.data() + i * n, n);
    }

    void set_point(std::uint64_t i, const Vec& p) {
        std::memcpy(data.data() + i * n, p.data(), sizeof(double) * n);
    }
};

namespace detail {

// Deterministic parallel fill: the work is partitioned by global index, so
// the result is independent of the thread count.
inline void parallel_for(std::uint64_t count, int threads,
                         const std::function<void(std::uint64_t, std::uint64_t)>& body) {
    if (threads < 1) threads = 1;
    if (threads == 1 || count < 1024) {
        body(0, count);
        return;
    }
    std::vector<std::thread> pool;
    const std::uint64_t chunk = (count + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
        const std::uint64_t lo = t * chunk;
        const std::uint64_t hi = std::min(count, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([&body, lo, hi] { body(lo, hi); });
    }
    for (auto& th : pool) th.join();
}

inline PointCloud fill_cloud(int n, const SweepSpec& spec, const std::string& label,
                             const std::function<Vec(const Vec&, const Vec&)>& map,
                             int threads) {
    PointCloud cloud;
    cloud.n = n;
    cloud.spec = spec;
    cloud.generator = label;
    cloud.data.resize(spec.count * static_cast<std::uint64_t>(n));
    parallel_for(spec.count, threads, [&](std::uint64_t lo, std::uint64_t hi) {
        for (std::uint64_t i = lo; i < hi; ++i) {
            auto [x, xi] = spec.sample(i);
            cloud.set_point(i, map(x, xi));
        }
    });
    return cloud;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Section transform and lifted section map (graph gauge)
// ---------------------------------------------------------------------------

// phi_f^a(x) = f(x) + (J_x f)(a - x): the value at a of the tangent plane of
// the graph of f based at x.
inline Vec section_transform(const Chart& chart, const Vec& a, const Vec& x) {
    if (!chart.is_graph())
        throw DerivativeUnavailable("section transform needs a graph-gauge chart");
    return chart.graph_map(x) + jacobian(chart, x) * (a - x);
}

// Phi_f(x, a) = (a, phi_f^a(x)), placed by the chart's rigid motion.
inline Vec lifted_section_map(const Chart& chart, const Vec& x, const Vec& a) {
    const int d = chart.dim_domain;
    Vec p(chart.dim_ambient);
    p.head(d) = a;
    p.tail(chart.dim_ambient - d) = section_transform(chart, a, x);
    return chart.rotation * p + chart.translation;
}

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

// Union of tangent planes. Graph charts use the lifted section map (so the
// first d output coordinates equal the sampled a exactly, before placement);
// parametric charts sample embed(x) + J_embed(x) * xi.
inline PointCloud sweep_tangent(const Chart& chart, const SweepSpec& spec,
                                int threads = 1) {
    if (chart.is_graph()) {
        return detail::fill_cloud(
            chart.dim_ambient, spec, "tangent:" + chart.label,
            [&chart](const Vec& x, const Vec& a) {
                return lifted_section_map(chart, x, a);
            },
            threads);
    }
    return detail::fill_cloud(
        chart.dim_ambient, spec, "tangent:" + chart.label,
        [&chart](const Vec& x, const Vec& xi) -> Vec {
            return embed(chart, x) + embed_jacobian(chart, x) * xi;
        },
        threads);
}

// Union of normal planes. Graph charts use Psi_f(x, b) = (x + (J_x f)^T (f(x) - b), b)
// so that every output q satisfies (q - p) ⟂ T_p with p = (x, f(x));
// parametric charts sample embed(x) + N(x) * b.
inline PointCloud sweep_normal(const Chart& chart, const SweepSpec& spec,
                               int threads = 1) {
    const int d = chart.dim_domain;
    const int n = chart.dim_ambient;
    if (chart.is_graph()) {
        return detail::fill_cloud(
            n, spec, "normal:" + chart.label,
            [&chart, d, n](const Vec& x, const Vec& b) {
                Vec q(n);
                q.head(d) = x + jacobian(chart, x).transpose() *
                                    (chart.graph_map(x) - b);
                q.tail(n - d) = b;
                return Vec(chart.rotation * q + chart.translation);
            },
            threads);
    }
    return detail::fill_cloud(
        n, spec, "normal:" + chart.label,
        [&chart](const Vec& x, const Vec& b) -> Vec {
            return embed(chart, x) + normal_frame(chart, x) * b;
        },
        threads);
}

// Union of affine fibers embed(x) + span A(x), truncated to the fiber box.
inline PointCloud sweep_bundle(const FramedBundle& bundle, const SweepSpec& spec,
                               int threads = 1) {
    return detail::fill_cloud(
        bundle.base.dim_ambient, spec, "bundle:" + bundle.label,
        [&bundle](const Vec& x, const Vec& xi) -> Vec {
            return embed(bundle.base, x) + bundle.frame(x) * xi;
        },
        threads);
}

// ---------------------------------------------------------------------------
// Half-line and projective-line families over the closed unit disk D^n
// ---------------------------------------------------------------------------

namespace detail {

// Map a unit-cube sample to the closed unit ball: scale to [-1,1]^n and pull
// points outside the ball radially onto the sphere. Boundary points are
// legitimate family parameters.
inline Vec cube_to_ball(const Vec& u) {
    Vec x = 2.0 * u - Vec::Ones(u.size());
    const double r = x.norm();
    if (r > 1.0) x /= r;
    return x;
}

// Deterministic boundary probes on S^(n-1).
inline std::vector<Vec> boundary_probes(int n, int count) {
    std::vector<Vec> out;
    out.reserve(count);
    for (int i = 0; i < count; ++i) {
        Vec g(n);
        for (int a = 0; a < n; ++a) {
            // Box-Muller on splitmix streams gives well-spread directions.
            double u1 = uniform01(0x9B0DULL, i, 2 * a);
            double u2 = uniform01(0x9B0DULL, i, 2 * a + 1);
            u1 = std::max(u1, 1e-16);
            g[a] = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
        }
        if (g.norm() < 1e-12) g = Vec::Unit(n, 0);
        out.push_back(g.normalized());
    }
    return out;
}

}  // namespace detail

// Cloud of gamma_x(t) = (t, t*alpha(x) + beta(x)) in R^(n+1) over x in D^n.
// alpha must restrict to the identity on the boundary sphere.
inline PointCloud halfline_family(const std::function<Vec(const Vec&)>& alpha,
                                  const std::function<Vec(const Vec&)>& beta,
                                  int n, const SweepSpec& spec, int threads = 1) {
    if (spec.fiber.box.dim() != 1 || !(spec.fiber.box.lo[0] > 0.0))
        throw ConfigError("half-line t-range must be a subset of (0, inf)");
    for (const Vec& s : detail::boundary_probes(n, 64 * n)) {
        if ((alpha(s) - s).norm() > 1e-9)
            throw BoundaryConditionViolated("alpha is not the identity on the boundary");
    }
    return detail::fill_cloud(
        n + 1, spec, "halfline",
        [&alpha, &beta, n](const Vec& u, const Vec& t) {
            Vec x = detail::cube_to_ball(u);
            Vec q(n + 1);
            q[0] = t[0];
            q.tail(n) = t[0] * alpha(x) + beta(x);
            return q;
        },
        threads);
}

// Cloud of ell_x(t) = (t + f(x), t*beta(x) + x) in R^(n+1) over x in D^n.
// f must be constant on the boundary sphere.
inline PointCloud projective_line_family(const std::function<double(const Vec&)>& f,
                                         const std::function<Vec(const Vec&)>& beta,
                                         int n, const SweepSpec& spec,
                                         int threads = 1) {
    if (spec.fiber.box.dim() != 1)
        throw ConfigError("projective-line t-range must be one-dimensional");
    auto probes = detail::boundary_probes(n, 64 * n);
    double fmin = f(probes[0]), fmax = fmin;
    for (const Vec& s : probes) {
        const double v = f(s);
        fmin = std::min(fmin, v);
        fmax = std::max(fmax, v);
    }
    if (fmax - fmin > 1e-9)
        throw BoundaryConditionViolated("f is not constant on the boundary");
    return detail::fill_cloud(
        n + 1, spec, "projective-line",
        [&f, &beta, n](const Vec& u, const Vec& t) {
            Vec x = detail::cube_to_ball(u);
            Vec q(n + 1);
            q[0] = t[0] + f(x);
            q.tail(n) = t[0] * beta(x) + x;
            return q;
        },
        threads);
}

// Distance from q to the line {base + s * direction}.
inline double line_distance(const Vec& q, const Vec& base, const Vec& direction) {
    if (std::abs(direction.norm() - 1.0) > 1e-12)
        throw BadDirection("direction must be a unit vector");
    Vec w = q - base;
    return (w - w.dot(direction) * direction).norm();
}

// ---------------------------------------------------------------------------
// Serialization: CSV (shortest round-trip floats) and binary "CDLB1"
// ---------------------------------------------------------------------------

namespace detail {

inline std::string shortest_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

}  // namespace detail

inline void write_csv(const PointCloud& cloud, std::ostream& os) {
    for (int i = 0; i < cloud.n; ++i) os << (i ? ",x" : "x") << i;
    os << '\n';
    const std::uint64_t m = cloud.size();
    for (std::uint64_t r = 0; r < m; ++r) {
        for (int i = 0; i < cloud.n; ++i) {
            if (i) os << ',';
            os << detail::shortest_double(cloud.data[r * cloud.n + i]);
        }
        os << '\n';
    }
}

inline PointCloud read_csv(std::istream& is) {
    PointCloud cloud;
    std::string line;
    if (!std::getline(is, line)) throw ConfigError("empty CSV");
    cloud.n = 1 + static_cast<int>(std::count(line.begin(), line.end(), ','));
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const char* p = line.data();
        const char* end = p + line.size();
        for (int i = 0; i < cloud.n; ++i) {
            double v = 0.0;
            auto res = std::from_chars(p, end, v);
            if (res.ec != std::errc{}) throw ConfigError("malformed CSV row");
            cloud.data.push_back(v);
            p = res.ptr;
            if (p < end && *p == ',') ++p;
        }
    }
    cloud.generator = "csv";
    return cloud;
}

inline void write_binary(const PointCloud& cloud, std::ostream& os) {
    os.write("CDLB1", 5);
    const std::uint32_t n = static_cast<std::uint32_t>(cloud.n);
    const std::uint64_t count = cloud.size();
    os.write(reinterpret_cast<const char*>(&n), 4);
    os.write(reinterpret_cast<const char*>(&count), 8);
    os.write(reinterpret_cast<const char*>(cloud.data.data()),
             static_cast<std::streamsize>(cloud.data.size() * sizeof(double)));
}

inline PointCloud read_binary(std::istream& is) {
    char magic[5];
    is.read(magic, 5);
    if (!is || std::memcmp(magic, "CDLB1", 5) != 0)
        throw ConfigError("bad binary cloud magic");
    std::uint32_t n = 0;
    std::uint64_t count = 0;
    is.read(reinterpret_cast<char*>(&n), 4);
    is.read(reinterpret_cast<char*>(&count), 8);
    PointCloud cloud;
    cloud.n = static_cast<int>(n);
    cloud.data.resize(count * n);
    is.read(reinterpret_cast<char*>(cloud.data.data()),
            static_cast<std::streamsize>(cloud.data.size() * sizeof(double)));
    if (!is) throw ConfigError("truncated binary cloud");
    cloud.generator = "binary";
    return cloud;
}

inline PointCloud load_cloud(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot open cloud file: " + path);
    char magic[5] = {};
    f.read(magic, 5);
    f.seekg(0);
    if (std::memcmp(magic, "CDLB1", 5) == 0) return read_binary(f);
    return read_csv(f);
}

}  // namespace codlab
