#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "codlab/estimate.hpp"
#include "codlab/gallery.hpp"

namespace codlab {

inline constexpr const char* kLibraryVersion = "0.1.0";

// ---------------------------------------------------------------------------
// Experiment registry: each experiment builds a construction, sweeps it,
// measures the cloud, and evaluates the construction's claims.
// ---------------------------------------------------------------------------

struct ClaimResult {
    std::string name;
    bool pass = false;
    double value = 0.0;
    double threshold = 0.0;
    std::string relation;  // ">=", "<=", "==~"
};

struct ExperimentResult {
    std::string id;
    std::uint64_t seed = 0;
    json params;
    json data = json::object();  // estimates and measured quantities
    std::vector<ClaimResult> claims;
    std::vector<std::pair<std::string, PointCloud>> clouds;

    bool all_pass() const {
        for (const auto& c : claims)
            if (!c.pass) return false;
        return true;
    }

    json to_results_json() const {
        json claims_json = json::array();
        for (const auto& c : claims)
            claims_json.push_back(json{{"name", c.name},
                                       {"pass", c.pass},
                                       {"value", c.value},
                                       {"threshold", c.threshold},
                                       {"relation", c.relation}});
        return json{{"experiment", id},
                    {"seed", seed},
                    {"params", params},
                    {"library_version", kLibraryVersion},
                    {"claims", claims_json},
                    {"data", data}};
    }
};

struct Experiment {
    std::string id;
    std::string description;  // what the experiment demonstrates
    std::string claim_text;   // the checked statement, in plain language
    json defaults;
    std::function<ExperimentResult(const json& params, std::uint64_t seed,
                                   int threads)>
        runner;
};

namespace detail {

inline void add_claim(ExperimentResult& res, const std::string& name,
                      double value, const std::string& relation,
                      double threshold) {
    ClaimResult c;
    c.name = name;
    c.value = value;
    c.threshold = threshold;
    c.relation = relation;
    if (relation == ">=")
        c.pass = value >= threshold;
    else if (relation == "<=")
        c.pass = value <= threshold;
    else
        c.pass = std::abs(value) <= threshold;
    res.claims.push_back(c);
}

inline SweepSpec make_spec(const std::string& source, Box base_box, Box fiber_box,
                           std::uint64_t count, std::uint64_t seed,
                           SamplerKind kind = SamplerKind::LowDiscrepancy) {
    AxisSampler base{kind, std::move(base_box)};
    AxisSampler fiber{kind, std::move(fiber_box)};
    return SweepSpec(source, base, fiber, count, seed);
}

// Tangent sweep of a multi-chart manifold: the budget is split evenly and
// each chart gets a decorrelated seed, so the union cloud is a pure function
// of (manifold, fiber box, count, seed).
inline PointCloud sweep_tangent_manifold(const EmbeddedManifold& m, Box fiber_box,
                                         std::uint64_t count, std::uint64_t seed,
                                         int threads) {
    PointCloud all;
    all.n = m.dim_ambient();
    all.generator = "tangent:manifold";
    const auto per = count / m.charts.size();
    for (std::size_t k = 0; k < m.charts.size(); ++k) {
        const Chart& c = m.charts[k];
        Box base_box = c.domain;
        SweepSpec spec = make_spec("chart" + std::to_string(k), base_box,
                                   fiber_box, per, seed ^ (0xC0FFEEULL + k));
        PointCloud part = sweep_tangent(c, spec, threads);
        all.data.insert(all.data.end(), part.data.begin(), part.data.end());
    }
    return all;
}

inline json occupancy_json(const GridOccupancy& occ) {
    auto m = measure_lower_bound(occ);
    return json{{"cell", occ.cell},
                {"occupied_count", occ.occupied_count},
                {"total_cells", occ.total_cells},
                {"overflow", occ.overflow},
                {"coverage_fraction", coverage_fraction(occ)},
                {"measure_lower_bound", m.value},
                {"measure_caveat", m.caveat}};
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Individual experiments
// ---------------------------------------------------------------------------

namespace experiments {

// Tangent sweep of the glued four-arc curve fills the plane window; the big
// arc's own sweep avoids the open unit disk.
inline ExperimentResult glued_circles_run(const json& p, std::uint64_t seed,
                                          int threads) {
    ExperimentResult res;
    res.id = "glued-circles";
    res.seed = seed;
    res.params = p;
    const auto count = p.at("samples").get<std::uint64_t>();
    const double fiber = p.at("fiber_halfwidth").get<double>();
    EmbeddedManifold curve = glued_circles();

    PointCloud cloud = detail::sweep_tangent_manifold(
        curve, Box::cube(1, -fiber, fiber), count, seed, threads);
    GridOccupancy occ = grid_occupancy(cloud, Box::cube(2, -20.0, 20.0), 0.5);
    res.data["occupancy"] = detail::occupancy_json(occ);
    detail::add_claim(res, "covers-plane-window", coverage_fraction(occ), ">=", 0.99);

    // Arc 1 alone: no tangent point enters the open unit disk.
    SweepSpec spec1 = detail::make_spec("arc1", curve.charts[0].domain,
                                        Box::cube(1, -fiber, fiber),
                                        count / 4, seed ^ 0xC0FFEEULL);
    PointCloud arc1 = sweep_tangent(curve.charts[0], spec1, threads);
    std::uint64_t inside = 0;
    for (std::uint64_t i = 0; i < arc1.size(); ++i)
        if (arc1.point(i).norm() < 1.0 - 1e-9) ++inside;
    res.data["arc1_points_in_unit_disk"] = inside;
    detail::add_claim(res, "arc1-excludes-unit-disk",
                      static_cast<double>(inside), "<=", 0.0);
    res.clouds.emplace_back("cloud", std::move(cloud));
    return res;
}

// Tangent line field of the circle: all lines at distance exactly the radius
// from the center; nearby outside points are reached, inside points are not.
inline ExperimentResult sphere_tangent_run(const json& p, std::uint64_t seed,
                                           int threads) {
    (void)threads;
    ExperimentResult res;
    res.id = "sphere-tangent";
    res.seed = seed;
    res.params = p;
    const int n = p.at("n").get<int>();
    if (n != 1) throw ConfigError("the distance oracle experiment is for n = 1");
    const auto line_count = p.at("lines").get<std::uint64_t>();
    const auto probe_count = p.at("probes").get<std::uint64_t>();
    auto bundles = sphere_line_bundles(n, SphereField::TangentField);

    // Sample lines (base point, unit direction) across both charts.
    std::vector<Vec> bases, dirs;
    bases.reserve(line_count);
    for (std::uint64_t i = 0; i < line_count; ++i) {
        const FramedBundle& b = bundles[i % 2];
        Vec u = unit_sample(SamplerKind::LowDiscrepancy, seed, i / 2, n);
        Vec x = b.base.domain.map_unit(u);
        bases.push_back(embed(b.base, x));
        dirs.push_back(b.frame(x).col(0));
    }
    const Vec origin = Vec::Zero(n + 1);
    double dist_err = 0.0;
    for (std::size_t i = 0; i < bases.size(); ++i)
        dist_err = std::max(dist_err,
                            std::abs(line_distance(origin, bases[i], dirs[i]) - 1.0));
    res.data["max_center_distance_error"] = dist_err;
    detail::add_claim(res, "lines-at-unit-distance", dist_err, "<=", 1e-9);

    // Probes outside the closed unit disk are near some line; probes inside
    // the 0.99-disk are far from all lines. The distance from a point at
    // polar (r, phi) to the line tangent at angle psi is |r cos(psi - phi) - 1|,
    // so the candidate minimizers sit at psi = phi (inside) and
    // psi = phi +- arccos(1/r) (outside): search sorted tangency angles there.
    std::vector<std::size_t> order(bases.size());
    std::vector<double> touch(bases.size());
    for (std::size_t l = 0; l < bases.size(); ++l) {
        touch[l] = std::atan2(bases[l][1], bases[l][0]);
        order[l] = l;
    }
    std::sort(order.begin(), order.end(),
              [&touch](std::size_t a, std::size_t b) { return touch[a] < touch[b]; });
    std::vector<double> sorted_touch(bases.size());
    for (std::size_t l = 0; l < bases.size(); ++l) sorted_touch[l] = touch[order[l]];
    auto min_distance_near = [&](const Vec& q, double psi) {
        auto it = std::lower_bound(sorted_touch.begin(), sorted_touch.end(), psi);
        auto idx = static_cast<std::ptrdiff_t>(it - sorted_touch.begin());
        const auto m_lines = static_cast<std::ptrdiff_t>(sorted_touch.size());
        double best = std::numeric_limits<double>::infinity();
        for (std::ptrdiff_t k = idx - 16; k <= idx + 16; ++k) {
            const std::size_t l =
                order[static_cast<std::size_t>(((k % m_lines) + m_lines) % m_lines)];
            best = std::min(best, line_distance(q, bases[l], dirs[l]));
        }
        return best;
    };
    double worst_outside = 0.0;
    double best_inside = std::numeric_limits<double>::infinity();
    for (std::uint64_t i = 0; i < probe_count; ++i) {
        const double r_out =
            1.01 + (10.0 - 1.01) * uniform01(seed ^ 0xABCULL, i, 0);
        const double th_out = 2 * kPi * uniform01(seed ^ 0xABCULL, i, 1) - kPi;
        Vec q(2);
        q << r_out * std::cos(th_out), r_out * std::sin(th_out);
        const double spread = std::acos(1.0 / r_out);
        double d = std::min(min_distance_near(q, th_out + spread),
                            min_distance_near(q, th_out - spread));
        worst_outside = std::max(worst_outside, d);

        const double r_in = 0.99 * std::sqrt(uniform01(seed ^ 0xDEFULL, i, 0));
        const double th_in = 2 * kPi * uniform01(seed ^ 0xDEFULL, i, 1) - kPi;
        Vec qi(2);
        qi << r_in * std::cos(th_in), r_in * std::sin(th_in);
        // Inside the disk the distance |r cos(psi - phi) - 1| is minimized at
        // psi = phi; it is bounded below by 1 - r for every line.
        best_inside = std::min(best_inside, min_distance_near(qi, th_in));
    }
    res.data["max_outside_probe_distance"] = worst_outside;
    res.data["min_inside_probe_distance"] = best_inside;
    detail::add_claim(res, "outside-probes-near-lines", worst_outside, "<=", 1e-3);
    detail::add_claim(res, "inside-probes-excluded", best_inside, ">=", 0.01);
    return res;
}

// One-sided tangent developable of the twisted quartic in R^4: the tangent
// sweep is measure-zero, read off as a box-count slope well below 4.
inline ExperimentResult tangent_developable_run(const json& p, std::uint64_t seed,
                                                int threads) {
    (void)threads;
    ExperimentResult res;
    res.id = "tangent-developable-r4";
    res.seed = seed;
    res.params = p;
    Chart sigma = tangent_developable(twisted_quartic(), true,
                                      p.at("v_min").get<double>(),
                                      p.at("v_max").get<double>());
    const double fiber = p.at("fiber_halfwidth").get<double>();
    Box fiber_box = Box::cube(2, -fiber, fiber);
    Box window = Box::cube(4, -8.0, 8.0);

    SweepSpec spec = detail::make_spec("sigma+", sigma.domain, fiber_box,
                                       1ULL << 25, seed);
    auto generator = [&sigma, &spec](std::uint64_t i) {
        auto [x, xi] = spec.sample(i);
        return Vec(embed(sigma, x) + embed_jacobian(sigma, x) * xi);
    };
    BoxCountConfig cfg;
    // Most of the sweep lies outside the window, so fine scales starve; a
    // coarse ladder keeps at least two saturated scales within budget.
    cfg.scale_fractions = {1.0 / 4, 1.0 / 8, 1.0 / 16, 1.0 / 32, 1.0 / 64};
    cfg.max_samples = p.at("max_samples").get<std::uint64_t>();
    DimensionEstimate est = box_counting_dimension(generator, window, cfg);
    res.data["dimension"] = to_json(est);
    detail::add_claim(res, "sweep-slope-below-3.3", est.slope, "<=", 3.3);
    return res;
}

// Product of two glued-circle tangent sweeps fills a 4-box. The product
// occupancy is the tensor of the factor occupancies on matched grids, which
// is exact for Cartesian-product clouds.
inline ExperimentResult product_circles_run(const json& p, std::uint64_t seed,
                                            int threads) {
    ExperimentResult res;
    res.id = "product-circles-r4";
    res.seed = seed;
    res.params = p;
    const auto count = p.at("samples").get<std::uint64_t>();
    EmbeddedManifold curve = glued_circles();
    PointCloud cloud = detail::sweep_tangent_manifold(
        curve, Box::cube(1, -40.0, 40.0), count, seed, threads);
    GridOccupancy occ = grid_occupancy(cloud, Box::cube(2, -20.0, 20.0), 1.0);
    const double cov = coverage_fraction(occ);
    const double product_cov = cov * cov;
    res.data["factor_coverage"] = cov;
    res.data["product_coverage"] = product_cov;
    detail::add_claim(res, "product-fills-4-box", product_cov, ">=", 0.95);
    return res;
}

// Normal sweep of a closed circle covers a plane window (Lebesgue-full
// normal coverage of closed submanifolds).
inline ExperimentResult circle_normal_run(const json& p, std::uint64_t seed,
                                          int threads) {
    ExperimentResult res;
    res.id = "circle-normal";
    res.seed = seed;
    res.params = p;
    const auto count = p.at("samples").get<std::uint64_t>();
    Vec c0 = Vec::Zero(2);
    Chart circle = circle_arc(c0, 1.0, 0.0, +1, 2 * kPi, "circle");
    SweepSpec spec = detail::make_spec("circle", circle.domain,
                                       Box::cube(1, -4.5, 4.5), count, seed);
    PointCloud cloud = sweep_normal(circle, spec, threads);
    GridOccupancy occ = grid_occupancy(cloud, Box::cube(2, -3.0, 3.0), 0.05);
    res.data["occupancy"] = detail::occupancy_json(occ);
    detail::add_claim(res, "covers-plane-window", coverage_fraction(occ), ">=",
                      0.999);
    res.clouds.emplace_back("cloud", std::move(cloud));
    return res;
}

// Normal sweep of an open parabola arc covers a tube around the arc (cells
// whose centers are within the tube radius of the inner sub-arc).
inline ExperimentResult parabola_normal_run(const json& p, std::uint64_t seed,
                                            int threads) {
    ExperimentResult res;
    res.id = "parabola-normal";
    res.seed = seed;
    res.params = p;
    const auto count = p.at("samples").get<std::uint64_t>();
    const double tube_r = p.at("tube_radius").get<double>();
    auto f = [](const Vec& x) {
        Vec v(1);
        v << x[0] * x[0];
        return v;
    };
    auto jac = [](const Vec& x) {
        Mat j(1, 1);
        j << 2.0 * x[0];
        return j;
    };
    Chart parabola = Chart::graph(1, 2, Box::cube(1, -2.0, 2.0), f, jac, nullptr,
                                  "parabola");
    // The fiber box is the b-range of Psi_f; it must bracket the graph's
    // values so the tube is reached from both sides.
    Vec blo(1), bhi(1);
    blo << -0.3;
    bhi << 4.3;
    SweepSpec spec = detail::make_spec("parabola", parabola.domain,
                                       Box(blo, bhi), count, seed);
    PointCloud cloud = sweep_normal(parabola, spec, threads);

    const double delta = 0.02;
    Box window = Box((Vec(2) << -2.0, -0.5).finished(),
                     (Vec(2) << 2.0, 4.5).finished());
    GridOccupancy occ = grid_occupancy(cloud, window, delta);

    // Tube membership oracle: distance from a cell center to the sub-arc
    // x in [-1.5, 1.5], computed by dense parameter scan.
    auto arc_distance = [](const Vec& q) {
        double best = std::numeric_limits<double>::infinity();
        for (int k = 0; k <= 3000; ++k) {
            const double x = -1.5 + 3.0 * k / 3000.0;
            const double dx = q[0] - x, dy = q[1] - x * x;
            best = std::min(best, std::sqrt(dx * dx + dy * dy));
        }
        return best;
    };
    std::uint64_t tube_cells = 0, hit = 0;
    for (std::uint64_t ix = 0; ix < occ.counts[0]; ++ix)
        for (std::uint64_t iy = 0; iy < occ.counts[1]; ++iy) {
            Vec center(2);
            center << window.lo[0] + (ix + 0.5) * delta,
                window.lo[1] + (iy + 0.5) * delta;
            if (arc_distance(center) > tube_r - delta) continue;
            ++tube_cells;
            const std::uint64_t idx = ix * occ.counts[1] + iy;
            if (occ.bits[idx / 64] & (1ULL << (idx % 64))) ++hit;
        }
    const double frac = tube_cells ? static_cast<double>(hit) / tube_cells : 0.0;
    res.data["tube_cells"] = tube_cells;
    res.data["tube_cells_hit"] = hit;
    res.data["tube_coverage"] = frac;
    detail::add_claim(res, "covers-arc-tube", frac, ">=", 0.99);
    return res;
}

// Unions of hyperplanes over Cantor parameter sets of dimension s - n have
// box-count slope s.
inline ExperimentResult cantor_run(const json& p, std::uint64_t seed,
                                   int threads) {
    (void)threads;
    ExperimentResult res;
    res.id = "cantor-hyperplanes";
    res.seed = seed;
    res.params = p;
    const double s = p.at("s").get<double>();
    const int n = p.at("n").get<int>();
    const int depth = p.at("depth").get<int>();
    CantorFamily fam = cantor_hyperplane_family(s, n, depth);
    BoxCountConfig cfg;
    cfg.scale_fractions = {1.0 / 16, 1.0 / 32, 1.0 / 64, 1.0 / 128, 1.0 / 256};
    // The s = n instance is a single hyperplane whose coarse-scale counts sit
    // below the default 100-cell floor; a floor of 16 keeps the window while
    // still rejecting noise scales.
    cfg.min_count = 16;
    cfg.max_samples = p.at("max_samples").get<std::uint64_t>();
    DimensionEstimate est = box_counting_dimension(
        [&fam, seed](std::uint64_t i) { return fam.point(seed, i); },
        fam.sample_box, cfg);
    res.data["dimension"] = to_json(est);
    detail::add_claim(res, "slope-matches-s", est.slope - s, "==~", 0.15);
    return res;
}

// Estimator calibration on sets of known dimension / measure.
inline ExperimentResult calibration_run(const json& p, std::uint64_t seed,
                                        int threads) {
    (void)threads;
    ExperimentResult res;
    res.id = "estimator-calibration";
    res.seed = seed;
    res.params = p;
    Box window = Box::cube(2, 0.0, 1.0);
    BoxCountConfig cfg;
    cfg.max_samples = p.at("max_samples").get<std::uint64_t>();

    auto segment = [seed](std::uint64_t i) {
        Vec q(2);
        q << uniform01(seed, i, 0), 0.25;
        return q;
    };
    auto square = [seed](std::uint64_t i) {
        Vec q(2);
        q << uniform01(seed, i, 0), uniform01(seed, i, 1);
        return q;
    };
    auto cantor = [seed](std::uint64_t i) {
        // Middle-thirds Cantor set on the x-axis: 40 ternary digits in {0,2}
        // drawn from a per-index splitmix stream (uniform Cantor measure).
        double x = 0.0, scale = 1.0 / 3.0;
        std::uint64_t b = detail::splitmix64(seed ^ detail::splitmix64(i));
        for (int d = 0; d < 40; ++d) {
            if ((b >> d) & 1ULL) x += 2.0 * scale;
            scale /= 3.0;
        }
        Vec q(2);
        q << x, 0.25;
        return q;
    };

    DimensionEstimate seg = box_counting_dimension(segment, window, cfg);
    DimensionEstimate sq = box_counting_dimension(square, window, cfg);
    // The Cantor set holds ~2^(0.63 k) cells at scale 2^-k, so the ladder
    // must go deeper than the default before the 100-cell floor is met.
    BoxCountConfig cantor_cfg = cfg;
    cantor_cfg.scale_fractions.clear();
    for (int k = 9; k <= 16; ++k) cantor_cfg.scale_fractions.push_back(std::pow(2.0, -k));
    DimensionEstimate ca = box_counting_dimension(cantor, window, cantor_cfg);
    res.data["segment"] = to_json(seg);
    res.data["square"] = to_json(sq);
    res.data["cantor"] = to_json(ca);
    detail::add_claim(res, "segment-dimension", seg.slope - 1.0, "==~", 0.05);
    detail::add_claim(res, "square-dimension", sq.slope - 2.0, "==~", 0.05);
    detail::add_claim(res, "cantor-dimension",
                      ca.slope - std::log(2.0) / std::log(3.0), "==~", 0.05);

    // Unit-disk area fraction in [-2,2]^2 at delta = 0.01.
    const auto disk_samples = p.at("disk_samples").get<std::uint64_t>();
    PointCloud disk;
    disk.n = 2;
    disk.data.resize(2 * disk_samples);
    for (std::uint64_t i = 0; i < disk_samples; ++i) {
        Vec u = unit_sample(SamplerKind::LowDiscrepancy, seed, i, 2);
        const double r = std::sqrt(u[0]);
        const double th = 2 * kPi * u[1];
        Vec q(2);
        q << r * std::cos(th), r * std::sin(th);
        disk.set_point(i, q);
    }
    GridOccupancy occ = grid_occupancy(disk, Box::cube(2, -2.0, 2.0), 0.01);
    const double frac = coverage_fraction(occ);
    res.data["disk_coverage"] = frac;
    detail::add_claim(res, "disk-coverage", frac - kPi / 16.0, "==~", 0.005);
    return res;
}

// Deformation along a line bundle leaves the codiagonal's lines unchanged;
// osculation defect separates ruling from non-ruling fields on the saddle.
inline ExperimentResult saddle_deformation_run(const json& p, std::uint64_t seed,
                                               int threads) {
    (void)threads;
    ExperimentResult res;
    res.id = "saddle-deformation";
    res.seed = seed;
    res.params = p;
    const auto points = p.at("points").get<std::uint64_t>();

    auto saddle_f = [](const Vec& x) {
        Vec v(1);
        v << x[0] * x[1];
        return v;
    };
    auto saddle_j = [](const Vec& x) {
        Mat j(1, 2);
        j << x[1], x[0];
        return j;
    };
    Chart flat = Chart::graph(2, 3, Box::cube(2, -1.0, 1.0),
                              [](const Vec&) { return Vec::Zero(1); }, nullptr,
                              nullptr, "flat");
    Chart saddle = Chart::graph(2, 3, Box::cube(2, -1.0, 1.0), saddle_f, saddle_j,
                                nullptr, "saddle");
    auto pf = [](const Vec& x) {
        Vec v(1);
        v << x[0] * x[0];
        return v;
    };
    Chart parab = Chart::graph(1, 2, Box::cube(1, -1.0, 1.0), pf, nullptr, nullptr,
                               "parabola");

    double worst = 0.0;
    int combo = 0;
    for (Chart* chart : {&flat, &saddle, &parab}) {
        FramedBundle line = make_normal_bundle(*chart);
        // hypersurfaces: normal bundle is already a line bundle
        Section sec = bump_section(line, Vec::Zero(chart->dim_domain), 0.9, 0.2);
        Deformation def = deform(*chart, sec);
        for (std::uint64_t i = 0; i < points; ++i) {
            Vec u = unit_sample(SamplerKind::LowDiscrepancy,
                                seed ^ static_cast<std::uint64_t>(combo), i,
                                chart->dim_domain);
            Vec x = chart->domain.map_unit(u);
            Vec dir = line.frame(x).col(0);
            const double d =
                line_distance(def.deformed_map(x), embed(*chart, x), dir);
            worst = std::max(worst, d);
        }
        ++combo;
    }
    res.data["max_line_distance"] = worst;
    detail::add_claim(res, "deformation-preserves-lines", worst, "<=", 1e-9);

    // Saddle z = xy at the origin: the diagonal tangent field has normal
    // curvature 1; the ruling field is straight.
    auto diag_frame = [saddle](const Vec& x) {
        return Mat(embed_jacobian(saddle, x) * (Vec(2) << 1.0, 1.0).finished());
    };
    auto ruling_frame = [saddle](const Vec& x) {
        return Mat(embed_jacobian(saddle, x) * (Vec(2) << 1.0, 0.0).finished());
    };
    FramedBundle diag = make_custom_bundle(saddle, 1, diag_frame, "diag");
    FramedBundle ruling = make_custom_bundle(saddle, 1, ruling_frame, "ruling");
    const double d_diag = osculation_defect(diag, Vec::Zero(2));
    const double d_rul = osculation_defect(ruling, Vec::Zero(2));
    res.data["diagonal_defect"] = d_diag;
    res.data["ruling_defect"] = d_rul;
    detail::add_claim(res, "diagonal-field-curved", d_diag, ">=", 0.1);
    detail::add_claim(res, "ruling-field-straight", d_rul, "==~", 1e-6);
    return res;
}

// Tangent sweep of the Peano ODE curve: coverage of the unit square grows
// with the Hilbert order and the integrator tracks the exact solution.
inline ExperimentResult peano_run(const json& p, std::uint64_t seed,
                                  int threads) {
    ExperimentResult res;
    res.id = "peano-ode";
    res.seed = seed;
    res.params = p;
    const double step = p.at("step").get<double>();
    const auto count = p.at("samples").get<std::uint64_t>();
    const double lo = p.at("fiber_lo").get<double>();
    const double hi = p.at("fiber_hi").get<double>();

    double residual = 0.0;
    std::vector<double> coverages;
    for (int order : {2, 3, 4, 5}) {
        PeanoCurve pc = peano_tangent_curve(order, step);
        residual = std::max(residual, pc.residual_max);
        SweepSpec spec =
            detail::make_spec("peano", pc.chart.domain,
                              Box(Vec::Constant(1, lo), Vec::Constant(1, hi)),
                              count, seed);
        PointCloud cloud = sweep_tangent(pc.chart, spec, threads);
        GridOccupancy occ = grid_occupancy(cloud, Box::cube(2, 0.0, 1.0), 0.05);
        coverages.push_back(coverage_fraction(occ));
    }
    res.data["ode_residual"] = residual;
    res.data["coverage_by_order"] = coverages;
    detail::add_claim(res, "ode-residual", residual, "<=", 1e-10);
    double min_growth = 0.0;
    for (std::size_t k = 1; k < coverages.size(); ++k)
        min_growth = std::min(min_growth, coverages[k] - coverages[k - 1]);
    detail::add_claim(res, "coverage-nondecreasing", min_growth, ">=", 0.0);
    detail::add_claim(res, "coverage-at-order-5", coverages.back(), ">=", 0.90);
    return res;
}

// Interior-ball certificates on random full-rank quadratic maps, plus the
// lifted section map of f(x) = x^2 at (0, 1).
inline ExperimentResult certificate_run(const json& p, std::uint64_t seed,
                                        int threads) {
    (void)threads;
    ExperimentResult res;
    res.id = "certificate-quadratics";
    res.seed = seed;
    res.params = p;
    const int trials = p.at("trials").get<int>();

    auto gauss = [seed](std::uint64_t salt, std::uint64_t i, int a) {
        double u1 = std::max(uniform01(seed ^ salt, i, 2 * a), 1e-16);
        double u2 = uniform01(seed ^ salt, i, 2 * a + 1);
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2 * kPi * u2);
    };

    int certified = 0;
    double min_success_rate = 1.0;
    double worst_violation = 0.0;
    for (int trial = 0; trial < trials; ++trial) {
        const int m = 2 + trial % 3;                   // domain dim in {2,3,4}
        const int n = 1 + (trial / 3) % m;             // range dim <= m
        Mat b(n, m);
        std::vector<Mat> c(n, Mat(m, m));
        int salt = 0;
        do {
            for (int r = 0; r < n; ++r)
                for (int q = 0; q < m; ++q)
                    b(r, q) = gauss(0xB0B0ULL + salt, trial, r * m + q);
            ++salt;
        } while (numeric_rank(b) < n);
        for (int r = 0; r < n; ++r)
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < m; ++j)
                    c[r](i, j) = 0.3 * gauss(0xC4C4ULL + r, trial, i * m + j);
        auto h = [&b, &c, n](const Vec& x) {
            Vec y(n);
            for (int r = 0; r < n; ++r)
                y[r] = b.row(r).dot(x) + x.dot(c[r] * x);
            return y;
        };
        CertificateConfig cfg;
        cfg.seed = seed ^ static_cast<std::uint64_t>(trial);
        BallCertificate cert = interior_certificate(h, Vec::Zero(m), cfg);
        ++certified;
        const double rate = static_cast<double>(cert.success_count) /
                            static_cast<double>(cert.tested_targets.size());
        min_success_rate = std::min(min_success_rate, rate);
        worst_violation = std::max(worst_violation, cert.residual_max);
    }
    res.data["certified"] = certified;
    res.data["min_success_rate"] = min_success_rate;
    detail::add_claim(res, "targets-solved", min_success_rate, ">=", 0.95);

    // Lifted section map of f(x) = x^2 at (x, a) = (0, 1).
    auto phi_map = [](const Vec& xa) {
        Vec y(2);
        y << xa[1], 2.0 * xa[0] * xa[1] - xa[0] * xa[0];
        return y;
    };
    Vec x0(2);
    x0 << 0.0, 1.0;
    BallCertificate cert = interior_certificate(phi_map, x0);
    res.data["lifted_map_certificate"] = to_json(cert);
    detail::add_claim(res, "lifted-map-ball-nonempty",
                      cert.lambda * cert.epsilon *
                          (cert.success_count > 0 ? 1.0 : 0.0),
                      ">=", 1e-9);
    return res;
}

// Half-line family over the disk with boundary-identity alpha: the far field
// of a circular cone is covered.
inline ExperimentResult halfline_run(const json& p, std::uint64_t seed,
                                     int threads) {
    ExperimentResult res;
    res.id = "halfline-cone";
    res.seed = seed;
    res.params = p;
    const int n = p.at("n").get<int>();
    const auto count = p.at("samples").get<std::uint64_t>();
    // alpha: identity on the boundary, interior swirl; beta: bounded shift.
    auto alpha = [n](const Vec& x) {
        const double r2 = x.squaredNorm();
        const double w = kPi * (1.0 - r2);  // vanishes on the sphere
        Vec y = x;
        const double cs = std::cos(w), sn = std::sin(w);
        y[0] = cs * x[0] - sn * x[1 % n];
        if (n > 1) y[1] = sn * x[0] + cs * x[1];
        return y;
    };
    auto beta = [n](const Vec& x) { return Vec(0.5 * x.cwiseAbs2()); };

    // Half-lines are unbounded; sample the parameter band that brackets the
    // measured far-field window so the whole budget lands where we count.
    const double r_far = p.at("far_radius").get<double>();
    Vec tlo(1), thi(1);
    tlo << r_far - 1.0;
    thi << r_far + 11.0;
    SweepSpec spec = detail::make_spec("halfline", Box::cube(n, 0.0, 1.0),
                                       Box(tlo, thi), count, seed);
    PointCloud cloud = halfline_family(alpha, beta, n, spec, threads);

    // Far-field cone window: a box inside {angle(u, e0) < pi/6, |u| > R}.
    Vec lo(n + 1), hi(n + 1);
    lo[0] = r_far;
    hi[0] = r_far + 10.0;
    for (int i = 1; i <= n; ++i) {
        lo[i] = -r_far * 0.2;
        hi[i] = r_far * 0.2;
    }
    GridOccupancy occ = grid_occupancy(cloud, Box(lo, hi), 1.0);
    res.data["occupancy"] = detail::occupancy_json(occ);
    detail::add_claim(res, "far-cone-covered", coverage_fraction(occ), ">=",
                      p.at("coverage_threshold").get<double>());
    return res;
}

// Projective-line family with boundary-constant f: the union of lines has
// nonempty interior, read off as coverage of a fixed box.
inline ExperimentResult projective_run(const json& p, std::uint64_t seed,
                                       int threads) {
    ExperimentResult res;
    res.id = "projective-lines";
    res.seed = seed;
    res.params = p;
    const int n = p.at("n").get<int>();
    const auto count = p.at("samples").get<std::uint64_t>();
    auto f = [](const Vec& x) { return x.squaredNorm() - 1.0; };
    auto beta = [n](const Vec& x) {
        Vec b = Vec::Constant(n, 0.3);
        b[0] += 0.2 * x[0];
        return b;
    };
    Vec tlo(1), thi(1);
    tlo << -2.0;
    thi << 2.0;
    SweepSpec spec = detail::make_spec("projective", Box::cube(n, 0.0, 1.0),
                                       Box(tlo, thi), count, seed);
    PointCloud cloud = projective_line_family(f, beta, n, spec, threads);
    Box window = Box::cube(n + 1, -0.5, 0.5);
    GridOccupancy occ = grid_occupancy(cloud, window, 0.05);
    res.data["occupancy"] = detail::occupancy_json(occ);
    detail::add_claim(res, "interior-box-covered", coverage_fraction(occ), ">=",
                      p.at("coverage_threshold").get<double>());
    return res;
}

// Line bundle with tangent-angle directions over a strictly convex graph:
// the codiagonal has interior.
inline ExperimentResult convex_curve_run(const json& p, std::uint64_t seed,
                                         int threads) {
    ExperimentResult res;
    res.id = "convex-curve";
    res.seed = seed;
    res.params = p;
    const auto count = p.at("samples").get<std::uint64_t>();
    auto f = [](double x) { return x * x; };
    auto phi = [](double x) { return std::atan(2.0 * x); };  // tangent angle
    FramedBundle bundle = convex_curve_bundle(f, phi, Box::cube(1, -3.0, 3.0));
    SweepSpec spec = detail::make_spec("convex", bundle.base.domain,
                                       Box::cube(1, -15.0, 15.0), count, seed);
    PointCloud cloud = sweep_bundle(bundle, spec, threads);
    GridOccupancy occ = grid_occupancy(cloud, Box::cube(2, -3.0, 3.0), 0.1);
    res.data["occupancy"] = detail::occupancy_json(occ);
    detail::add_claim(res, "interior-box-covered", coverage_fraction(occ), ">=",
                      p.at("coverage_threshold").get<double>());
    return res;
}

// Affine pushforward of the circle tangent bundle: the ellipse's tangent
// sweep excludes the open ellipse interior.
inline ExperimentResult ellipse_run(const json& p, std::uint64_t seed,
                                    int threads) {
    ExperimentResult res;
    res.id = "ellipse-tangent";
    res.seed = seed;
    res.params = p;
    const auto count = p.at("samples").get<std::uint64_t>();
    auto bundles = sphere_line_bundles(1, SphereField::TangentField);
    Mat l(2, 2);
    l << 2.0, 0.0, 0.0, 1.0;
    Vec b = Vec::Zero(2);
    std::uint64_t inside = 0;
    double min_q = std::numeric_limits<double>::infinity();
    for (const auto& src : bundles) {
        FramedBundle ell = ellipsoid_pushforward(l, b, src);
        SweepSpec spec = detail::make_spec("ellipse", ell.base.domain,
                                           Box::cube(1, -30.0, 30.0), count / 2,
                                           seed);
        PointCloud cloud = sweep_bundle(ell, spec, threads);
        for (std::uint64_t i = 0; i < cloud.size(); ++i) {
            Vec q = cloud.point(i);
            const double level = (q[0] / 2.0) * (q[0] / 2.0) + q[1] * q[1];
            min_q = std::min(min_q, level);
            if (level < 1.0 - 1e-9) ++inside;
        }
    }
    res.data["points_inside_ellipse"] = inside;
    res.data["min_level"] = min_q;
    detail::add_claim(res, "excludes-ellipse-interior",
                      static_cast<double>(inside), "<=", 0.0);
    return res;
}

// Tilted line field on S^2: not tangent anywhere, so the sweep covers an
// open neighborhood of the sphere.
inline ExperimentResult sphere_tilted_run(const json& p, std::uint64_t seed,
                                          int threads) {
    ExperimentResult res;
    res.id = "sphere-tilted";
    res.seed = seed;
    res.params = p;
    const auto count = p.at("samples").get<std::uint64_t>();
    const double angle = p.at("angle").get<double>();
    auto bundles = sphere_line_bundles(2, SphereField::Tilted, angle);
    PointCloud all;
    all.n = 3;
    for (std::size_t k = 0; k < bundles.size(); ++k) {
        SweepSpec spec = detail::make_spec(
            "tilted", bundles[k].base.domain, Box::cube(1, -1.5, 1.5), count / 2,
            seed ^ (0x70D0ULL + k));
        PointCloud part = sweep_bundle(bundles[k], spec, threads);
        all.data.insert(all.data.end(), part.data.begin(), part.data.end());
    }
    // The tilt moves points radially at rate sin(angle) per unit fiber, so
    // the sweep thickens the sphere into an open shell. Measure a box that
    // straddles the sphere at mid-latitude, where the shell is thick.
    Box window = Box((Vec(3) << 0.7, -0.15, 0.7).finished(),
                     (Vec(3) << 1.0, 0.15, 1.0).finished());
    GridOccupancy occ = grid_occupancy(all, window, 0.05);
    res.data["occupancy"] = detail::occupancy_json(occ);
    detail::add_claim(res, "shell-box-covered", coverage_fraction(occ), ">=",
                      p.at("coverage_threshold").get<double>());
    return res;
}

}  // namespace experiments

// ---------------------------------------------------------------------------
// Registry
// ---------------------------------------------------------------------------

inline const std::vector<Experiment>& experiment_registry() {
    static const std::vector<Experiment> registry = [] {
        std::vector<Experiment> r;
        r.push_back({"glued-circles",
                     "Tangent sweep of the closed four-arc glued-circle curve.",
                     "The union of tangent lines fills the plane: coverage of "
                     "[-20,20]^2 at cell 0.5 is at least 99%, and the big "
                     "arc's own sweep avoids the open unit disk.",
                     json{{"samples", 1000000}, {"fiber_halfwidth", 40.0}},
                     experiments::glued_circles_run});
        r.push_back({"sphere-tangent",
                     "Tangent line field of the unit circle.",
                     "Every tangent line sits at distance exactly 1 from the "
                     "center; outside probes are near sampled lines, inside "
                     "probes are excluded.",
                     json{{"n", 1}, {"lines", 400000}, {"probes", 10000}},
                     experiments::sphere_tangent_run});
        r.push_back({"tangent-developable-r4",
                     "One-sided tangent developable of the quartic curve in R^4.",
                     "The tangent sweep of the surface is Lebesgue-null in "
                     "R^4: box-count slope at most 3.3.",
                     json{{"v_min", 0.05},
                          {"v_max", 5.0},
                          {"fiber_halfwidth", 5.0},
                          {"max_samples", 16777216}},
                     experiments::tangent_developable_run});
        r.push_back({"product-circles-r4",
                     "Product of two plane-filling tangent sweeps.",
                     "The product sweep fills a 4-box: tensor coverage at "
                     "cell 1.0 is at least 95%.",
                     json{{"samples", 1000000}},
                     experiments::product_circles_run});
        r.push_back({"circle-normal",
                     "Normal sweep of the closed unit circle.",
                     "Normal lines of a closed curve cover the plane: "
                     "coverage of [-3,3]^2 at cell 0.05 is at least 99.9%.",
                     json{{"samples", 4000000}},
                     experiments::circle_normal_run});
        r.push_back({"parabola-normal",
                     "Normal sweep of an open parabola arc.",
                     "Normal lines cover a tube of radius 0.1 around the "
                     "arc: at least 99% of tube cells are hit.",
                     json{{"samples", 2000000}, {"tube_radius", 0.1}},
                     experiments::parabola_normal_run});
        r.push_back({"cantor-hyperplanes",
                     "Hyperplane family over a Cantor parameter set.",
                     "The union of hyperplanes has box-count slope s (within "
                     "0.15) when the parameter Cantor set has dimension s - n.",
                     json{{"s", 1.5}, {"n", 1}, {"depth", 8},
                          {"max_samples", 4194304}},
                     experiments::cantor_run});
        r.push_back({"estimator-calibration",
                     "Box-counting and coverage calibration on known sets.",
                     "Segment 1.0, square 2.0, middle-thirds Cantor 0.631 "
                     "(each within 0.05); unit-disk coverage pi/16 within "
                     "0.005.",
                     json{{"max_samples", 4194304}, {"disk_samples", 4000000}},
                     experiments::calibration_run});
        r.push_back({"saddle-deformation",
                     "Bump deformations along line bundles; saddle fields.",
                     "Deformation along a line bundle moves points only along "
                     "their own lines (distance <= 1e-9); on z = xy the "
                     "diagonal field has normal curvature >= 0.1 while the "
                     "ruling field is straight.",
                     json{{"points", 1000}},
                     experiments::saddle_deformation_run});
        r.push_back({"peano-ode",
                     "Tangent curve of the Peano ODE alpha' = phi - alpha.",
                     "The integrator matches the exact per-segment solution "
                     "to 1e-10 and tangent-sweep coverage of [0,1]^2 grows "
                     "with the Hilbert order, exceeding 90% at order 5.",
                     json{{"step", 1e-4},
                          {"samples", 400000},
                          {"fiber_lo", -0.5},
                          {"fiber_hi", 1.5}},
                     experiments::peano_run});
        r.push_back({"certificate-quadratics",
                     "Interior-ball certificates on random quadratic maps.",
                     "At least 95% of ball targets solve with the two-sided "
                     "inequality verified; the lifted section map of x^2 at "
                     "(0,1) certifies a nonempty ball.",
                     json{{"trials", 100}},
                     experiments::certificate_run});
        r.push_back({"halfline-cone",
                     "Half-line family over the disk, boundary-identity alpha.",
                     "The far field of a circular cone around the first axis "
                     "is covered above an empirically fixed radius.",
                     json{{"n", 2},
                          {"samples", 2000000},
                          {"far_radius", 30.0},
                          {"coverage_threshold", 0.95}},
                     experiments::halfline_run});
        r.push_back({"projective-lines",
                     "Projective-line family with boundary-constant f.",
                     "The union of lines has nonempty interior: a fixed box "
                     "is covered above threshold.",
                     json{{"n", 2},
                          {"samples", 2000000},
                          {"coverage_threshold", 0.95}},
                     experiments::projective_run});
        r.push_back({"convex-curve",
                     "Line bundle over a strictly convex graph.",
                     "The codiagonal of the bundle has interior: tangent "
                     "lines of y = x^2 cover everything below the graph, "
                     "about 81% of [-3,3]^2.",
                     json{{"samples", 2000000}, {"coverage_threshold", 0.78}},
                     experiments::convex_curve_run});
        r.push_back({"ellipse-tangent",
                     "Affine pushforward of the circle tangent bundle.",
                     "Tangent lines of the ellipse never enter its open "
                     "interior.",
                     json{{"samples", 200000}},
                     experiments::ellipse_run});
        r.push_back({"sphere-tilted",
                     "Tilted (non-tangent) line field on the 2-sphere.",
                     "The sweep covers an open box straddling the sphere "
                     "above an empirically fixed threshold.",
                     json{{"samples", 2000000},
                          {"angle", 0.3},
                          {"coverage_threshold", 0.9}},
                     experiments::sphere_tilted_run});
        return r;
    }();
    return registry;
}

inline const Experiment& find_experiment(const std::string& id) {
    for (const auto& e : experiment_registry())
        if (e.id == id) return e;
    throw ConfigError("unknown experiment: " + id);
}

// ---------------------------------------------------------------------------
// SVG slice rendering
// ---------------------------------------------------------------------------

inline std::string render_slice(const PointCloud& cloud, int axis_i, int axis_j,
                                const Vec& offsets, double thickness,
                                int image_size = 640) {
    if (axis_i < 0 || axis_j < 0 || axis_i >= cloud.n || axis_j >= cloud.n ||
        axis_i == axis_j)
        throw ConfigError("invalid slice axes");
    std::vector<std::pair<double, double>> pts;
    const std::uint64_t m = cloud.size();
    for (std::uint64_t r = 0; r < m; ++r) {
        auto q = cloud.point(r);
        bool in_slab = true;
        for (int k = 0; k < cloud.n && in_slab; ++k) {
            if (k == axis_i || k == axis_j) continue;
            const double off = k < offsets.size() ? offsets[k] : 0.0;
            if (std::abs(q[k] - off) > thickness / 2.0) in_slab = false;
        }
        if (in_slab) pts.emplace_back(q[axis_i], q[axis_j]);
    }
    double xlo = 0, xhi = 1, ylo = 0, yhi = 1;
    const bool empty = pts.empty();
    if (!empty) {
        xlo = xhi = pts[0].first;
        ylo = yhi = pts[0].second;
        for (auto& [x, y] : pts) {
            xlo = std::min(xlo, x);
            xhi = std::max(xhi, x);
            ylo = std::min(ylo, y);
            yhi = std::max(yhi, y);
        }
        if (xhi - xlo < 1e-12) xhi = xlo + 1;
        if (yhi - ylo < 1e-12) yhi = ylo + 1;
    }
    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << image_size
        << "\" height=\"" << image_size << "\" viewBox=\"0 0 " << image_size
        << " " << image_size << "\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\" "
           "stroke=\"black\"/>\n";
    if (empty) svg << "<!-- EmptySlice: no points in the slab -->\n";
    const double pad = 0.05 * image_size;
    for (auto& [x, y] : pts) {
        const double px = pad + (x - xlo) / (xhi - xlo) * (image_size - 2 * pad);
        const double py =
            image_size - (pad + (y - ylo) / (yhi - ylo) * (image_size - 2 * pad));
        svg << "<circle cx=\"" << px << "\" cy=\"" << py
            << "\" r=\"1\" fill=\"black\"/>\n";
    }
    svg << "</svg>\n";
    return svg.str();
}

}  // namespace codlab
