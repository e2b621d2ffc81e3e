#include <catch2/catch_amalgamated.hpp>

#include "codlab/estimate.hpp"

using namespace codlab;

namespace {

Vec v2(double a, double b) {
    Vec v(2);
    v << a, b;
    return v;
}

PointCloud cloud_from(const std::vector<Vec>& pts) {
    PointCloud c;
    c.n = static_cast<int>(pts.front().size());
    for (const Vec& p : pts)
        c.data.insert(c.data.end(), p.data(), p.data() + p.size());
    return c;
}

}  // namespace

TEST_CASE("grid occupancy basics") {
    Box box = Box::cube(2, 0.0, 1.0);
    GridOccupancy occ(box, 0.25);
    REQUIRE(occ.total_cells == 16);

    occ.insert(v2(0.1, 0.1));
    REQUIRE(occ.occupied_count == 1);
    REQUIRE(coverage_fraction(occ) == Catch::Approx(1.0 / 16).margin(1e-15));

    // Re-inserting the same cell is idempotent.
    occ.insert(v2(0.12, 0.2));
    REQUIRE(occ.occupied_count == 1);

    // Cells are half-open: the shared boundary belongs to the upper cell.
    occ.insert(v2(0.25, 0.0));
    REQUIRE(occ.occupied_count == 2);

    // Points outside the box are counted as overflow, not inserted.
    occ.insert(v2(1.0, 0.5));  // on the upper face = outside
    occ.insert(v2(-0.1, 0.5));
    REQUIRE(occ.overflow == 2);
    REQUIRE(occ.occupied_count == 2);

    REQUIRE_THROWS_AS(GridOccupancy(box, 0.0), BadGrid);
    REQUIRE_THROWS_AS(GridOccupancy(box, -1.0), BadGrid);
    REQUIRE_THROWS_AS(GridOccupancy(Box::cube(3, 0.0, 1.0), 1e-8), BadGrid);
}

TEST_CASE("occupancy count is monotone under insertion") {
    GridOccupancy occ(Box::cube(2, 0.0, 1.0), 0.1);
    std::uint64_t prev = 0;
    for (int i = 0; i < 500; ++i) {
        occ.insert(Box::cube(2, 0.0, 1.0)
                       .map_unit(unit_sample(SamplerKind::UniformRandom, 5, i, 2)));
        REQUIRE(occ.occupied_count >= prev);
        prev = occ.occupied_count;
    }
}

TEST_CASE("merging a partition reproduces the whole") {
    Box box = Box::cube(2, -1.0, 1.0);
    std::vector<Vec> pts;
    for (int i = 0; i < 3000; ++i)
        pts.push_back(box.map_unit(unit_sample(SamplerKind::LowDiscrepancy, 9, i, 2)));
    PointCloud whole = cloud_from(pts);

    GridOccupancy all = grid_occupancy(whole, box, 0.1);
    GridOccupancy merged(box, 0.1);
    for (int part = 0; part < 3; ++part) {
        GridOccupancy piece(box, 0.1);
        for (std::size_t i = part; i < pts.size(); i += 3) piece.insert(pts[i]);
        merged.merge(piece);
    }
    REQUIRE(merged.bits == all.bits);
    REQUIRE(merged.occupied_count == all.occupied_count);

    GridOccupancy other(box, 0.2);
    REQUIRE_THROWS_AS(merged.merge(other), BadGrid);
    PointCloud wrong = cloud_from({Vec::Zero(3)});
    REQUIRE_THROWS_AS(grid_occupancy(wrong, box, 0.1), DimensionMismatch);
}

TEST_CASE("coverage fraction of known regions") {
    // Lower half of the unit square covers exactly half the cells.
    Box box = Box::cube(2, 0.0, 1.0);
    GridOccupancy half(box, 0.05);
    for (int i = 0; i < 100000; ++i) {
        Vec u = unit_sample(SamplerKind::LowDiscrepancy, 2, i, 2);
        half.insert(v2(u[0], 0.5 * u[1]));
    }
    REQUIRE(coverage_fraction(half) == Catch::Approx(0.5).margin(1e-12));

    // Unit disk in [-2,2]^2 at delta = 0.01 covers pi/16 of the window.
    GridOccupancy disk(Box::cube(2, -2.0, 2.0), 0.01);
    for (int i = 0; i < (1 << 21); ++i) {
        Vec u = unit_sample(SamplerKind::LowDiscrepancy, 3, i, 2);
        const double r = std::sqrt(u[0]);
        const double th = 2 * kPi * u[1];
        disk.insert(v2(r * std::cos(th), r * std::sin(th)));
    }
    REQUIRE(coverage_fraction(disk) == Catch::Approx(kPi / 16.0).margin(0.005));
}

TEST_CASE("occupancy measure estimate") {
    Box box = Box::cube(2, 0.0, 1.0);
    GridOccupancy occ(box, 0.05);
    for (int i = 0; i < 100000; ++i)
        occ.insert(box.map_unit(unit_sample(SamplerKind::LowDiscrepancy, 4, i, 2)));
    MeasureEstimate m = measure_lower_bound(occ);
    REQUIRE(m.value == Catch::Approx(1.0).margin(0.03));
    REQUIRE_FALSE(m.caveat.empty());

    GridOccupancy empty(box, 0.05);
    REQUIRE(measure_lower_bound(empty).value == 0.0);
}

TEST_CASE("box-counting dimension on known sets") {
    Box window = Box::cube(2, 0.0, 1.0);
    BoxCountConfig cfg;
    cfg.max_samples = 1ULL << 21;

    auto segment = [](std::uint64_t i) {
        Vec q(2);
        q << uniform01(11, i, 0), 0.25;
        return q;
    };
    DimensionEstimate seg = box_counting_dimension(segment, window, cfg);
    REQUIRE(seg.slope == Catch::Approx(1.0).margin(0.05));
    REQUIRE(seg.scale_window.size() >= 2);
    REQUIRE(seg.r2 > 0.999);

    auto square = [](std::uint64_t i) {
        Vec q(2);
        q << uniform01(12, i, 0), uniform01(12, i, 1);
        return q;
    };
    REQUIRE(box_counting_dimension(square, window, cfg).slope ==
            Catch::Approx(2.0).margin(0.05));

    // Middle-thirds Cantor set: dimension log 2 / log 3. Its cell counts only
    // clear the 100-cell floor past scale 2^-9, so it needs a deeper ladder.
    auto cantor = [](std::uint64_t i) {
        double x = 0.0, scale = 1.0 / 3.0;
        std::uint64_t b = detail::splitmix64(13 ^ detail::splitmix64(i));
        for (int d = 0; d < 40; ++d) {
            if ((b >> d) & 1ULL) x += 2.0 * scale;
            scale /= 3.0;
        }
        Vec q(2);
        q << x, 0.25;
        return q;
    };
    BoxCountConfig deep = cfg;
    deep.max_samples = 1ULL << 22;
    deep.scale_fractions.clear();
    for (int k = 9; k <= 16; ++k) deep.scale_fractions.push_back(std::pow(2.0, -k));
    REQUIRE(box_counting_dimension(cantor, window, deep).slope ==
            Catch::Approx(std::log(2.0) / std::log(3.0)).margin(0.05));
}

TEST_CASE("box counting rejects bad configurations") {
    Box window = Box::cube(2, 0.0, 1.0);
    auto gen = [](std::uint64_t i) {
        Vec q(2);
        q << uniform01(1, i, 0), uniform01(1, i, 1);
        return q;
    };
    BoxCountConfig few;
    few.scale_fractions = {1.0 / 8, 1.0 / 16, 1.0 / 32};
    REQUIRE_THROWS_AS(box_counting_dimension(gen, window, few), BadGrid);

    BoxCountConfig skewed;
    skewed.scale_fractions = {1.0 / 8, 1.0 / 16, 1.0 / 32, 1.0 / 63};
    REQUIRE_THROWS_AS(box_counting_dimension(gen, window, skewed), BadGrid);

    PointCloud empty;
    empty.n = 2;
    REQUIRE_THROWS_AS(box_counting_dimension(empty, window), InsufficientSamples);

    // A handful of points can never clear the per-scale cell floor.
    std::vector<Vec> pts;
    for (int i = 0; i < 10; ++i) pts.push_back(gen(i));
    REQUIRE_THROWS_AS(box_counting_dimension(cloud_from(pts), window),
                      InsufficientSamples);
}

TEST_CASE("interior ball certificates on linear maps") {
    auto identity = [](const Vec& x) { return x; };
    BallCertificate id = interior_certificate(identity, Vec::Zero(2));
    REQUIRE(id.lambda == Catch::Approx(0.5).margin(1e-9));
    REQUIRE(id.epsilon == Catch::Approx(1.0).margin(1e-12));
    REQUIRE(id.success_count == id.tested_targets.size());
    REQUIRE(id.tested_targets.size() == 50);
    REQUIRE(id.residual_max <= 1e-10);

    auto rot = [](const Vec& x) { return Vec(v2(x[0] + x[1], x[0] - x[1])); };
    BallCertificate r = interior_certificate(rot, v2(0.3, -0.2));
    REQUIRE(r.lambda == Catch::Approx(std::sqrt(2.0) / 2.0).margin(1e-9));
    REQUIRE(r.success_count == r.tested_targets.size());

    auto collapse = [](const Vec& x) { return Vec(v2(x[0] + x[1], x[0] + x[1])); };
    REQUIRE_THROWS_AS(interior_certificate(collapse, Vec::Zero(2)),
                      FullRankFailure);
    auto widen = [](const Vec& x) { return Vec(v2(x[0], 2.0 * x[0])); };
    REQUIRE_THROWS_AS(interior_certificate(widen, Vec::Zero(1)),
                      DimensionMismatch);
}

TEST_CASE("interior ball certificate for a lifted parabola map") {
    // h(x, a) = (a, 2 x a - x^2), the tangent-plane evaluation of f = x^2.
    auto h = [](const Vec& v) {
        return Vec(v2(v[1], 2.0 * v[0] * v[1] - v[0] * v[0]));
    };
    BallCertificate c = interior_certificate(h, v2(0.0, 1.0));
    Mat expect(2, 2);
    expect << 0.0, 1.0, 2.0, 0.0;
    REQUIRE((c.jacobian - expect).cwiseAbs().maxCoeff() < 1e-6);
    REQUIRE(c.lambda > 0.0);
    REQUIRE(c.epsilon > 0.0);
    REQUIRE(c.success_count > 0);
    // The certified ball is nonempty and most targets are actually reached.
    REQUIRE(c.success_count >= 45);
}

TEST_CASE("certificate residual test rejects kinked maps") {
    auto kink = [](const Vec& x) {
        return Vec(v2(x[0] + 2.0 * std::abs(x[0]), x[1]));
    };
    REQUIRE_THROWS_AS(interior_certificate(kink, Vec::Zero(2)),
                      ResidualTestFailed);
}

TEST_CASE("estimate serialization") {
    auto segment = [](std::uint64_t i) {
        Vec q(2);
        q << uniform01(11, i, 0), 0.25;
        return q;
    };
    BoxCountConfig cfg;
    cfg.max_samples = 1ULL << 18;
    DimensionEstimate est =
        box_counting_dimension(segment, Box::cube(2, 0.0, 1.0), cfg);
    json j = to_json(est);
    for (const char* key : {"scales", "counts", "slope", "r2", "scale_window"})
        REQUIRE(j.contains(key));

    auto identity = [](const Vec& x) { return x; };
    json jc = to_json(interior_certificate(identity, Vec::Zero(2)));
    for (const char* key : {"x0", "y0", "jacobian", "lambda", "epsilon",
                            "tested_targets", "success_count", "residual_max"})
        REQUIRE(jc.contains(key));
}

TEST_CASE("product cloud occupancy is the tensor of factor occupancies") {
    Box plane = Box::cube(2, 0.0, 1.0);
    std::vector<Vec> a_pts, b_pts;
    for (int i = 0; i < 40; ++i) {
        a_pts.push_back(plane.map_unit(unit_sample(SamplerKind::UniformRandom, 31, i, 2)));
        b_pts.push_back(plane.map_unit(unit_sample(SamplerKind::UniformRandom, 37, i, 2)));
    }
    const double delta = 0.25;
    GridOccupancy a(plane, delta), b(plane, delta);
    for (const Vec& p : a_pts) a.insert(p);
    for (const Vec& p : b_pts) b.insert(p);

    GridOccupancy prod(Box::cube(4, 0.0, 1.0), delta);
    for (const Vec& p : a_pts)
        for (const Vec& q : b_pts) {
            Vec r(4);
            r << p, q;
            prod.insert(r);
        }
    REQUIRE(prod.occupied_count == a.occupied_count * b.occupied_count);
}
