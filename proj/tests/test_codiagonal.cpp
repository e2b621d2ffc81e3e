#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "codlab/codiagonal.hpp"
#include "codlab/gallery.hpp"

using namespace codlab;

namespace {

Vec v1(double a) {
    Vec v(1);
    v << a;
    return v;
}

Vec v2(double a, double b) {
    Vec v(2);
    v << a, b;
    return v;
}

Chart parabola_1d() {
    auto f = [](const Vec& x) {
        Vec v(1);
        v << x[0] * x[0];
        return v;
    };
    auto j = [](const Vec& x) {
        Mat m(1, 1);
        m << 2.0 * x[0];
        return m;
    };
    return Chart::graph(1, 2, Box::standard_cube(1), f, j, nullptr, "parabola");
}

SweepSpec ld_spec(const Box& base, const Box& fiber, std::uint64_t count,
                  std::uint64_t seed) {
    AxisSampler b{SamplerKind::LowDiscrepancy, base};
    AxisSampler f{SamplerKind::LowDiscrepancy, fiber};
    return SweepSpec("test", b, f, count, seed);
}

}  // namespace

TEST_CASE("section transform evaluates tangent planes") {
    Chart affine = Chart::graph(1, 2, Box::standard_cube(1), [](const Vec& x) {
        Vec v(1);
        v << 3.0 * x[0] - 0.5;
        return v;
    });
    // An affine graph is its own tangent plane: the transform ignores x.
    for (double x : {-1.0, 0.0, 0.7})
        REQUIRE(section_transform(affine, v1(2.0), v1(x))[0] ==
                Catch::Approx(5.5).margin(1e-9));

    Chart par = parabola_1d();
    REQUIRE(section_transform(par, v1(0.0), v1(0.5))[0] ==
            Catch::Approx(-0.25).margin(1e-15));
    // Based at the evaluation point, the transform recovers the function.
    REQUIRE(section_transform(par, v1(0.8), v1(0.8))[0] ==
            Catch::Approx(0.64).margin(1e-15));

    Chart parametric = circle_arc(Vec::Zero(2), 1.0, 0.0, +1, 2 * kPi, "circle");
    REQUIRE_THROWS_AS(section_transform(parametric, v1(0.1), v1(0.2)),
                      DerivativeUnavailable);
}

TEST_CASE("lifted section map") {
    Chart par = parabola_1d();
    Vec q = lifted_section_map(par, v1(0.5), v1(0.0));
    REQUIRE((q - v2(0.0, -0.25)).norm() < 1e-15);

    // Placement moves the lift by the chart's rigid motion.
    Chart placed = parabola_1d();
    placed.place(Mat::Identity(2, 2), v2(1.0, 1.0));
    Vec qp = lifted_section_map(placed, v1(0.5), v1(0.0));
    REQUIRE((qp - v2(1.0, 0.75)).norm() < 1e-15);
}

TEST_CASE("lift along a tangent offset matches the differential") {
    // Phi_f(x, x + xi) = (x + xi, f(x) + (J_x f) xi), checked over many inputs.
    auto f = [](const Vec& x) {
        Vec v(2);
        v << x[0] * x[0] - x[1], std::sin(x[0]) * x[1];
        return v;
    };
    Chart chart = Chart::graph(2, 4, Box::cube(2, -2.0, 2.0), f);
    double worst = 0.0;
    for (int i = 0; i < 500; ++i) {
        Vec u = unit_sample(SamplerKind::LowDiscrepancy, 3, i, 4);
        Vec x = Box::cube(2, -1.5, 1.5).map_unit(u.head(2));
        Vec xi = Box::cube(2, -0.4, 0.4).map_unit(u.tail(2));
        Vec lhs = lifted_section_map(chart, x, x + xi);
        Vec rhs(4);
        rhs.head(2) = x + xi;
        rhs.tail(2) = chart.graph_map(x) + jacobian(chart, x) * xi;
        worst = std::max(worst, (lhs - rhs).cwiseAbs().maxCoeff());
    }
    REQUIRE(worst <= 1e-12);
}

TEST_CASE("section transform is linear in the section") {
    auto f = [](const Vec& x) {
        Vec v(2);
        v << x[0] * x[0] + x[1], x[0] * x[1];
        return v;
    };
    auto jf = [](const Vec& x) {
        Mat m(2, 2);
        m << 2.0 * x[0], 1.0, x[1], x[0];
        return m;
    };
    auto g = [](const Vec& x) {
        Vec v(2);
        v << x[1] * x[1], 2.0 * x[0] - x[1];
        return v;
    };
    auto jg = [](const Vec& x) {
        Mat m(2, 2);
        m << 0.0, 2.0 * x[1], 2.0, -1.0;
        return m;
    };
    Box dom = Box::cube(2, -2.0, 2.0);
    Chart cf = Chart::graph(2, 4, dom, f, jf);
    Chart cg = Chart::graph(2, 4, dom, g, jg);

    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
        Vec u = unit_sample(SamplerKind::LowDiscrepancy, 5, i, 8);
        Vec x = Box::cube(2, -1.0, 1.0).map_unit(u.head(2));
        Vec a = Box::cube(2, -1.0, 1.0).map_unit(u.segment(2, 2));
        Mat A(2, 2);
        A << u[4] - 0.5, u[5] + 0.2, u[6] - 0.8, u[7] + 0.1;
        auto combo = [&](const Vec& y) { return Vec(A * f(y) + g(y)); };
        auto jcombo = [&](const Vec& y) { return Mat(A * jf(y) + jg(y)); };
        Chart cc = Chart::graph(2, 4, dom, combo, jcombo);
        Vec lhs = section_transform(cc, a, x);
        Vec rhs = A * section_transform(cf, a, x) + section_transform(cg, a, x);
        worst = std::max(worst, (lhs - rhs).cwiseAbs().maxCoeff());
    }
    REQUIRE(worst <= 1e-12);
}

TEST_CASE("section transform is equivariant under affine reparametrization") {
    auto f = [](const Vec& x) {
        Vec v(1);
        v << x[0] * x[0] * x[1] + std::cos(x[1]);
        return v;
    };
    auto jf = [](const Vec& x) {
        Mat m(1, 2);
        m << 2.0 * x[0] * x[1], x[0] * x[0] - std::sin(x[1]);
        return m;
    };
    Mat L(2, 2);
    L << 0.6, -0.3, 0.2, 0.9;
    Vec c = v2(0.1, -0.2);
    auto ell = [&](const Vec& y) { return Vec(L * y + c); };

    Box big = Box::cube(2, -4.0, 4.0);
    Chart cf = Chart::graph(2, 3, big, f, jf);
    auto fl = [&](const Vec& y) { return f(ell(y)); };
    Chart analytic = Chart::graph(
        2, 3, big, fl, [&](const Vec& y) { return Mat(jf(ell(y)) * L); });
    Chart numeric = Chart::graph(2, 3, big, fl);

    double worst_analytic = 0.0, worst_fd = 0.0;
    for (int i = 0; i < 100; ++i) {
        Vec u = unit_sample(SamplerKind::LowDiscrepancy, 9, i, 4);
        Vec x = Box::cube(2, -1.0, 1.0).map_unit(u.head(2));
        Vec a = Box::cube(2, -1.0, 1.0).map_unit(u.tail(2));
        Vec rhs = section_transform(cf, ell(a), ell(x));
        worst_analytic = std::max(
            worst_analytic,
            (section_transform(analytic, a, x) - rhs).cwiseAbs().maxCoeff());
        worst_fd = std::max(
            worst_fd,
            (section_transform(numeric, a, x) - rhs).cwiseAbs().maxCoeff());
    }
    REQUIRE(worst_analytic <= 1e-12);
    REQUIRE(worst_fd <= 1e-6);
}

TEST_CASE("tangent sweep keeps the sampled base coordinates") {
    auto f = [](const Vec& x) {
        Vec v(1);
        v << x[0] * x[0] - 0.3 * x[1];
        return v;
    };
    Chart chart = Chart::graph(2, 3, Box::cube(2, -2.0, 2.0), f);
    SweepSpec spec =
        ld_spec(Box::cube(2, -1.0, 1.0), Box::cube(2, -2.0, 2.0), 300, 42);
    PointCloud cloud = sweep_tangent(chart, spec);
    REQUIRE(cloud.size() == 300);
    for (std::uint64_t i = 0; i < cloud.size(); ++i) {
        auto [x, a] = spec.sample(i);
        (void)x;
        REQUIRE((cloud.point(i).head(2) - a).norm() == 0.0);
    }
}

TEST_CASE("normal sweep lands on normal lines") {
    Chart par = parabola_1d();
    // A one-point grid sample sits at the box midpoint, pinning x = 1 and
    // b = 1.25: the single output must be the hand-computed foot (0.5, 1.25).
    AxisSampler base{SamplerKind::Grid, Box::cube(1, 0.5, 1.5)};
    AxisSampler fiber{SamplerKind::Grid, Box::cube(1, 0.75, 1.75)};
    PointCloud one = sweep_normal(par, SweepSpec("pin", base, fiber, 1, 0));
    REQUIRE((one.point(0) - v2(0.5, 1.25)).norm() < 1e-12);

    // Orthogonality (q - p) ⟂ T_p across a generic sweep.
    SweepSpec spec =
        ld_spec(Box::cube(1, -1.0, 1.0), Box::cube(1, -2.0, 2.0), 400, 13);
    PointCloud cloud = sweep_normal(par, spec);
    double worst = 0.0;
    for (std::uint64_t i = 0; i < cloud.size(); ++i) {
        auto [x, b] = spec.sample(i);
        (void)b;
        Vec p = embed(par, x);
        Vec t = tangent_frame(par, x).col(0);
        worst = std::max(worst, std::abs((cloud.point(i) - p).dot(t)));
    }
    REQUIRE(worst <= kTolOrth);
}

TEST_CASE("bundle sweep stays on the fibers") {
    Chart par = parabola_1d();
    FramedBundle nb = make_normal_bundle(par);
    SweepSpec spec =
        ld_spec(Box::cube(1, -0.9, 0.9), Box::cube(1, -1.5, 1.5), 200, 21);
    PointCloud cloud = sweep_bundle(nb, spec);
    for (std::uint64_t i = 0; i < cloud.size(); ++i) {
        auto [x, xi] = spec.sample(i);
        (void)xi;
        REQUIRE(line_distance(cloud.point(i), embed(par, x),
                              nb.frame(x).col(0)) <= 1e-12);
    }
}

TEST_CASE("sweeps are independent of the thread count") {
    auto f = [](const Vec& x) {
        Vec v(1);
        v << std::sin(3.0 * x[0]) * x[1];
        return v;
    };
    Chart chart = Chart::graph(2, 3, Box::cube(2, -2.0, 2.0), f);
    SweepSpec spec =
        ld_spec(Box::cube(2, -1.0, 1.0), Box::cube(2, -1.0, 1.0), 5000, 77);
    PointCloud a = sweep_tangent(chart, spec, 1);
    PointCloud b = sweep_tangent(chart, spec, 3);
    PointCloud c = sweep_tangent(chart, spec, 7);
    REQUIRE(a.data == b.data);
    REQUIRE(a.data == c.data);
}

TEST_CASE("half-line families") {
    auto identity = [](const Vec& x) { return x; };
    auto zero = [](const Vec& x) { return Vec(Vec::Zero(x.size())); };
    AxisSampler base{SamplerKind::LowDiscrepancy, Box::cube(2, 0.0, 1.0)};
    AxisSampler fiber{SamplerKind::LowDiscrepancy, Box::cube(1, 0.5, 4.0)};
    SweepSpec spec("halfline", base, fiber, 500, 3);

    PointCloud cloud = halfline_family(identity, zero, 2, spec);
    REQUIRE(cloud.n == 3);
    for (std::uint64_t i = 0; i < cloud.size(); ++i) {
        Vec q = cloud.point(i);
        REQUIRE(q[0] >= 0.5);
        // gamma_x(t) = (t, t x) with |x| <= 1 stays in the cone |y| <= t.
        REQUIRE(q.tail(2).norm() <= q[0] + 1e-12);
    }

    auto doubled = [](const Vec& x) { return Vec(2.0 * x); };
    REQUIRE_THROWS_AS(halfline_family(doubled, zero, 2, spec),
                      BoundaryConditionViolated);

    AxisSampler bad{SamplerKind::LowDiscrepancy, Box::cube(1, -1.0, 1.0)};
    REQUIRE_THROWS_AS(
        halfline_family(identity, zero, 2, SweepSpec("bad", base, bad, 10, 0)),
        ConfigError);
}

TEST_CASE("projective line families") {
    auto fzero = [](const Vec&) { return 0.0; };
    auto bzero = [](const Vec& x) { return Vec(Vec::Zero(x.size())); };
    AxisSampler base{SamplerKind::LowDiscrepancy, Box::cube(2, 0.0, 1.0)};
    AxisSampler fiber{SamplerKind::LowDiscrepancy, Box::cube(1, -2.0, 2.0)};
    SweepSpec spec("projective", base, fiber, 500, 4);

    // f = 0, beta = 0: ell_x(t) = (t, x) sweeps a slab over the unit disk.
    PointCloud cloud = projective_line_family(fzero, bzero, 2, spec);
    for (std::uint64_t i = 0; i < cloud.size(); ++i) {
        Vec q = cloud.point(i);
        REQUIRE(std::abs(q[0]) <= 2.0 + 1e-12);
        REQUIRE(q.tail(2).norm() <= 1.0 + 1e-12);
    }

    auto tilt = [](const Vec& x) { return x[0]; };
    REQUIRE_THROWS_AS(projective_line_family(tilt, bzero, 2, spec),
                      BoundaryConditionViolated);
}

TEST_CASE("distance to a line") {
    REQUIRE(line_distance(v2(0.0, 0.0), v2(1.0, 0.0), v2(0.0, 1.0)) ==
            Catch::Approx(1.0).margin(1e-15));
    Vec q = Vec::Ones(3);
    REQUIRE(line_distance(q, Vec::Zero(3), Vec::Unit(3, 0)) ==
            Catch::Approx(std::sqrt(2.0)).margin(1e-15));
    REQUIRE_THROWS_AS(line_distance(q, Vec::Zero(3), 2.0 * Vec::Unit(3, 0)),
                      BadDirection);
}

TEST_CASE("sampled values of a continuous sweep have no large gaps") {
    // The transform phi_f^0(x) = -x^2 for f = x^2 is continuous, so at
    // resolution m every value between min and max should be within
    // (max - min) / m of some sample.
    Chart par = parabola_1d();
    const int big = 100000;
    const int m = 1000;
    std::vector<double> vals(big);
    for (int i = 0; i < big; ++i) {
        Vec u = unit_sample(SamplerKind::LowDiscrepancy, 1, i, 1);
        Vec x = Box::cube(1, -1.0, 1.0).map_unit(u);
        vals[i] = section_transform(par, v1(0.0), x)[0];
    }
    std::sort(vals.begin(), vals.end());
    const double tol = (vals.back() - vals.front()) / m;
    double gap = 0.0;
    for (int i = 1; i < big; ++i) gap = std::max(gap, vals[i] - vals[i - 1]);
    REQUIRE(gap <= 2.0 * tol);  // midpoints are within tol of a neighbor
}

TEST_CASE("cloud serialization round-trips") {
    Chart par = parabola_1d();
    SweepSpec spec =
        ld_spec(Box::cube(1, -1.0, 1.0), Box::cube(1, -2.0, 2.0), 50, 8);
    PointCloud cloud = sweep_tangent(par, spec);

    std::stringstream csv;
    write_csv(cloud, csv);
    PointCloud from_csv = read_csv(csv);
    REQUIRE(from_csv.n == cloud.n);
    REQUIRE(from_csv.data == cloud.data);

    std::stringstream bin(std::ios::in | std::ios::out | std::ios::binary);
    write_binary(cloud, bin);
    PointCloud from_bin = read_binary(bin);
    REQUIRE(from_bin.data == cloud.data);

    // load_cloud sniffs the format from the file contents.
    const std::string p1 = "roundtrip_cloud.csv";
    const std::string p2 = "roundtrip_cloud.bin";
    {
        std::ofstream f1(p1);
        write_csv(cloud, f1);
        std::ofstream f2(p2, std::ios::binary);
        write_binary(cloud, f2);
    }
    REQUIRE(load_cloud(p1).data == cloud.data);
    REQUIRE(load_cloud(p2).data == cloud.data);
    std::remove(p1.c_str());
    std::remove(p2.c_str());

    std::stringstream garbage("XYZ??");
    REQUIRE_THROWS_AS(read_binary(garbage), ConfigError);
}
