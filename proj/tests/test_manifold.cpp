#include <catch2/catch_amalgamated.hpp>

#include "codlab/gallery.hpp"

using namespace codlab;

namespace {

Chart zero_graph_1d() {
    return Chart::graph(1, 2, Box::standard_cube(1),
                        [](const Vec&) { return Vec::Zero(1); }, nullptr, nullptr,
                        "zero");
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
    auto h = [](const Vec&) {
        std::vector<Mat> out(1, Mat(1, 1));
        out[0] << 2.0;
        return out;
    };
    return Chart::graph(1, 2, Box::standard_cube(1), f, j, h, "parabola");
}

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

// Deterministic rotation built from a Householder reflection pair.
Mat rotation_from(const Vec& w) {
    const int n = static_cast<int>(w.size());
    Vec u = w.normalized();
    Mat h = Mat::Identity(n, n) - 2.0 * u * u.transpose();
    // Compose with a coordinate swap reflection to get determinant +1.
    Mat s = Mat::Identity(n, n);
    s.col(0).swap(s.col(1));
    return h * s;
}

}  // namespace

TEST_CASE("embed evaluates placed graph charts") {
    Chart zero = zero_graph_1d();
    REQUIRE((embed(zero, v1(0.3)) - v2(0.3, 0.0)).norm() == 0.0);

    Chart quartic = twisted_quartic();
    Vec p = embed(quartic, v1(1.0));
    REQUIRE((p - Vec::Ones(4)).norm() < 1e-15);

    Chart par = parabola_1d();
    par.place(Mat::Identity(2, 2), v2(1.0, 1.0));
    REQUIRE((embed(par, v1(0.5)) - v2(1.5, 1.25)).norm() < 1e-15);

    REQUIRE_THROWS_AS(embed(zero, v1(4.0)), DomainViolation);
    REQUIRE_THROWS_AS(embed(zero, v2(0.0, 0.0)), DimensionMismatch);
}

TEST_CASE("jacobian matches hand derivatives") {
    Chart affine = Chart::graph(1, 2, Box::standard_cube(1), [](const Vec& x) {
        Vec v(1);
        v << 2.0 * x[0] + 1.0;
        return v;
    });
    REQUIRE(jacobian(affine, v1(0.7))(0, 0) == Catch::Approx(2.0).margin(1e-9));

    Chart par = parabola_1d();
    REQUIRE(jacobian(par, v1(0.5))(0, 0) == 1.0);

    Chart xy = Chart::graph(2, 3, Box::standard_cube(2), [](const Vec& x) {
        Vec v(1);
        v << x[0] * x[1];
        return v;
    });
    Mat j = jacobian(xy, v2(1.0, 2.0));
    REQUIRE(j(0, 0) == Catch::Approx(2.0).margin(1e-8));
    REQUIRE(j(0, 1) == Catch::Approx(1.0).margin(1e-8));
}

TEST_CASE("finite differences track analytic derivatives on cubics") {
    // Same cubic map, once with and once without analytic oracles.
    auto f = [](const Vec& x) {
        Vec v(1);
        v << x[0] * x[0] * x[0] - 2.0 * x[0] * x[1] * x[1] + x[1];
        return v;
    };
    auto j = [](const Vec& x) {
        Mat m(1, 2);
        m << 3.0 * x[0] * x[0] - 2.0 * x[1] * x[1], -4.0 * x[0] * x[1] + 1.0;
        return m;
    };
    auto h = [](const Vec& x) {
        std::vector<Mat> out(1, Mat(2, 2));
        out[0] << 6.0 * x[0], -4.0 * x[1], -4.0 * x[1], -4.0 * x[0];
        return out;
    };
    Box dom = Box::cube(2, -1.0, 1.0);
    Chart analytic = Chart::graph(2, 3, dom, f, j, h);
    Chart fd = Chart::graph(2, 3, dom, f);
    double worst_j = 0.0, worst_h = 0.0;
    for (int g = 0; g < 100; ++g) {
        Vec u = unit_sample(SamplerKind::Grid, 0, g, 2, 100);
        Vec x = dom.map_unit(u);
        worst_j = std::max(worst_j,
                           (jacobian(analytic, x) - jacobian(fd, x)).cwiseAbs().maxCoeff());
        auto ha = hessian(analytic, x);
        auto hn = hessian(fd, x);
        worst_h = std::max(worst_h, (ha[0] - hn[0]).cwiseAbs().maxCoeff());
    }
    REQUIRE(worst_j < 1e-9);
    REQUIRE(worst_h < 1e-5);
}

TEST_CASE("tangent and normal frames") {
    Chart zero = zero_graph_1d();
    Mat t = tangent_frame(zero, v1(0.1));
    Mat n = normal_frame(zero, v1(0.1));
    REQUIRE((t.col(0) - v2(1.0, 0.0)).norm() < 1e-12);
    REQUIRE((n.col(0) - v2(0.0, 1.0)).norm() < 1e-12);

    Chart par = parabola_1d();
    REQUIRE((tangent_frame(par, v1(0.0)).col(0) - v2(1.0, 0.0)).norm() < 1e-12);
    REQUIRE((normal_frame(par, v1(0.0)).col(0) - v2(0.0, 1.0)).norm() < 1e-12);

    Chart diag = Chart::graph(1, 2, Box::standard_cube(1), [](const Vec& x) {
        return Vec(x);
    });
    Vec td = tangent_frame(diag, v1(0.0)).col(0);
    Vec nd = normal_frame(diag, v1(0.0)).col(0);
    const double s = 1.0 / std::sqrt(2.0);
    REQUIRE(std::min((td - v2(s, s)).norm(), (td + v2(s, s)).norm()) < 1e-8);
    REQUIRE(std::min((nd - v2(-s, s)).norm(), (nd + v2(-s, s)).norm()) < 1e-8);

    // Concatenated frame is orthogonal.
    Mat cat(2, 2);
    cat << td, nd;
    REQUIRE((cat.transpose() * cat - Mat::Identity(2, 2)).cwiseAbs().maxCoeff() <
            kTolOrth);
}

TEST_CASE("osculating report ranks") {
    Chart quartic = twisted_quartic();
    OsculatingReport rep = osculating_report(quartic, v1(0.0));
    REQUIRE(rep.tangent_rank == 1);
    REQUIRE(rep.osculating_rank == 2);

    Chart affine = Chart::graph(2, 4, Box::standard_cube(2), [](const Vec& x) {
        Vec v(2);
        v << x[0] + x[1], 2.0 * x[0];
        return v;
    });
    REQUIRE(osculating_report(affine, v2(0.2, -0.1)).osculating_rank == 2);

    Chart paraboloid = Chart::graph(2, 3, Box::standard_cube(2), [](const Vec& x) {
        Vec v(1);
        v << x.squaredNorm();
        return v;
    });
    OsculatingReport pr = osculating_report(paraboloid, v2(0.0, 0.0));
    REQUIRE(pr.osculating_rank == 3);
    REQUIRE(pr.hessian_min_singular_value == Catch::Approx(2.0).margin(1e-5));
}

TEST_CASE("osculating rank is placement invariant") {
    Chart quartic = twisted_quartic();
    Vec w(4);
    w << 0.3, -1.2, 0.5, 2.0;
    Chart placed_a = twisted_quartic();
    placed_a.place(rotation_from(w), Vec::Constant(4, 3.0));
    Chart placed_b = twisted_quartic();
    Vec w2(4);
    w2 << -0.8, 0.1, 1.4, -0.6;
    placed_b.place(rotation_from(w2), Vec::Constant(4, -1.0));
    for (double t : {0.0, 0.5, -1.1}) {
        const int base = osculating_report(quartic, v1(t)).osculating_rank;
        REQUIRE(osculating_report(placed_a, v1(t)).osculating_rank == base);
        REQUIRE(osculating_report(placed_b, v1(t)).osculating_rank == base);
    }
}

TEST_CASE("inflection classification of hypersurfaces") {
    Chart bowl = Chart::graph(2, 3, Box::standard_cube(2), [](const Vec& x) {
        Vec v(1);
        v << x.squaredNorm();
        return v;
    });
    REQUIRE_FALSE(is_inflection(bowl, v2(0.0, 0.0), 1e-6));

    Chart trough = Chart::graph(2, 3, Box::standard_cube(2), [](const Vec& x) {
        Vec v(1);
        v << x[0] * x[0];
        return v;
    });
    REQUIRE(is_inflection(trough, v2(0.0, 0.0), 1e-6));

    Chart saddle = Chart::graph(2, 3, Box::standard_cube(2), [](const Vec& x) {
        Vec v(1);
        v << x[0] * x[1];
        return v;
    });
    REQUIRE_FALSE(is_inflection(saddle, v2(0.0, 0.0), 1e-6));

    REQUIRE_THROWS_AS(is_inflection(twisted_quartic(), v1(0.0), 1e-6),
                      NotAHypersurface);
}

TEST_CASE("nonlinearity probe") {
    Chart affine = Chart::graph(1, 2, Box::standard_cube(1), [](const Vec& x) {
        Vec v(1);
        v << 3.0 * x[0] - 0.5;
        return v;
    });
    REQUIRE(nonlinearity_probe(affine, v1(-1.0), v1(1.0), 201) < 1e-14);

    Chart par = parabola_1d();
    REQUIRE(nonlinearity_probe(par, v1(-1.0), v1(1.0), 201) ==
            Catch::Approx(1.0).margin(1e-12));

    Chart xy = Chart::graph(2, 3, Box::standard_cube(2), [](const Vec& x) {
        Vec v(1);
        v << x[0] * x[1];
        return v;
    });
    REQUIRE(nonlinearity_probe(xy, v2(-1.0, 0.0), v2(1.0, 0.0), 101) < 1e-14);

    REQUIRE_THROWS_AS(nonlinearity_probe(par, v1(0.0), v1(0.5), 2), ConfigError);
}
