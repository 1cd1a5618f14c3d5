#include <cmath>
#include <random>

#include "catch_amalgamated.hpp"
#include "ipx/errors.hpp"
#include "ipx/pwl.hpp"
#include "oracles.hpp"

using namespace ipx;
using Catch::Approx;

TEST_CASE("Piecewise-linear evaluation inside and outside the domain") {
    const PwlConvex f({0.0, 1.0, 3.0}, {2.0, 1.0, 3.0});
    CHECK(f.eval(0.5) == Approx(1.5));
    CHECK(f.eval(2.0) == Approx(2.0));
    CHECK(f.eval(3.0) == Approx(3.0));
    CHECK(f.eval(3.0 + 1e-14) == Approx(3.0));
    CHECK(f.eval(-0.1) == kInf);
    CHECK(f.eval(3.5) == kInf);
    CHECK(f.is_convex());
    CHECK(f.slopes() == std::vector<double>{-1.0, 1.0});

    const PwlConvex p = PwlConvex::point(2.0, 5.0);
    CHECK(p.degenerate());
    CHECK(p.eval(2.0) == 5.0);
    CHECK(p.eval(2.1) == kInf);

    CHECK_THROWS_AS(PwlConvex({0.0, 0.0}, {1.0, 2.0}), NumericError);
    CHECK_THROWS_AS(PwlConvex({0.0, 1.0}, {1.0}), NumericError);
}

TEST_CASE("Convexification keeps the lower hull of the points") {
    const PwlConvex f = PwlConvex::convexified({3.0, 0.0, 1.0, 2.0, 1.0}, {3.0, 0.0, 2.0, 0.5, 0.2});
    CHECK(f.xs() == std::vector<double>{0.0, 1.0, 2.0, 3.0});
    CHECK(f.ys()[1] == Approx(0.2));
    CHECK(f.is_convex());
    const PwlConvex g({0.0, 1.0, 2.0}, {0.0, 2.0, 0.0});
    CHECK_FALSE(g.is_convex());
}

TEST_CASE("Interval minimum and support points") {
    const PwlConvex f({0.0, 1.0, 2.0, 4.0}, {3.0, 1.0, 1.0, 5.0});
    MinResult m = min_on_interval(f, -5.0, 5.0);
    CHECK(m.value == Approx(1.0));
    CHECK(m.x == Approx(1.5));  // midpoint of the flat face
    m = min_on_interval(f, 3.0, 3.5);
    CHECK(m.x == Approx(3.0));
    CHECK(m.value == Approx(3.0));
    CHECK_THROWS_AS(min_on_interval(f, 5.0, 6.0), DomainError);

    const Support s = support_min(f, 0.5);
    CHECK(s.x == 2.0);
    CHECK(s.c == Approx(1.0 - 0.5 * 2.0));
    CHECK(support_min(f, -10.0).x == 0.0);
    CHECK(support_min(f, 10.0).x == 4.0);
}

TEST_CASE("Hull of two points matches the closed-form mixture") {
    const PwlConvex f1 = PwlConvex::point(1.0, 0.3), f2 = PwlConvex::point(4.0, -0.2);
    for (double a : {0.0, 0.3, 5.0}) {
        for (double x : {1.0, 1.5, 2.5, 3.9, 4.0}) {
            const HullResult r = hull_value({{&f1, 0.3}, {&f2, 0.7}}, a, x);
            CHECK(r.value == Approx(oracle::two_point_hull(1.0, 0.3, 4.0, -0.2, 0.3, a, x)).margin(1e-10));
            CHECK(r.mean_residual < 1e-10);
        }
    }
    CHECK_THROWS_AS(hull_value({{&f1, 0.5}, {&f2, 0.5}}, 1.0, 4.5), DomainError);
}

TEST_CASE("Single child hull adds the prior penalty only") {
    const PwlConvex f({0.0, 1.0, 2.0}, {1.0, 0.0, 0.5});
    for (double x : {0.0, 0.4, 1.0, 1.7}) {
        CHECK(hull_value({{&f, 1.0}}, 2.0, x).value == Approx(f.eval(x)).margin(1e-12));
        CHECK(hull_value({{&f, 0.5}}, 2.0, x).value == Approx(f.eval(x) - 2.0 * std::log(0.5)).margin(1e-12));
    }
}

TEST_CASE("Hull matches brute force on random instances") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    int checked = 0;
    for (int trial = 0; trial < 60; ++trial) {
        const int m = 1 + trial % 3;
        std::vector<PwlConvex> fs;
        std::vector<HullChild> kids;
        double total = 0.0;
        std::vector<double> w(m);
        for (auto& v : w) total += (v = 0.2 + U(rng));
        for (int k = 0; k < m; ++k) {
            const double lo = -1.0 + 2.0 * U(rng);
            fs.push_back(oracle::random_convex(rng, lo, lo + 0.2 + 2.0 * U(rng), 1 + static_cast<int>(4 * U(rng))));
        }
        for (int k = 0; k < m; ++k) kids.push_back({&fs[k], w[k] / total});
        const double a = std::array<double, 3>{0.0, 0.3, 5.0}[trial % 3 == 0 ? 1 : (trial / 3) % 3];
        const Hull h(kids, a);
        for (int i = 0; i < 4; ++i) {
            const double x = h.lo() + (h.hi() - h.lo()) * U(rng);
            const HullResult r = h.solve(x);
            const double bf = hull_brute_force(kids, a, x, 40000);
            CHECK(r.value == Approx(bf).margin(1e-6));
            CHECK(r.value <= bf + 1e-9);
            double qs = 0.0;
            for (double q : r.q) qs += q;
            CHECK(qs == Approx(1.0));
            CHECK(r.mean_residual < 1e-9 * (1.0 + std::abs(x)));
            ++checked;
        }
    }
    CHECK(checked == 240);
}

TEST_CASE("Dual multiplier is a subgradient of the hull") {
    std::mt19937_64 rng(5);
    const PwlConvex f1 = oracle::random_convex(rng, 0.0, 2.0, 3), f2 = oracle::random_convex(rng, 1.0, 3.0, 4);
    const Hull h({{&f1, 0.4}, {&f2, 0.6}}, 0.7);
    for (double x : {0.3, 1.0, 1.8, 2.6}) {
        const HullResult r = h.solve(x);
        for (double y : {0.1, 0.9, 1.5, 2.2, 2.9}) CHECK(h.solve(y).value >= r.value + r.theta * (y - x) - 1e-9);
    }
}

TEST_CASE("Zero-weight hull is the lower convex envelope of the children") {
    const PwlConvex f1({0.0, 2.0}, {1.0, 0.0}), f2({1.0, 3.0}, {-1.0, 2.0});
    const std::vector<HullChild> kids{{&f1, 0.5}, {&f2, 0.5}};
    const PwlConvex env = convex_envelope(kids, 0.0, 3.0);
    // Breakpoints (0,1), (2,0), (1,-1), (3,2) are all on the lower hull.
    CHECK(env.eval(0.0) == Approx(1.0));
    CHECK(env.eval(1.0) == Approx(-1.0));
    CHECK(env.eval(2.0) == Approx(0.0));
    for (double x : {0.25, 0.8, 1.6, 2.7}) CHECK(hull_value(kids, 0.0, x).value == Approx(env.eval(x)).margin(1e-12));
    const PwlConvex part = convex_envelope(kids, 0.5, 2.0);
    CHECK(part.lo() == 0.5);
    CHECK(part.hi() == 2.0);
}

TEST_CASE("Upper and lower approximations sandwich the hull and tighten with the mesh") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<PwlConvex> fs;
        const int m = 2 + trial % 2;
        for (int k = 0; k < m; ++k) fs.push_back(oracle::random_convex(rng, -1.0 + k, 1.0 + k, 4));
        std::vector<HullChild> kids;
        for (int k = 0; k < m; ++k) kids.push_back({&fs[k], 1.0 / m});
        const double a = trial % 3 == 0 ? 5.0 : 0.3;
        const Hull h(kids, a);
        const double l = h.lo() + 0.2 * (h.hi() - h.lo()) * U(rng);
        const double u = h.hi() - 0.2 * (h.hi() - h.lo()) * U(rng);
        double last_gap = kInf;
        for (int n : {4, 8, 16, 32}) {
            const PwlConvex up = hull_upper(kids, a, l, u, n), lo = hull_lower(kids, a, l, u, n);
            CHECK(up.is_convex());
            CHECK(lo.is_convex());
            double gap = 0.0;
            for (int i = 0; i <= 200; ++i) {
                const double x = l + (u - l) * i / 200.0;
                const double exact = h.solve(x).value;
                CHECK(lo.eval(x) <= exact + 1e-9);
                CHECK(up.eval(x) >= exact - 1e-9);
                gap = std::max(gap, up.eval(x) - lo.eval(x));
            }
            CHECK(gap <= last_gap + 1e-12);
            last_gap = gap;
        }
    }
}

TEST_CASE("Lower approximation handles intervals touching the hull domain") {
    const PwlConvex f1({0.0, 1.0}, {0.0, 0.5}), f2({2.0, 3.0}, {1.0, 0.0});
    const std::vector<HullChild> kids{{&f1, 0.5}, {&f2, 0.5}};
    const Hull h(kids, 1.0);
    const PwlConvex lo = hull_lower(kids, 1.0, 0.0, 3.0, 10);
    CHECK(lo.lo() == 0.0);
    CHECK(lo.hi() == 3.0);
    for (int i = 0; i <= 60; ++i) {
        const double x = 3.0 * i / 60.0;
        CHECK(lo.eval(x) <= h.solve(x).value + 1e-9);
    }
    CHECK_THROWS_AS(hull_upper(kids, 1.0, 0.0, 1.0, 0), InputError);
}
