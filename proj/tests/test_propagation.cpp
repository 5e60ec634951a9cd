#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "support.hpp"
#include "tsspec/errors.hpp"
#include "tsspec/propagation.hpp"

using namespace tss;
using Catch::Approx;

namespace {

TimeScale four_points() { return testing::points({0, 1, 2, 3}); }

const PolyRat lam = PolyRat::identity();

double rel_err(Complex a, Complex b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

// Closed forms for [0,1] u [2,3] with q = 0, lambda = rho^2.
Complex twin_theta0(Complex rho)
{
    Complex s = std::sin(rho), c = std::cos(rho), l = rho * rho;
    return c * c + (2.0 - l) / rho * c * s - s * s;
}
Complex twin_theta1(Complex rho)
{
    Complex s = std::sin(rho), c = std::cos(rho), l = rho * rho;
    return (l - 1.0) * s * s + c * c - 2.0 * rho * s * c;
}

} // namespace

TEST_CASE("jump matrices of four points")
{
    TimeScale ts = four_points();
    Potential q = testing::zero_potential(ts);

    JumpMatrix a1 = jump_matrix(ts, q, 1);
    CHECK_FALSE(a1.row_only);
    CHECK(a1.a11 == PolyRat{1});
    CHECK(a1.a12 == PolyRat{1});
    CHECK(a1.a21 == PolyRat{0, -1});
    CHECK(a1.a22 == PolyRat{1, -1});

    JumpMatrix a3 = jump_matrix(ts, q, 3);
    CHECK(a3.row_only);
    CHECK(a3.a11 == PolyRat{1});
    CHECK(a3.a12 == PolyRat{1});

    CHECK_THROWS_AS(jump_matrix(ts, q, 0), IndexOutOfRange);
    CHECK_THROWS_AS(jump_matrix(ts, q, 4), IndexOutOfRange);

    Potential missing;
    missing.isolated = {{1, 0}};
    CHECK_THROWS_AS(jump_matrix(ts, missing, 2), MissingPotentialValue);
}

TEST_CASE("jump matrix at lambda = q is a shear")
{
    TimeScale ts = testing::points({0, Rational(5, 2), 4});
    Potential q;
    q.isolated = {{1, Rational(-1, 3)}};
    JumpMatrix a = jump_matrix(ts, q, 1);
    Mat2 m = a.eval(Complex(-1.0 / 3));
    CHECK(std::abs(m[0] - 1.0) < 1e-15);
    CHECK(std::abs(m[1] - 2.5) < 1e-15);
    CHECK(std::abs(m[2]) < 1e-15);
    CHECK(std::abs(m[3] - 1.0) < 1e-15);
}

TEST_CASE("jump matrices are unimodular")
{
    std::mt19937 rng(11);
    for (int trial = 0; trial < 30; ++trial) {
        auto [ts, q] = testing::random_discrete(rng);
        for (std::size_t l = 1; l + 1 < ts.size(); ++l) {
            JumpMatrix a = jump_matrix(ts, q, l);
            CHECK(a.a11 * a.a22 - a.a12 * a.a21 == PolyRat{1});
        }
    }
}

TEST_CASE("beta products")
{
    TimeScale ts = four_points();
    Potential q = testing::zero_potential(ts);
    CHECK(l_index(ts, 0) == 1);
    CHECK(l_index(ts, 1) == 4);

    BetaMatrix one = beta_product(ts, q, 1, 1);
    REQUIRE(one.n_rows() == 1);
    CHECK(one.entry(1, 1) == PolyRat{1});
    CHECK(one.entry(1, 2) == PolyRat{1});

    BetaMatrix full = beta_product(ts, q, 1, 3);
    REQUIRE(full.n_rows() == 1);
    CHECK(full.entry(1, 2) == PolyRat{3, -4, 1});
    CHECK(full.entry(1, 1) == PolyRat{1, -3, 1});

    CHECK_THROWS_AS(beta_product(ts, q, 1, 4), IndexOutOfRange);
    CHECK_THROWS_AS(beta_product(ts, q, 2, 1), IndexOutOfRange);
}

TEST_CASE("beta product of two segments with isolated points between")
{
    TimeScale ts = validate_timescale({{0, 1}, {2, 2}, {3, 3}, {4, 5}});
    Potential q;
    q.isolated = {{2, Rational(1, 2)}, {3, -1}};
    q.segments = {SegmentProfile::constant(0), SegmentProfile::constant(2)};
    REQUIRE(l_index(ts, 2) == 4);

    BetaMatrix single = beta_product(ts, q, 2, 1);
    JumpMatrix a3 = jump_matrix(ts, q, 3);
    REQUIRE(single.n_rows() == 2);
    CHECK(single.entry(1, 1) == a3.a11);
    CHECK(single.entry(2, 2) == a3.a22);

    BetaMatrix b = beta_product(ts, q, 2, 3);
    JumpMatrix a1 = jump_matrix(ts, q, 1), a2 = jump_matrix(ts, q, 2);
    auto mul = [](const JumpMatrix& x, const std::array<PolyRat, 4>& y) {
        return std::array<PolyRat, 4>{x.a11 * y[0] + x.a12 * y[2], x.a11 * y[1] + x.a12 * y[3],
                                      x.a21 * y[0] + x.a22 * y[2], x.a21 * y[1] + x.a22 * y[3]};
    };
    auto p = mul(a3, mul(a2, {a1.a11, a1.a12, a1.a21, a1.a22}));
    CHECK(b.entry(1, 1) == p[0]);
    CHECK(b.entry(1, 2) == p[1]);
    CHECK(b.entry(2, 1) == p[2]);
    CHECK(b.entry(2, 2) == p[3]);
    // degree s - 1 + i in the bottom row
    CHECK(b.entry(2, 2).degree() == 3);
    CHECK(b.entry(1, 2).degree() == 2);
}

TEST_CASE("free segment transfer")
{
    auto zero = SegmentProfile::constant(0);
    for (double rho : {0.0, 1e-6, 0.3, 1.0, 7.5}) {
        Mat2 m = segment_transfer(zero, 1.0, Complex(rho * rho));
        double sinc = rho == 0 ? 1.0 : std::sin(rho) / rho;
        CHECK(std::abs(m[0] - std::cos(rho)) < 1e-14);
        CHECK(std::abs(m[1] - sinc) < 1e-14);
        CHECK(std::abs(m[2] + rho * std::sin(rho)) < 1e-13);
        CHECK(std::abs(m[3] - std::cos(rho)) < 1e-14);
    }

    Mat2 shifted = segment_transfer(SegmentProfile::constant(3), 1.0, Complex(7.0));
    Mat2 free = segment_transfer(zero, 1.0, Complex(4.0));
    for (int i = 0; i < 4; ++i)
        CHECK(std::abs(shifted[i] - free[i]) < 1e-14);

    // below the potential: hyperbolic
    Mat2 hyp = segment_transfer(zero, 2.0, Complex(-1.0));
    CHECK(std::abs(hyp[0] - std::cosh(2.0)) < 1e-13);
    CHECK(std::abs(hyp[1] - std::sinh(2.0)) < 1e-13);
}

TEST_CASE("integrated segment transfer")
{
    auto poly = SegmentProfile::polynomial({1, Rational(1, 2), -1});
    auto samples = SegmentProfile::samples({0, 2, -1, 1});
    for (double lambda : {-5.0, 0.0, 3.0, 40.0, 400.0}) {
        for (const auto* p : {&poly, &samples}) {
            Mat2 m = segment_transfer(*p, 1.5, Complex(lambda));
            CHECK(std::abs(det(m) - 1.0) < 1e-10);
        }
    }

    // constant data through the integrator agrees with the closed form
    auto flat = SegmentProfile::samples({2, 2});
    auto constant = SegmentProfile::constant(2);
    for (double lambda : {-3.0, 1.0, 25.0}) {
        Mat2 a = segment_transfer(flat, 1.0, Complex(lambda));
        Mat2 b = segment_transfer(constant, 1.0, Complex(lambda));
        for (int i = 0; i < 4; ++i)
            CHECK(rel_err(a[i], b[i]) < 1e-10);
    }

    // splitting the segment composes
    Mat2 whole = segment_transfer(poly, 1.5, Complex(10.0));
    Mat2 parts = mat_mul(segment_transfer(poly, 1.5, Complex(10.0), 0.7, 1.5),
                         segment_transfer(poly, 1.5, Complex(10.0), 0.0, 0.7));
    for (int i = 0; i < 4; ++i)
        CHECK(rel_err(whole[i], parts[i]) < 1e-10);
}

TEST_CASE("exact propagation of four points")
{
    TimeScale ts = four_points();
    Potential q = testing::zero_potential(ts);
    auto s = propagate_exact(ts, q, {0, 1});
    auto c = propagate_exact(ts, q, {1, 0});
    REQUIRE(s.size() == 4);
    CHECK(s.back().interval == 4);
    CHECK_FALSE(s.back().ydelta.has_value());
    CHECK(s.back().y == PolyRat{3, -4, 1});
    CHECK(c.back().y == PolyRat{1, -3, 1});

    CHECK_THROWS_AS(propagate_exact(validate_timescale({{0, 1}, {2, 3}}), Potential{{}, {SegmentProfile::constant(0), SegmentProfile::constant(0)}}, {0, 1}),
                    BackendMismatch);
}

TEST_CASE("exact Wronskian is one at every breakpoint")
{
    std::mt19937 rng(5);
    for (int trial = 0; trial < 40; ++trial) {
        auto [ts, q] = testing::random_discrete(rng);
        auto s = propagate_exact(ts, q, {0, 1});
        auto c = propagate_exact(ts, q, {1, 0});
        REQUIRE(s.size() == c.size());
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (!s[i].ydelta)
                continue;
            CHECK(c[i].y * *s[i].ydelta - *c[i].ydelta * s[i].y == PolyRat{1});
        }
    }
}

TEST_CASE("numeric Wronskian on mixed scales")
{
    TimeScale ts = validate_timescale({{0, 0}, {1, 2}, {3, 3}, {Rational(7, 2), 5}, {6, 6}});
    Potential q;
    q.isolated = {{1, 1}, {3, Rational(-1, 2)}};
    q.segments = {SegmentProfile::polynomial({0, 1}), SegmentProfile::samples({1, -2, 0})};
    for (double lambda = -10; lambda <= 60; lambda += 3.5) {
        auto s = propagate_numeric(ts, q, {Complex(0), Complex(1)}, Complex(lambda));
        auto c = propagate_numeric(ts, q, {Complex(1), Complex(0)}, Complex(lambda));
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (!s[i].ydelta)
                continue;
            Complex w = c[i].y * *s[i].ydelta - *c[i].ydelta * s[i].y;
            double scale = std::max(std::abs(c[i].y * *s[i].ydelta), 1.0);
            CAPTURE(lambda, i, scale);
            CHECK(std::abs(w - 1.0) < 1e-10 * scale);
        }
    }
}

TEST_CASE("closed forms on two unit segments")
{
    TimeScale ts = validate_timescale({{0, 1}, {2, 3}});
    Potential q = testing::zero_potential(ts);
    EntireEval eval(ts, q);
    for (double lambda : {-20.0, -2.0, -0.5, 0.25, 1.0, 5.0, 17.3, 90.0, 400.0}) {
        Complex rho = std::sqrt(Complex(lambda));
        auto v = eval(Complex(lambda));
        CHECK(rel_err(v.theta0, twin_theta0(rho)) < 1e-10);
        CHECK(rel_err(v.theta1, twin_theta1(rho)) < 1e-10);

        auto c = propagate_numeric(ts, q, {Complex(1), Complex(0)}, Complex(lambda));
        CHECK(rel_err(c.back().y, twin_theta1(rho)) < 1e-10);
    }
    CHECK(eval.growth_order() == 0.5);
}

TEST_CASE("single segment")
{
    TimeScale ts = validate_timescale({{0, 1}});
    Potential q = testing::zero_potential(ts);
    auto pair = characteristic_pair(ts, q);
    CHECK_FALSE(pair.exact.has_value());
    for (double rho : {0.5, 1.0, 3.0, 10.0}) {
        auto v = pair.eval(Complex(rho * rho));
        CHECK(rel_err(v.theta0, std::sin(rho) / rho) < 1e-12);
        CHECK(rel_err(v.theta1, std::cos(rho)) < 1e-12);
    }
}

TEST_CASE("characteristic pairs")
{
    auto p1 = characteristic_pair(four_points(), testing::zero_potential(four_points()));
    REQUIRE(p1.exact);
    CHECK(p1.exact->theta0 == PolyRat{3, -4, 1});
    CHECK(p1.exact->theta1 == PolyRat{1, -3, 1});
    CHECK(p1.eval.growth_order() == 0.0);

    TimeScale short_scale = testing::points({0, 1, 2});
    auto p4 = characteristic_pair(short_scale, testing::zero_potential(short_scale));
    REQUIRE(p4.exact);
    CHECK(p4.exact->theta0 == PolyRat{2, -1});
    CHECK(p4.exact->theta1 == PolyRat{1, -1});
}

TEST_CASE("D functions of four points")
{
    TimeScale ts = four_points();
    Potential q = testing::zero_potential(ts);
    ExactPair d1 = d_functions(ts, q, 1);
    CHECK(d1.theta0 == PolyRat{3, -4, 1});
    CHECK(d1.theta1 == PolyRat{1, -3, 1});
    ExactPair d2 = d_functions(ts, q, 2);
    CHECK(d2.theta0 == PolyRat{2, -1});
    CHECK(d2.theta1 == PolyRat{1, -1});
    ExactPair d3 = d_functions(ts, q, 3);
    CHECK(d3.theta0 == PolyRat{1});
    CHECK_THROWS_AS(d_functions(ts, q, 4), IndexOutOfRange);
    CHECK_THROWS_AS(d_functions(ts, q, 0), IndexOutOfRange);
    CHECK(all_d_functions(ts, q).size() == 3);
}

TEST_CASE("D functions satisfy the jump recursion")
{
    std::mt19937 rng(23);
    for (int trial = 0; trial < 40; ++trial) {
        auto [ts, q] = testing::random_discrete(rng);
        auto d = all_d_functions(ts, q);
        for (std::size_t m = 1; m < d.size(); ++m) {
            JumpMatrix a = jump_matrix(ts, q, m);
            const ExactPair& next = d[m];
            CHECK(d[m - 1].theta0 == a.a22 * next.theta0 + a.a12 * next.theta1);
            CHECK(d[m - 1].theta1 == a.a21 * next.theta0 + a.a11 * next.theta1);
        }
        auto direct = d_functions(ts, q, d.size());
        CHECK(direct.theta0 == d.back().theta0);
    }
}

TEST_CASE("degree law on discrete scales")
{
    std::mt19937 rng(31);
    for (int trial = 0; trial < 60; ++trial) {
        auto [ts, q] = testing::random_discrete(rng, 10);
        auto pair = characteristic_pair(ts, q);
        REQUIRE(pair.exact);
        const int m = static_cast<int>(ts.size());
        CHECK(pair.exact->theta0.degree() == m - 2);
        CHECK(pair.exact->theta1.degree() == m - 2);
    }
}

TEST_CASE("numeric and exact backends agree")
{
    std::mt19937 rng(41);
    std::uniform_real_distribution<double> pick(-10, 10);
    for (int trial = 0; trial < 10; ++trial) {
        auto [ts, q] = testing::random_discrete(rng);
        auto pair = characteristic_pair(ts, q);
        REQUIRE(pair.exact);
        for (int i = 0; i < 50; ++i) {
            double lambda = pick(rng);
            auto v = pair.eval(Complex(lambda));
            double t0 = pair.exact->theta0(lambda), t1 = pair.exact->theta1(lambda);
            CHECK(std::abs(v.theta0 - t0) <= 1e-12 * std::max(1.0, std::abs(t0)) + v.error);
            CHECK(std::abs(v.theta1 - t1) <= 1e-12 * std::max(1.0, std::abs(t1)) + v.error);
        }
        auto dv = pair.eval.d_values(Complex(0.5));
        auto d = all_d_functions(ts, q);
        REQUIRE(dv.size() == d.size());
        for (std::size_t m = 0; m < d.size(); ++m)
            CHECK(rel_err(dv[m][0], d[m].theta0(0.5)) < 1e-11);
    }
}

TEST_CASE("phase crosses multiples of pi at eigenvalues")
{
    TimeScale ts = four_points();
    Potential q = testing::zero_potential(ts);
    PhaseEval phase(ts, q);
    auto at1 = phase(1.0), at3 = phase(3.0);
    CHECK(std::abs(std::remainder(at1[0], M_PI)) < 1e-9);
    CHECK(std::abs(std::remainder(at3[0], M_PI)) < 1e-9);
    CHECK(at3[0] - at1[0] == Approx(M_PI));

    double prev0 = -1e300, prev1 = -1e300;
    for (double lambda = -5; lambda <= 10; lambda += 0.25) {
        auto p = phase(lambda);
        CHECK(p[0] > prev0);
        CHECK(p[1] > prev1);
        prev0 = p[0];
        prev1 = p[1];
    }
}

TEST_CASE("solution sampler matches propagated states")
{
    TimeScale ts = validate_timescale({{0, 0}, {1, 2}, {3, 3}});
    Potential q;
    q.isolated = {{1, 2}};
    q.segments = {SegmentProfile::constant(1)};
    Complex lambda(5.0);
    SolutionSampler y(ts, q, {Complex(0), Complex(1)}, lambda);
    auto states = propagate_numeric(ts, q, {Complex(0), Complex(1)}, lambda);
    CHECK(std::abs(y(0) - 0.0) < 1e-14);
    CHECK(std::abs(y(1) - 1.0) < 1e-14);
    CHECK(std::abs(y(3) - states.back().y) < 1e-12);
    // after the jump: y(1) = 1, y'(1) = 1 + (q - lambda) = -2
    Mat2 t = segment_transfer(q.segment(1), 1.0, lambda, 0.0, 0.5);
    Complex y1 = 1.0, yd1 = -2.0;
    CHECK(std::abs(y(1.5) - (t[0] * y1 + t[1] * yd1)) < 1e-12);
}
