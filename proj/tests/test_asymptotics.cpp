#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>

#include "support.hpp"
#include "tsspec/asymptotics.hpp"
#include "tsspec/errors.hpp"

using namespace tss;
using Catch::Approx;

namespace {

TimeScale two_segments(int second_end) { return validate_timescale({{0, 1}, {2, second_end}}); }

struct Labeled {
    Spectrum s0, s1;
    LabelReport r0, r1;
};

Labeled labeled_spectra(const TimeScale& ts, const Potential& q, double rho_max)
{
    SearchOptions o;
    o.lambda_max = rho_max * rho_max;
    auto [s0, s1] = find_spectra(ts, q, o);
    Labeled out{s0, s1, {}, {}};
    out.r0 = label_branches(out.s0, ts, q);
    out.r1 = label_branches(out.s1, ts, q);
    return out;
}

// Random scale mixing isolated points and segments with rational ends.
std::optional<std::pair<TimeScale, Potential>> random_mixed(std::mt19937& rng)
{
    const int count = 2 + static_cast<int>(rng() % 6);
    std::vector<Interval> iv;
    Rational x = 0;
    for (int i = 0; i < count; ++i) {
        bool segment = rng() % 3 == 0;
        Rational len = segment ? Rational(1 + rng() % 3, 1 + rng() % 2) : Rational(0);
        iv.push_back({x, x + len});
        x += len + Rational(1 + rng() % 5, 1 + rng() % 3);
    }
    std::optional<TimeScale> ts;
    try {
        ts = validate_timescale(iv);
    } catch (const ValidationError&) {
        return std::nullopt;
    }
    Potential q;
    for (std::size_t l = 1; l <= ts->size(); ++l)
        if (!ts->is_segment(l) && ts->in_s(l))
            q.isolated[l] = Rational(static_cast<int>(rng() % 21) - 10, 1 + rng() % 5);
    for (std::size_t k = 1; k <= ts->n_segments(); ++k)
        q.segments.push_back(SegmentProfile::polynomial({Rational(static_cast<int>(rng() % 5) - 2), 1}));
    return std::make_pair(*ts, q);
}

} // namespace

TEST_CASE("leading coefficients of a single factor")
{
    TimeScale ts = testing::points({0, Rational(3, 2), 4, 5});
    Potential q;
    q.isolated = {{1, Rational(2, 3)}, {2, -1}};
    // k = N + 1 = 1, s = 1 is the row-only jump across the last gap
    BetaMatrix b = beta_product(ts, q, 1, 1);
    for (std::size_t j = 1; j <= 2; ++j) {
        LemmaOneCoeffs c = lemma1_coeffs(ts, q, 1, 1, 1, j);
        const PolyRat& p = b.entry(1, j);
        CHECK(p.degree() == c.degree());
        CHECK(p.coeff(c.degree()) == c.a);
    }
    CHECK_THROWS_AS(lemma1_coeffs(ts, q, 1, 1, 2, 1), IndexOutOfRange);
    CHECK_THROWS_AS(lemma1_coeffs(ts, q, 1, 4, 1, 1), IndexOutOfRange);
    CHECK_THROWS_AS(lemma1_coeffs(ts, q, 2, 1, 1, 1), IndexOutOfRange);
    CHECK_THROWS_AS(lemma1_coeffs(ts, q, 1, 1, 1, 3), IndexOutOfRange);
}

TEST_CASE("top leading coefficient on four points")
{
    TimeScale ts = testing::points({0, 1, 2, 3});
    LemmaOneCoeffs c = lemma1_coeffs(ts, testing::zero_potential(ts), 1, 3, 1, 2);
    CHECK(c.degree() == 2);
    CHECK(c.a == 1);
    CHECK(c.a * c.b == -4);
}

TEST_CASE("leading coefficients against symbolic products")
{
    std::mt19937 rng(5);
    int checked = 0;
    for (int trial = 0; trial < 80; ++trial) {
        auto pair = random_mixed(rng);
        if (!pair)
            continue;
        const auto& [ts, q] = *pair;
        std::size_t kmax = ts.n_segments() + (ts.mu1() ? 1 : 0);
        for (std::size_t k = 1; k <= kmax; ++k) {
            std::size_t span = l_index(ts, k) - l_index(ts, k - 1);
            for (std::size_t s = 1; s <= span; ++s) {
                BetaMatrix b = beta_product(ts, q, k, s);
                for (std::size_t i = 1; i <= b.n_rows(); ++i)
                    for (std::size_t j = 1; j <= 2; ++j) {
                        LemmaOneCoeffs c = lemma1_coeffs(ts, q, k, s, i, j);
                        const PolyRat& p = b.entry(i, j);
                        const int deg = c.degree();
                        CAPTURE(trial, k, s, i, j, p.to_string());
                        CHECK(p.degree() == deg);
                        CHECK(p.coeff(deg) == c.a);
                        CHECK(p.coeff(deg - 1) == c.a * c.b);
                        ++checked;
                    }
            }
        }
    }
    CHECK(checked > 200);
}

TEST_CASE("branch shift table")
{
    // (delta_k, j, l_k == 1) -> shift
    struct Row {
        bool delta;
        int j;
        bool first;
        double shift;
    };
    const Row rows[] = {
        {false, 0, false, 0.5}, {false, 0, true, 0.5}, {false, 1, false, 0.5}, {false, 1, true, 0.0},
        {true, 0, false, 0.0},  {true, 0, true, 0.0},  {true, 1, false, 0.0},  {true, 1, true, 0.5},
    };
    for (const auto& r : rows) {
        CAPTURE(r.delta, r.j, r.first);
        CHECK(branch_shift(r.delta, r.j, r.first) == r.shift);
    }
}

TEST_CASE("bounded part sizes")
{
    CHECK(bounded_part_size(testing::points({0, 1, 2, 3}), 0) == 2);
    CHECK(bounded_part_size(testing::points({0, 1, 2, 3}), 1) == 2);
    CHECK(bounded_part_size(two_segments(4), 0) == 1);
    CHECK(bounded_part_size(two_segments(4), 1) == 2);
    CHECK(bounded_part_size(validate_timescale({{0, 1}}), 0) == 0);
    CHECK(bounded_part_size(validate_timescale({{0, 1}}), 1) == 0);
}

TEST_CASE("structural constants")
{
    TimeScale twin = two_segments(3);
    Potential zero = testing::zero_potential(twin);
    StructuralConstants a(twin, zero);
    CHECK(a.branch(1).c == Approx(1.0));
    CHECK(a.branch(2).c == Approx(0.0));
    CHECK(a.branch(1).z == Approx(1 / M_PI));
    CHECK(a.branch(2).z == Approx(1 / M_PI));
    CHECK_FALSE(a.branch(1).delta);
    CHECK(a.branch(2).delta);
    CHECK(a.branch(1).gamma == Approx(2.0));
    CHECK(a.branch(2).gamma == Approx(1.0));

    TimeScale longer = two_segments(4);
    StructuralConstants b(longer, testing::zero_potential(longer));
    CHECK(b.branch(1).z / b.branch(1).d == Approx(1 / M_PI));
    CHECK(b.branch(2).z / b.branch(2).d == Approx(1 / (2 * M_PI)));

    TimeScale one = validate_timescale({{0, Rational(5, 2)}});
    Potential c;
    c.segments = {SegmentProfile::constant(Rational(3, 4))};
    CHECK(StructuralConstants(one, c).branch(1).omega == Approx(0.75 * 2.5 / 2));
    Potential p;
    p.segments = {SegmentProfile::polynomial({0, 0, 3})};
    CHECK(StructuralConstants(one, p).branch(1).omega == Approx(0.5 * 2.5 * 2.5 * 2.5).epsilon(1e-12));
}

TEST_CASE("leading shapes v_kj")
{
    TimeScale ts = validate_timescale({{0, 1}});
    Potential q;
    q.segments = {SegmentProfile::polynomial({1, Rational(1, 2), -1})};
    StructuralConstants sc(ts, q);
    EntireEval eval(ts, q);
    CHECK(sc.g(1, Complex(7.0)) == sc.v(1, 0, Complex(7.0)));
    for (double rho : {10.0, 20.0, 40.0, 80.0, 160.0}) {
        auto v = eval(Complex(rho * rho));
        double r0 = std::abs(rho * v.theta0 - sc.v(1, 0, Complex(rho)));
        double r1 = std::abs(v.theta1 - sc.v(1, 1, Complex(rho)));
        CHECK(r0 * rho * rho * rho < 1.0);
        CHECK(r1 * rho * rho * rho < 1.0);
    }
}

TEST_CASE("eta counts vanishing trigonometric factors")
{
    TimeScale ts = validate_timescale({{0, 1}, {2, 4}, {5, Rational(11, 2)}});
    StructuralConstants sc(ts, testing::zero_potential(ts));
    const std::size_t n = ts.n_segments();
    for (double rho : {0.37, M_PI / 2, M_PI, 2 * M_PI, 3 * M_PI / 2, 4 * M_PI}) {
        for (std::size_t k = 1; k <= n; ++k)
            for (int j = 0; j < 2; ++j) {
                int expected = 0;
                for (std::size_t l = k + 1; l <= n; ++l)
                    expected += std::abs(sc.f(l, 0, Complex(rho))) < 1e-9;
                expected += std::abs(sc.f(k, j, Complex(rho))) < 1e-9;
                CAPTURE(rho, k, j);
                CHECK(sc.eta(k, j, rho) == expected);
            }
    }
    CHECK(sc.eta(1, 0, 0.37) == 0);
}

TEST_CASE("commensurability")
{
    Commensurability a = commensurability_check(std::vector<Rational>{1, 2});
    CHECK(a.r == 1);
    CHECK(a.x == std::vector<Integer>{1, 2});

    Commensurability b = commensurability_check(std::vector<double>{0.5, 0.75});
    CHECK(b.r == Rational(1, 4));
    CHECK(b.x == std::vector<Integer>{2, 3});

    Commensurability c = commensurability_check(std::vector<Rational>{Rational(2, 3), Rational(5, 6), 2});
    CHECK(c.r == Rational(1, 6));
    CHECK(c.x == std::vector<Integer>{4, 5, 12});

    CHECK_THROWS_AS(commensurability_check(std::vector<double>{1.0, std::sqrt(2.0)}), NotCommensurable);
    CHECK_THROWS_AS(commensurability_check(std::vector<double>{1.0, -1.0}), NotCommensurable);
}

TEST_CASE("branch predictions")
{
    TimeScale twin = two_segments(3);
    Potential zero = testing::zero_potential(twin);
    for (std::size_t n = 1; n <= 5; ++n) {
        // last segment: pi n for both j; first: pi (n - 1/2) for j = 0, pi n for j = 1
        CHECK(predict_branch(twin, zero, 2, 0, n, PredictionOrder::Main).main_term == Approx(M_PI * n));
        CHECK(predict_branch(twin, zero, 2, 1, n, PredictionOrder::Main).main_term == Approx(M_PI * n));
        CHECK(predict_branch(twin, zero, 1, 0, n, PredictionOrder::Main).main_term == Approx(M_PI * (n - 0.5)));
        CHECK(predict_branch(twin, zero, 1, 1, n, PredictionOrder::Main).main_term == Approx(M_PI * n));
    }

    TimeScale ex2 = validate_timescale({{0, 1}});
    AsymptoticPrediction p = predict_branch(ex2, testing::zero_potential(ex2), 1, 1, 3, PredictionOrder::Main);
    CHECK(p.main_term == Approx(2.5 * M_PI));
    CHECK(p.correction == 0.0);
    CHECK(p.residual == ResidualClass::BigO1n);

    AsymptoticPrediction c = predict_branch(twin, zero, 1, 0, 4, PredictionOrder::Corrected);
    CHECK(c.correction == Approx((1 / M_PI) / 3.5));
    CHECK(c.rho() == Approx(c.main_term + c.correction));
    CHECK(c.lambda() == Approx(c.rho() * c.rho()));
    // z_1/d_1 = z_2/d_2 on two unit segments
    CHECK(c.distinctness_violated);
    CHECK(c.residual == ResidualClass::LittleO1n);

    TimeScale longer = two_segments(4);
    AsymptoticPrediction d = predict_branch(longer, testing::zero_potential(longer), 2, 1, 4, PredictionOrder::Corrected);
    CHECK_FALSE(d.distinctness_violated);
    CHECK(d.residual == ResidualClass::KappaN);
    CHECK(d.main_term == Approx(M_PI * 4 / 2));

    CHECK_THROWS_AS(predict_branch(twin, zero, 3, 0, 1, PredictionOrder::Main), IndexOutOfRange);
    CHECK_THROWS_AS(predict_branch(twin, zero, 1, 0, 0, PredictionOrder::Main), IndexOutOfRange);

    TimeScale irr = validate_timescale({{0, 1}, {2, Rational(3414213562373095, 1000000000000000)}});
    Potential q = testing::zero_potential(irr);
    CHECK(predict_branch(irr, q, 1, 0, 2, PredictionOrder::Main).residual == ResidualClass::LittleO1);
    CHECK_THROWS_AS(predict_branch(irr, q, 1, 0, 2, PredictionOrder::Corrected), NotCommensurable);
}

TEST_CASE("weight predictions")
{
    TimeScale ex2 = validate_timescale({{0, 1}});
    WeightPrediction a = predict_weights(ex2, testing::zero_potential(ex2), 1, 10);
    REQUIRE(a.limit);
    CHECK(*a.limit == Approx(2.0));

    TimeScale longer = two_segments(4);
    Potential zero = testing::zero_potential(longer);
    CHECK(predict_weights(longer, zero, 1, 10).limit);
    WeightPrediction b = predict_weights(longer, zero, 2, 10);
    CHECK_FALSE(b.limit);
    CHECK(b.residual == ResidualClass::KappaN);
    CHECK(b.hypotheses_hold);

    TimeScale lead = validate_timescale({{0, 0}, {1, 2}});
    Potential q;
    q.isolated = {{1, 0}};
    q.segments = {SegmentProfile::constant(0)};
    CHECK_FALSE(predict_weights(lead, q, 1, 10).limit);
}

TEST_CASE("branch labels on two segments")
{
    TimeScale ts = two_segments(4);
    Potential q = testing::zero_potential(ts);
    Labeled l = labeled_spectra(ts, q, 41 * M_PI);
    CHECK(l.r0.mismatches.empty());
    CHECK(l.r1.mismatches.empty());
    CHECK(l.r0.bounded == 1);
    CHECK(l.r1.bounded == 2);

    // every eigenvalue is accounted for, and each branch holds its predicted count to within one
    for (const auto* r : {&l.r0, &l.r1}) {
        for (const auto& [assigned, predicted] : r->counts)
            CHECK(std::abs(static_cast<long>(assigned) - static_cast<long>(predicted)) <= 1);
    }
    std::size_t total = l.r1.bounded;
    for (const auto& c : l.r1.counts)
        total += c.first;
    CHECK(total == l.s1.size());

    // stable under a finer search
    SearchOptions fine;
    fine.lambda_max = std::pow(41 * M_PI, 2);
    fine.tolerance = 1e-14;
    Spectrum again = find_spectrum(ts, q, 1, fine);
    label_branches(again, ts, q);
    CHECK(again.labels == l.s1.labels);
}

TEST_CASE("residuals on two segments of different length")
{
    TimeScale ts = two_segments(4);
    Potential q = testing::zero_potential(ts);
    Labeled l = labeled_spectra(ts, q, 41 * M_PI);
    WeightNumbers w = weight_numbers(ts, q, l.s1);
    for (int j = 0; j < 2; ++j) {
        const Spectrum& s = j == 0 ? l.s0 : l.s1;
        AsymptoticsReport rep = verify_asymptotics(s, ts, q, 5, 40, j == 1 ? &w : nullptr);
        CHECK(rep.commensurable);
        CHECK(rep.distinct);
        REQUIRE(rep.branches.size() == 2);
        for (const auto& b : rep.branches) {
            CAPTURE(j, b.k);
            CHECK(b.count >= 30);
            CHECK(b.bounded);
            CHECK(b.scaled_max < 2.0);
            CHECK(b.improvement > 5.0);
        }
        for (std::size_t i = 1; i < rep.rows.size(); ++i) {
            const auto& a = rep.rows[i - 1];
            const auto& b = rep.rows[i];
            CHECK((a.k < b.k || (a.k == b.k && a.n < b.n)));
        }
        if (j == 1) {
            CHECK_FALSE(rep.weights.empty());
            CHECK(rep.weights_bounded);
            for (const auto& row : rep.weights)
                CHECK(row.limit == Approx(2.0));
        }
    }
}

TEST_CASE("residuals on two unit segments")
{
    TimeScale ts = two_segments(3);
    Potential q = testing::zero_potential(ts);
    Labeled l = labeled_spectra(ts, q, 31 * M_PI);
    CHECK(l.r1.mismatches.empty());
    AsymptoticsReport rep = verify_asymptotics(l.s1, ts, q, 1, 30);
    CHECK_FALSE(rep.distinct);
    CHECK_FALSE(rep.notes.empty());
    for (const auto& b : rep.branches) {
        CHECK(b.bounded);
        double first = 0, last = 0;
        for (const auto& row : rep.rows)
            if (row.k == b.k) {
                if (row.n == 2)
                    first = row.e;
                last = row.e;
            }
        CHECK(last < first);
    }

    std::string csv = residuals_csv(rep);
    CHECK(csv.rfind("branch,n,computed,main,corrected,e_n,n_e_n\n", 0) == 0);
    CHECK(static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n')) == rep.rows.size() + 1);
}

TEST_CASE("unlabeled spectra are rejected")
{
    TimeScale ts = two_segments(4);
    Potential q = testing::zero_potential(ts);
    SearchOptions o;
    o.lambda_max = 400;
    Spectrum s = find_spectrum(ts, q, 0, o);
    s.labels.clear();
    CHECK_THROWS_AS(verify_asymptotics(s, ts, q, 1, 5), LabelMismatch);
    CHECK_THROWS_AS(verify_asymptotics(s, testing::points({0, 1, 2}), q, 1, 5), NotSupported);
}

TEST_CASE("bounded on halves")
{
    double lo = 0, hi = 0;
    CHECK(bounded_on_halves({1, 2, 2, 1}, &lo, &hi));
    CHECK(lo == 2);
    CHECK(hi == 2);
    CHECK_FALSE(bounded_on_halves({1, 1, 1, 2}));
    CHECK_FALSE(bounded_on_halves({1}));
}
