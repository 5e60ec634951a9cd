#include "tsspec/asymptotics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "tsspec/errors.hpp"

namespace tss {

namespace {

Rational power(const Rational& x, int e)
{
    Rational out = 1;
    for (int i = 0; i < std::abs(e); ++i)
        out *= x;
    return e < 0 ? Rational(1 / out) : out;
}

std::string idx(std::size_t v) { return std::to_string(v); }

} // namespace

// ---------------------------------------------------------------------------
// leading coefficients of beta products

LemmaOneCoeffs lemma1_coeffs(const TimeScale& ts, const Potential& q, std::size_t k, std::size_t s, std::size_t i,
                             std::size_t j)
{
    const std::size_t n = ts.n_segments();
    const std::size_t kmax = n + (ts.mu1() ? 1 : 0);
    if (k < 1 || k > kmax)
        throw IndexOutOfRange("k = " + idx(k) + " outside 1.." + idx(kmax));
    const std::size_t lk = l_index(ts, k);
    const std::size_t lprev = l_index(ts, k - 1);
    if (s < 1 || s > lk - lprev)
        throw IndexOutOfRange("s = " + idx(s) + " outside 1.." + idx(lk - lprev));
    const std::size_t imax = k == n + 1 ? 1 : 2;
    if (i < 1 || i > imax)
        throw IndexOutOfRange("i = " + idx(i) + " outside 1.." + idx(imax));
    if (j < 1 || j > 2)
        throw IndexOutOfRange("j must be 1 or 2");

    auto gap = [&](std::size_t l) { return ts.gap(l); };
    const auto si = static_cast<long>(s), ii = static_cast<long>(i), ji = static_cast<long>(j);
    const long lo = static_cast<long>(lk) - si;

    LemmaOneCoeffs out{k, s, i, j, Rational(0), Rational(0)};
    Rational a = (si - 2 + ii) % 2 == 0 ? Rational(1) : Rational(-1);
    a *= power(gap(static_cast<std::size_t>(lo)), static_cast<int>(ji - 2));
    a *= power(gap(lk - 1), static_cast<int>(ii - 2));
    for (long l = lo; l <= static_cast<long>(lk) - 1; ++l)
        a *= gap(static_cast<std::size_t>(l)) * gap(static_cast<std::size_t>(l));
    out.a = a;

    Rational b = 0;
    for (long l = lo + 2 - ji; l <= static_cast<long>(lk) - 3 + ii; ++l)
        b += 1 / (gap(static_cast<std::size_t>(l)) * gap(static_cast<std::size_t>(l)));
    for (long l = lo + 1; l <= static_cast<long>(lk) - 1; ++l)
        b += 1 / (gap(static_cast<std::size_t>(l)) * gap(static_cast<std::size_t>(l - 1)));
    for (long l = lo; l <= static_cast<long>(lk) - 3 + ii; ++l)
        b += potential_at_right_end(ts, q, static_cast<std::size_t>(l));
    out.b = -b;
    return out;
}

// ---------------------------------------------------------------------------
// branch bookkeeping

double branch_shift(bool delta_k, int j, bool lk_is_first)
{
    const double d0 = delta_k ? 0.0 : 0.5;
    const double d1 = 0.5 - d0;
    return (j == 1 && lk_is_first) ? d1 : d0;
}

long bounded_part_size(const TimeScale& ts, int j)
{
    const long n = static_cast<long>(ts.n_segments());
    const long m = static_cast<long>(ts.n_isolated());
    const long mu0 = ts.mu0() ? 1 : 0, mu1 = ts.mu1() ? 1 : 0;
    const long arg = n - 1 + mu1;
    const long sign = arg > 0 ? 1 : (arg < 0 ? -1 : 0);
    return n + m + j * (1 - mu0) * sign - mu1 - 1;
}

StructuralConstants::StructuralConstants(const TimeScale& ts, const Potential& q) : ts_(ts), q_(q)
{
    const std::size_t n = ts.n_segments();
    double gamma = 0.0;
    for (std::size_t k = n; k >= 1; --k) {
        BranchConstants b;
        b.k = k;
        b.l = ts.segment_index(k);
        b.d = to_double(ts.segment_length(k));
        b.delta = b.l == ts.size();
        const SegmentProfile& p = q.segment(k);
        b.omega = 0.5 * p.integral(b.d);
        const double q0 = p.value(0.0, b.d), qd = p.value(b.d, b.d);
        for (int i = 1; i <= 4; ++i) {
            double s1 = ((i - 1) / 2) % 2 == 0 ? 1.0 : -1.0;
            double s2 = (i - 1) % 2 == 0 ? 1.0 : -1.0;
            b.a_tilde[i - 1] = s1 * q0 / 4 + s2 * qd / 4 - b.omega * b.omega / 2;
        }
        double right_gap = b.delta ? 0.0 : to_double(ts.gap(b.l));
        b.c = b.delta ? b.omega : b.omega + 1.0 / right_gap;
        for (int j = 0; j < 2; ++j)
            b.a[j] = b.delta ? b.a_tilde[2 * j] : b.a_tilde[2 * j + 1] - b.omega / right_gap;
        double left = b.l > 1 ? 1.0 / to_double(ts.gap(b.l - 1)) : 0.0;
        b.z = (b.c + left) / M_PI;
        gamma += b.d;
        b.gamma = gamma;
        branches_.push_back(b);
    }
    std::reverse(branches_.begin(), branches_.end());
}

Complex StructuralConstants::f(std::size_t k, int j, Complex x) const
{
    const BranchConstants& b = branch(k);
    bool use_sin = (j == 0) == b.delta;
    return use_sin ? std::sin(b.d * x) : std::cos(b.d * x);
}

Complex StructuralConstants::v(std::size_t k, int j, Complex rho) const
{
    const BranchConstants& b = branch(k);
    const double sd = b.delta ? -1.0 : 1.0;
    const double sjd = ((j + (b.delta ? 1 : 0)) % 2 == 0) ? 1.0 : -1.0;
    Complex out = f(k, j, rho) * (1.0 + b.a[j] / (rho * rho)) + f(k, 1 - j, rho) * (b.c * sjd) / rho;
    const SegmentProfile& p = q_.segment(k);
    if (p.kind() != SegmentProfile::Kind::Constant) {
        auto part = [&](bool imag) {
            return segment_quadrature(
                [&](double t) {
                    Complex w = f(k, j, (2 * t / b.d - 1) * rho) * p.derivative(t, b.d);
                    return imag ? w.imag() : w.real();
                },
                0.0, b.d);
        };
        out += sd / (4.0 * rho * rho) * Complex(part(false), part(true));
    }
    return out;
}

Complex StructuralConstants::g(std::size_t k, Complex rho) const
{
    const BranchConstants& b = branch(k);
    if (b.l == 1)
        return v(k, 0, rho);
    const double sd = b.delta ? -1.0 : 1.0;
    return v(k, 0, rho) + sd * v(k, 1, rho) / (rho * to_double(ts_.gap(b.l - 1)));
}

int StructuralConstants::eta(std::size_t k, int j, double rho) const
{
    auto vanishes = [&](std::size_t l, int jj) {
        const BranchConstants& b = branch(l);
        bool use_sin = (jj == 0) == b.delta;
        double t = b.d * rho / M_PI - (use_sin ? 0.0 : 0.5);
        return std::abs(t - std::round(t)) <= 1e-9 * std::max(1.0, std::abs(t));
    };
    int count = vanishes(k, j) ? 1 : 0;
    for (std::size_t l = k + 1; l <= branches_.size(); ++l)
        count += vanishes(l, 0) ? 1 : 0;
    return count;
}

// ---------------------------------------------------------------------------
// commensurability

Commensurability commensurability_check(const std::vector<Rational>& d)
{
    if (d.empty())
        throw NotCommensurable("no segment lengths");
    for (const auto& x : d)
        if (x <= 0)
            throw NotCommensurable("segment lengths must be positive");
    // r = gcd of the numerators over the lcm of the denominators
    Integer num = 0, den = 1;
    for (const auto& x : d) {
        Integer p = boost::multiprecision::numerator(x), q = boost::multiprecision::denominator(x);
        num = boost::multiprecision::gcd(num, p);
        den = boost::multiprecision::lcm(den, q);
    }
    Commensurability c;
    c.r = Rational(num, den);
    for (const auto& x : d) {
        Rational ratio = x / c.r;
        c.x.push_back(boost::multiprecision::numerator(ratio));
    }
    return c;
}

Commensurability commensurability_check(const std::vector<double>& d, double tolerance, long max_denominator)
{
    if (d.empty() || !(d.front() > 0))
        throw NotCommensurable("segment lengths must be positive");
    std::vector<Rational> ratios;
    for (double x : d) {
        double ratio = x / d.front();
        Rational r = rationalize(ratio, Integer(max_denominator));
        if (std::abs(to_double(r) - ratio) > tolerance * ratio)
            throw NotCommensurable("length ratio " + std::to_string(ratio) + " is not rational within tolerance");
        ratios.push_back(r);
    }
    Commensurability unit = commensurability_check(ratios);
    unit.r *= exact_rational(d.front());
    return unit;
}

// ---------------------------------------------------------------------------
// predictions

const char* to_string(ResidualClass c)
{
    switch (c) {
    case ResidualClass::LittleO1:
        return "o(1)";
    case ResidualClass::BigO1n:
        return "O(1/n)";
    case ResidualClass::LittleO1n:
        return "o(1/n)";
    case ResidualClass::KappaN:
        return "kappa_n/n";
    }
    return "?";
}

namespace {

// Input lengths are always rational, so the exact test would accept 1.41421356
// against 1; the decision uses the bounded-denominator test instead.
bool lengths_commensurable(const TimeScale& ts)
{
    std::vector<double> d;
    for (const auto& x : ts.segment_lengths())
        d.push_back(to_double(x));
    try {
        commensurability_check(d);
        return true;
    } catch (const NotCommensurable&) {
        return false;
    }
}

bool z_over_d_distinct(const StructuralConstants& sc)
{
    const auto& b = sc.branches();
    for (std::size_t x = 0; x < b.size(); ++x)
        for (std::size_t y = x + 1; y < b.size(); ++y)
            if (std::abs(b[x].z / b[x].d - b[y].z / b[y].d) <= 1e-12 * std::max(1.0, std::abs(b[x].z / b[x].d)))
                return false;
    return true;
}

AsymptoticPrediction make_prediction(const TimeScale& ts, const BranchConstants& b, int j, std::size_t n,
                                     bool corrected, bool commensurable, bool distinct)
{
    AsymptoticPrediction p;
    p.k = b.k;
    p.j = j;
    p.n = n;
    p.delta_k = b.delta;
    p.shift = branch_shift(b.delta, j, b.l == 1);
    (void)ts;
    const double m = static_cast<double>(n) - p.shift;
    p.main_term = M_PI * m / b.d;
    if (corrected) {
        p.correction = b.z / m;
        p.distinctness_violated = !distinct;
        p.residual = distinct ? ResidualClass::KappaN : ResidualClass::LittleO1n;
    } else {
        p.residual = commensurable ? ResidualClass::BigO1n : ResidualClass::LittleO1;
    }
    return p;
}

} // namespace

AsymptoticPrediction predict_branch(const TimeScale& ts, const Potential& q, std::size_t k, int j, std::size_t n,
                                    PredictionOrder order)
{
    if (k < 1 || k > ts.n_segments())
        throw IndexOutOfRange("branch " + idx(k) + " outside 1.." + idx(ts.n_segments()));
    if (j != 0 && j != 1)
        throw IndexOutOfRange("j must be 0 or 1");
    if (n < 1)
        throw IndexOutOfRange("n starts at 1");
    bool commensurable = lengths_commensurable(ts);
    bool corrected = order == PredictionOrder::Corrected;
    if (corrected && !commensurable)
        throw NotCommensurable("corrected asymptotics need commensurable segment lengths");
    StructuralConstants sc(ts, q);
    return make_prediction(ts, sc.branch(k), j, n, corrected, commensurable, z_over_d_distinct(sc));
}

WeightPrediction predict_weights(const TimeScale& ts, const Potential& q, std::size_t k, std::size_t n)
{
    if (k < 1 || k > ts.n_segments())
        throw IndexOutOfRange("branch " + idx(k) + " outside 1.." + idx(ts.n_segments()));
    WeightPrediction w;
    w.k = k;
    w.n = n;
    StructuralConstants sc(ts, q);
    w.hypotheses_hold = lengths_commensurable(ts) && z_over_d_distinct(sc);
    if (k == 1 && !ts.mu0())
        w.limit = 2.0 / sc.branch(1).d;
    w.residual = ResidualClass::KappaN;
    return w;
}

// ---------------------------------------------------------------------------
// labeling

LabelReport label_branches(Spectrum& spectrum, const TimeScale& ts, const Potential& q)
{
    LabelReport rep;
    const std::size_t count = spectrum.values.size();
    spectrum.labels.assign(count, BranchLabel{});
    if (ts.n_segments() == 0) {
        rep.bounded = count;
        return rep;
    }
    const int j = spectrum.j;
    StructuralConstants sc(ts, q);
    const bool commensurable = lengths_commensurable(ts);
    const bool distinct = z_over_d_distinct(sc);

    std::vector<double> rho(count);
    for (std::size_t i = 0; i < count; ++i)
        rho[i] = std::sqrt(std::max(0.0, spectrum.values[i]));
    const double top = count ? rho.back() : 0.0;

    std::vector<AsymptoticPrediction> preds;
    for (const auto& b : sc.branches()) {
        for (std::size_t n = 1;; ++n) {
            auto p = make_prediction(ts, b, j, n, commensurable, commensurable, distinct);
            if (p.main_term > top + M_PI / b.d)
                break;
            preds.push_back(p);
        }
    }
    std::sort(preds.begin(), preds.end(),
              [](const AsymptoticPrediction& a, const AsymptoticPrediction& b) { return a.rho() < b.rho(); });

    const long lambda_size = std::max(0L, std::min<long>(bounded_part_size(ts, j), static_cast<long>(count)));
    const std::size_t L = static_cast<std::size_t>(lambda_size);
    const std::size_t P = preds.size();
    const double inf = std::numeric_limits<double>::infinity();
    // cost[i][p][b]: first i eigenvalues, first p predictions, b of them bounded
    auto at = [&](std::size_t i, std::size_t p, std::size_t b) { return (i * (P + 1) + p) * (L + 1) + b; };
    std::vector<double> cost((count + 1) * (P + 1) * (L + 1), inf);
    std::vector<char> move(cost.size(), 0);
    cost[at(0, 0, 0)] = 0.0;
    for (std::size_t i = 0; i <= count; ++i)
        for (std::size_t p = 0; p <= P; ++p)
            for (std::size_t b = 0; b <= L; ++b) {
                double c = cost[at(i, p, b)];
                if (c == inf)
                    continue;
                auto relax = [&](std::size_t ni, std::size_t np, std::size_t nb, double nc, char m) {
                    if (nc < cost[at(ni, np, nb)]) {
                        cost[at(ni, np, nb)] = nc;
                        move[at(ni, np, nb)] = m;
                    }
                };
                if (p < P)
                    relax(i, p + 1, b, c, 's');
                if (i < count && b < L)
                    relax(i + 1, p, b + 1, c, 'b');
                if (i < count && p < P)
                    relax(i + 1, p + 1, b, c + std::abs(rho[i] - preds[p].rho()), 'm');
            }
    // best end state: all eigenvalues used, exactly L bounded
    std::size_t best_p = 0;
    double best = inf;
    for (std::size_t p = 0; p <= P; ++p)
        if (cost[at(count, p, L)] < best) {
            best = cost[at(count, p, L)];
            best_p = p;
        }
    if (best == inf)
        throw LabelMismatch("no consistent branch assignment: too few predictions below the window top");

    std::vector<char> matched(P, 0);
    std::size_t i = count, p = best_p, b = L;
    while (i > 0 || p > 0) {
        char m = move[at(i, p, b)];
        if (m == 's') {
            --p;
        } else if (m == 'b') {
            --i;
            --b;
            spectrum.labels[i] = BranchLabel{};
        } else {
            --i;
            --p;
            spectrum.labels[i] = BranchLabel{false, preds[p].k, preds[p].n};
            matched[p] = 1;
        }
    }
    rep.bounded = L;
    std::vector<std::size_t> assigned(ts.n_segments() + 1, 0), predicted(ts.n_segments() + 1, 0);
    for (std::size_t x = 0; x < P; ++x) {
        if (preds[x].rho() <= top * (1 + 1e-9))
            ++predicted[preds[x].k];
        if (matched[x])
            ++assigned[preds[x].k];
        else if (preds[x].rho() < top - 1e-9)
            rep.mismatches.push_back("prediction k=" + idx(preds[x].k) + " n=" + idx(preds[x].n) +
                                     " has no eigenvalue");
    }
    for (std::size_t k = 1; k <= ts.n_segments(); ++k)
        rep.counts.emplace_back(assigned[k], predicted[k]);
    return rep;
}

// ---------------------------------------------------------------------------
// verification

bool bounded_on_halves(const std::vector<double>& values, double* bottom, double* top)
{
    const std::size_t half = values.size() / 2;
    double lo = 0.0, hi = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i)
        (i < half ? lo : hi) = std::max(i < half ? lo : hi, values[i]);
    if (bottom)
        *bottom = lo;
    if (top)
        *top = hi;
    return values.size() >= 2 && hi <= 1.5 * lo;
}

AsymptoticsReport verify_asymptotics(const Spectrum& spectrum, const TimeScale& ts, const Potential& q,
                                     std::size_t n_lo, std::size_t n_hi, const WeightNumbers* weights)
{
    if (ts.n_segments() == 0)
        throw NotSupported("asymptotics need at least one segment");
    if (spectrum.labels.size() != spectrum.values.size())
        throw LabelMismatch("spectrum is not branch-labeled");
    AsymptoticsReport rep;
    rep.j = spectrum.j;
    StructuralConstants sc(ts, q);
    rep.commensurable = lengths_commensurable(ts);
    rep.distinct = z_over_d_distinct(sc);
    if (!rep.commensurable)
        rep.notes.push_back("segment lengths are not commensurable: main-term check only");
    if (!rep.distinct)
        rep.notes.push_back("z_k/d_k coincide: corrected residuals are only o(1/n)");

    for (std::size_t i = 0; i < spectrum.values.size(); ++i) {
        const auto& lab = spectrum.labels[i];
        if (lab.bounded || lab.n < n_lo || lab.n > n_hi)
            continue;
        auto main = make_prediction(ts, sc.branch(lab.k), spectrum.j, lab.n, false, rep.commensurable, rep.distinct);
        auto corr = make_prediction(ts, sc.branch(lab.k), spectrum.j, lab.n, rep.commensurable, rep.commensurable,
                                    rep.distinct);
        ResidualRow row;
        row.k = lab.k;
        row.n = lab.n;
        row.computed = std::sqrt(std::max(0.0, spectrum.values[i]));
        row.main = main.rho();
        row.corrected = corr.rho();
        row.e = std::abs(row.computed - row.main);
        row.scaled = static_cast<double>(lab.n) * row.e;
        row.scaled_corrected = static_cast<double>(lab.n) * std::abs(row.computed - row.corrected);
        rep.rows.push_back(row);
    }
    std::sort(rep.rows.begin(), rep.rows.end(),
              [](const ResidualRow& a, const ResidualRow& b) { return a.k != b.k ? a.k < b.k : a.n < b.n; });

    for (std::size_t k = 1; k <= ts.n_segments(); ++k) {
        BranchResidualSummary s;
        s.k = k;
        std::vector<double> scaled;
        for (const auto& r : rep.rows)
            if (r.k == k) {
                scaled.push_back(r.scaled);
                s.scaled_max = std::max(s.scaled_max, r.scaled);
                s.corrected_max = std::max(s.corrected_max, r.scaled_corrected);
            }
        s.count = scaled.size();
        s.bounded = bounded_on_halves(scaled, &s.bottom_max, &s.top_max);
        s.improvement = s.corrected_max > 0 ? s.scaled_max / s.corrected_max : std::numeric_limits<double>::infinity();
        rep.branches.push_back(s);
    }

    if (weights && spectrum.j == 1 && !ts.mu0()) {
        if (weights->values.size() != spectrum.values.size())
            throw LengthMismatch("weights and spectrum differ in length");
        const double limit = 2.0 / sc.branch(1).d;
        std::vector<std::pair<std::size_t, double>> first;
        for (std::size_t i = 0; i < spectrum.values.size(); ++i) {
            const auto& lab = spectrum.labels[i];
            if (!lab.bounded && lab.k == 1 && lab.n >= n_lo && lab.n <= n_hi)
                first.emplace_back(lab.n, weights->values[i]);
        }
        std::sort(first.begin(), first.end());
        std::vector<double> scaled;
        for (const auto& [n, a] : first) {
            WeightRow w{n, a, limit, static_cast<double>(n) * std::abs(a - limit)};
            rep.weights.push_back(w);
            scaled.push_back(w.scaled);
        }
        rep.weights_bounded = bounded_on_halves(scaled, &rep.weight_bottom_max, &rep.weight_top_max);
    }
    return rep;
}

std::string residuals_csv(const AsymptoticsReport& report)
{
    std::ostringstream os;
    os.precision(17);
    os << "branch,n,computed,main,corrected,e_n,n_e_n\n";
    for (const auto& r : report.rows)
        os << r.k << ',' << r.n << ',' << r.computed << ',' << r.main << ',' << r.corrected << ',' << r.e << ','
           << r.scaled << '\n';
    return os.str();
}

} // namespace tss
