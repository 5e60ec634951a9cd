#include "tsspec/propagation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "tsspec/errors.hpp"

namespace tss {

Mat2 mat_mul(const Mat2& x, const Mat2& y)
{
    return {x[0] * y[0] + x[1] * y[2], x[0] * y[1] + x[1] * y[3], x[2] * y[0] + x[3] * y[2],
            x[2] * y[1] + x[3] * y[3]};
}

namespace {

double norm1(const Mat2& m)
{
    return std::max(std::abs(m[0]) + std::abs(m[2]), std::abs(m[1]) + std::abs(m[3]));
}

// ---------------------------------------------------------------------------
// closed form for constant potentials

Mat2 constant_transfer(double c, double len, Complex lambda)
{
    const Complex w = (lambda - c) * (len * len);
    Complex cs, sn_over, rho_sn; // cos(rho L), sin(rho L)/rho, -rho sin(rho L)
    if (std::abs(w) < 1e-8) {
        // |rho L| < 1e-4: Taylor series in w = rho^2 L^2
        cs = 1.0 - w / 2.0 + w * w / 24.0 - w * w * w / 720.0 + w * w * w * w / 40320.0;
        Complex sinc = 1.0 - w / 6.0 + w * w / 120.0 - w * w * w / 5040.0 + w * w * w * w / 362880.0;
        sn_over = len * sinc;
        rho_sn = -(lambda - c) * len * sinc;
    } else {
        Complex rho = std::sqrt(lambda - c);
        Complex arg = rho * len;
        cs = std::cos(arg);
        Complex sn = std::sin(arg);
        sn_over = sn / rho;
        rho_sn = -rho * sn;
    }
    return {cs, sn_over, rho_sn, cs};
}

// ---------------------------------------------------------------------------
// Dormand-Prince 5(4) on Y' = [[0, 1], [q - lambda, 0]] Y

struct DpResult {
    Mat2 value;
    double error;
};

Mat2 rhs(const SegmentProfile& profile, double d, Complex lambda, double x, const Mat2& y)
{
    Complex a = profile.value(x, d) - lambda;
    return {y[2], y[3], a * y[0], a * y[1]};
}

Mat2 axpy(const Mat2& y, double h, std::initializer_list<std::pair<double, const Mat2*>> terms)
{
    Mat2 out = y;
    for (const auto& [c, k] : terms)
        for (int i = 0; i < 4; ++i)
            out[i] += h * c * (*k)[i];
    return out;
}

DpResult dormand_prince(const SegmentProfile& profile, double d, Complex lambda, double x0, double x1)
{
    constexpr double rtol = 1e-12;
    constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    constexpr double a21 = 1.0 / 5;
    constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
    constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                     a65 = -5103.0 / 18656;
    constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                     e6 = 22.0 / 525, e7 = -1.0 / 40;

    const double span = x1 - x0;
    Mat2 y = identity_mat2();
    if (span <= 0)
        return {y, 0.0};

    double h = std::min(span, 0.1 * span / (1.0 + std::sqrt(std::abs(lambda))));
    double x = x0;
    double total_error = 0.0;
    Mat2 k1 = rhs(profile, d, lambda, x, y);
    long steps = 0;
    while (x < x1) {
        if (++steps > 2000000)
            throw IntegratorFailure("too many integration steps");
        if (x + h > x1)
            h = x1 - x;
        Mat2 k2 = rhs(profile, d, lambda, x + c2 * h, axpy(y, h, {{a21, &k1}}));
        Mat2 k3 = rhs(profile, d, lambda, x + c3 * h, axpy(y, h, {{a31, &k1}, {a32, &k2}}));
        Mat2 k4 = rhs(profile, d, lambda, x + c4 * h, axpy(y, h, {{a41, &k1}, {a42, &k2}, {a43, &k3}}));
        Mat2 k5 = rhs(profile, d, lambda, x + c5 * h,
                      axpy(y, h, {{a51, &k1}, {a52, &k2}, {a53, &k3}, {a54, &k4}}));
        Mat2 k6 = rhs(profile, d, lambda, x + h,
                      axpy(y, h, {{a61, &k1}, {a62, &k2}, {a63, &k3}, {a64, &k4}, {a65, &k5}}));
        Mat2 ynew = axpy(y, h, {{b1, &k1}, {b3, &k3}, {b4, &k4}, {b5, &k5}, {b6, &k6}});
        Mat2 k7 = rhs(profile, d, lambda, x + h, ynew);

        double scale = 1e-300;
        for (int i = 0; i < 4; ++i)
            scale = std::max({scale, std::abs(y[i]), std::abs(ynew[i])});
        double err = 0.0;
        for (int i = 0; i < 4; ++i) {
            Complex e = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
            err = std::max(err, std::abs(e) / (rtol * scale));
        }
        if (!std::isfinite(err))
            throw IntegratorFailure("non-finite values while integrating a segment");
        if (err <= 1.0) {
            x += h;
            y = ynew;
            k1 = k7;
            total_error += err * rtol * scale;
        }
        double factor = err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
        h *= factor;
        if (x < x1 && h < 1e-14 * std::max(1.0, std::abs(x1)))
            throw IntegratorFailure("step size underflow while integrating a segment");
    }
    return {y, total_error};
}

DpResult transfer_with_error(const SegmentProfile& profile, double d, Complex lambda, double x0, double x1)
{
    if (profile.kind() == SegmentProfile::Kind::Constant) {
        Mat2 m = constant_transfer(profile.value(0, d), x1 - x0, lambda);
        return {m, 4 * std::numeric_limits<double>::epsilon() * norm1(m)};
    }
    // integrate piecewise between kinks so every piece is smooth
    std::vector<double> cuts{x0};
    for (double k : profile.kinks(d))
        if (k > x0 && k < x1)
            cuts.push_back(k);
    cuts.push_back(x1);
    Mat2 total = identity_mat2();
    double error = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        DpResult piece = dormand_prince(profile, d, lambda, cuts[i], cuts[i + 1]);
        error = error * norm1(piece.value) + piece.error * norm1(total);
        total = mat_mul(piece.value, total);
    }
    return {total, error};
}

// ---------------------------------------------------------------------------
// generic propagation over a value type V (PolyRat or Complex)


std::size_t max_start(const TimeScale& ts) { return ts.size() - (ts.mu1() ? 1 : 0); }

void check_start(const TimeScale& ts, std::size_t m)
{
    if (m < 1 || m > max_start(ts))
        throw IndexOutOfRange("start index " + std::to_string(m) + " outside 1.." + std::to_string(max_start(ts)));
}

} // namespace

// ---------------------------------------------------------------------------
// jump matrices

Mat2 JumpMatrix::eval(Complex lambda) const
{
    Complex g = to_double(gap);
    if (row_only)
        return {Complex(1), g, Complex(0), Complex(0)};
    Complex t = to_double(*potential) - lambda;
    return {Complex(1), g, g * t, 1.0 + g * g * t};
}

JumpMatrix jump_matrix(const TimeScale& ts, const Potential& q, std::size_t l)
{
    if (l < 1 || l + 1 > ts.size())
        throw IndexOutOfRange("gap index " + std::to_string(l) + " outside 1.." + std::to_string(ts.size() - 1));
    JumpMatrix j;
    j.index = l;
    j.gap = ts.gap(l);
    j.a11 = PolyRat::constant(1);
    j.a12 = PolyRat::constant(j.gap);
    if (!ts.in_s(l)) {
        j.row_only = true;
        return j;
    }
    j.potential = potential_at_right_end(ts, q, l);
    // q - lambda
    PolyRat t{*j.potential, Rational(-1)};
    j.a21 = j.gap * t;
    j.a22 = PolyRat::constant(1) + (j.gap * j.gap) * t;
    return j;
}

std::size_t l_index(const TimeScale& ts, std::size_t k)
{
    if (k == 0)
        return 1;
    if (k <= ts.n_segments())
        return ts.segment_index(k);
    if (k == ts.n_segments() + 1)
        return ts.size();
    throw IndexOutOfRange("segment number " + std::to_string(k) + " outside 0.." +
                          std::to_string(ts.n_segments() + 1));
}

BetaMatrix beta_product(const TimeScale& ts, const Potential& q, std::size_t k, std::size_t s)
{
    const std::size_t n = ts.n_segments();
    if (k < 1 || k > n + (ts.mu1() ? 1 : 0))
        throw IndexOutOfRange("k = " + std::to_string(k) + " outside 1.." + std::to_string(n + (ts.mu1() ? 1 : 0)));
    const std::size_t lk = l_index(ts, k);
    const std::size_t lprev = l_index(ts, k - 1);
    if (s < 1 || s > lk - lprev)
        throw IndexOutOfRange("s = " + std::to_string(s) + " outside 1.." + std::to_string(lk - lprev));

    BetaMatrix beta;
    JumpMatrix top = jump_matrix(ts, q, lk - 1);
    if (top.row_only)
        beta.rows = {{top.a11, top.a12}};
    else
        beta.rows = {{top.a11, top.a12}, {top.a21, top.a22}};
    for (std::size_t l = lk - 1; l-- > lk - s;) {
        JumpMatrix a = jump_matrix(ts, q, l);
        for (auto& row : beta.rows) {
            PolyRat c1 = row[0] * a.a11 + row[1] * a.a21;
            PolyRat c2 = row[0] * a.a12 + row[1] * a.a22;
            row = {std::move(c1), std::move(c2)};
        }
    }
    return beta;
}

Mat2 segment_transfer(const SegmentProfile& profile, double d, Complex lambda, double x0, double x1)
{
    if (!(d > 0))
        throw InvalidPotential("segment length must be positive");
    return transfer_with_error(profile, d, lambda, x0, x1).value;
}

// ---------------------------------------------------------------------------
// propagation

std::vector<ExactState> propagate_exact(const TimeScale& ts, const Potential& q, const std::array<Rational, 2>& init,
                                        std::size_t start)
{
    if (ts.n_segments() > 0)
        throw BackendMismatch("the exact backend needs a purely discrete scale (N = 0)");
    check_start(ts, start);
    std::vector<ExactState> out;
    PolyRat y = PolyRat::constant(init[0]);
    PolyRat yd = PolyRat::constant(init[1]);
    out.push_back({start, Side::Left, y, yd});
    for (std::size_t l = start; l < ts.size(); ++l) {
        JumpMatrix a = jump_matrix(ts, q, l);
        PolyRat ny = a.a11 * y + a.a12 * yd;
        if (a.row_only) {
            out.push_back({l + 1, Side::Left, ny, std::nullopt});
            return out;
        }
        PolyRat nyd = a.a21 * y + a.a22 * yd;
        y = std::move(ny);
        yd = std::move(nyd);
        out.push_back({l + 1, Side::Left, y, yd});
    }
    return out;
}

std::vector<NumericState> propagate_numeric(const TimeScale& ts, const Potential& q, const std::array<Complex, 2>& init,
                                            Complex lambda, std::size_t start)
{
    check_start(ts, start);
    std::vector<NumericState> out;
    Complex y = init[0], yd = init[1];
    for (std::size_t l = start; l <= ts.size(); ++l) {
        out.push_back({l, Side::Left, y, yd});
        if (std::size_t k = ts.segment_number(l); k != 0) {
            if (k > q.segments.size())
                throw MissingPotentialValue("no profile for segment " + std::to_string(k));
            Mat2 t = segment_transfer(q.segment(k), to_double(ts.segment_length(k)), lambda);
            Complex ny = t[0] * y + t[1] * yd;
            yd = t[2] * y + t[3] * yd;
            y = ny;
            out.push_back({l, Side::Right, y, yd});
        }
        if (l == ts.size())
            break;
        JumpMatrix a = jump_matrix(ts, q, l);
        Mat2 m = a.eval(lambda);
        Complex ny = m[0] * y + m[1] * yd;
        if (a.row_only) {
            out.push_back({l + 1, Side::Left, ny, std::nullopt});
            return out;
        }
        yd = m[2] * y + m[3] * yd;
        y = ny;
    }
    return out;
}

// ---------------------------------------------------------------------------
// entire-function evaluator

EntireEval::EntireEval(TimeScale ts, Potential q) : ts_(std::move(ts)), q_(std::move(q))
{
    for (std::size_t l = 1; l < ts_.size(); ++l)
        jumps_.push_back(jump_matrix(ts_, q_, l));
    if (q_.segments.size() != ts_.n_segments())
        throw InvalidPotential("expected one profile per segment");
}

std::vector<Mat2> EntireEval::suffix_products(Complex lambda, double* error) const
{
    const std::size_t K = ts_.size();
    const std::size_t last = max_start(ts_);
    std::vector<Mat2> suffix(last);
    Mat2 acc = identity_mat2();
    double err = 0.0;
    constexpr double eps = std::numeric_limits<double>::epsilon();
    for (std::size_t l = K; l >= 1; --l) {
        // step from a_l to a_{l+1} (or to the end when l == K)
        Mat2 step = identity_mat2();
        double step_err = 0.0;
        if (std::size_t k = ts_.segment_number(l); k != 0) {
            DpResult t = transfer_with_error(q_.segment(k), to_double(ts_.segment_length(k)), lambda, 0.0,
                                             to_double(ts_.segment_length(k)));
            step = t.value;
            step_err = t.error;
        }
        if (l < K) {
            Mat2 a = jumps_[l - 1].eval(lambda);
            step_err = step_err * norm1(a) + 4 * eps * norm1(a) * norm1(step);
            step = mat_mul(a, step);
        }
        err = err * norm1(step) + step_err * norm1(acc) + 4 * eps * norm1(acc) * norm1(step);
        acc = mat_mul(acc, step);
        if (l <= last)
            suffix[l - 1] = acc;
    }
    if (error)
        *error = err;
    return suffix;
}

EntireEval::Value EntireEval::operator()(Complex lambda) const
{
    double err = 0.0;
    auto suffix = suffix_products(lambda, &err);
    // S: (0, 1) at a_1, C: (1, 0) at a_1; terminal y is the first row
    return {suffix[0][1], suffix[0][0], err};
}

std::vector<std::array<Complex, 2>> EntireEval::d_values(Complex lambda) const
{
    auto suffix = suffix_products(lambda, nullptr);
    std::vector<std::array<Complex, 2>> out;
    out.reserve(suffix.size());
    for (const auto& p : suffix)
        out.push_back({p[1], p[0]});
    return out;
}

// ---------------------------------------------------------------------------
// phase function

namespace {

struct Rotor {
    double y, yd, phi;

    void apply(double m00, double m01, double m10, double m11)
    {
        double ny = m00 * y + m01 * yd;
        double nyd = m10 * y + m11 * yd;
        double turn = std::remainder(std::atan2(ny, nyd) - std::atan2(y, yd), 2 * M_PI);
        phi += turn;
        double r = std::hypot(ny, nyd);
        y = ny / r;
        yd = nyd / r;
    }
};

} // namespace

PhaseEval::PhaseEval(const TimeScale& ts, const Potential& q) : ts_(ts), q_(q)
{
    for (std::size_t l = 1; l < ts.size(); ++l)
        jumps_.push_back(jump_matrix(ts, q, l));
    for (std::size_t k = 1; k <= ts.n_segments(); ++k)
        segment_min_.push_back(q.segment(k).minimum(to_double(ts.segment_length(k))));
}

std::array<double, 2> PhaseEval::operator()(double lambda) const
{
    Rotor s{0.0, 1.0, 0.0};
    Rotor c{1.0, 0.0, M_PI / 2};
    for (std::size_t l = 1; l <= ts_.size(); ++l) {
        if (std::size_t k = ts_.segment_number(l); k != 0) {
            const double d = to_double(ts_.segment_length(k));
            // keep the turn of each sub-step well below pi
            double rate = std::sqrt(std::max(0.0, lambda - segment_min_[k - 1])) + 1.0;
            auto pieces = static_cast<std::size_t>(std::ceil(d * rate));
            for (std::size_t i = 0; i < pieces; ++i) {
                double x0 = d * static_cast<double>(i) / static_cast<double>(pieces);
                double x1 = d * static_cast<double>(i + 1) / static_cast<double>(pieces);
                Mat2 t = transfer_with_error(q_.segment(k), d, lambda, x0, x1).value;
                s.apply(t[0].real(), t[1].real(), t[2].real(), t[3].real());
                c.apply(t[0].real(), t[1].real(), t[2].real(), t[3].real());
            }
        }
        if (l == ts_.size())
            break;
        const JumpMatrix& a = jumps_[l - 1];
        const double g = to_double(a.gap);
        s.apply(1, g, 0, 1);
        c.apply(1, g, 0, 1);
        if (a.row_only)
            break;
        const double shear = g * (to_double(*a.potential) - lambda);
        s.apply(1, 0, shear, 1);
        c.apply(1, 0, shear, 1);
    }
    return {s.phi, c.phi};
}

// ---------------------------------------------------------------------------
// exact characteristic data

std::vector<ExactPair> all_d_functions(const TimeScale& ts, const Potential& q)
{
    if (ts.n_segments() > 0)
        throw BackendMismatch("exact D-functions need a purely discrete scale (N = 0)");
    const std::size_t K = ts.size();
    const std::size_t last = max_start(ts);
    std::vector<ExactPair> out(last);
    // running first row (r1, r2) of the product alpha^{K-1} ... alpha^m
    PolyRat r1 = PolyRat::constant(1), r2;
    for (std::size_t m = K; m >= 1; --m) {
        if (m < K) {
            JumpMatrix a = jump_matrix(ts, q, m);
            PolyRat n1 = r1 * a.a11 + r2 * a.a21;
            PolyRat n2 = r1 * a.a12 + r2 * a.a22;
            r1 = std::move(n1);
            r2 = std::move(n2);
        }
        if (m <= last)
            out[m - 1] = {r2, r1};
    }
    return out;
}

ExactPair d_functions(const TimeScale& ts, const Potential& q, std::size_t m)
{
    if (ts.n_segments() > 0)
        throw BackendMismatch("exact D-functions need a purely discrete scale (N = 0)");
    check_start(ts, m);
    auto s = propagate_exact(ts, q, {Rational(0), Rational(1)}, m);
    auto c = propagate_exact(ts, q, {Rational(1), Rational(0)}, m);
    return {s.back().y, c.back().y};
}

CharacteristicPair characteristic_pair(const TimeScale& ts, const Potential& q)
{
    validate_potential(ts, q);
    CharacteristicPair out{std::nullopt, EntireEval(ts, q)};
    if (ts.n_segments() == 0)
        out.exact = d_functions(ts, q, 1);
    return out;
}

// ---------------------------------------------------------------------------
// sampling

SolutionSampler::SolutionSampler(const TimeScale& ts, const Potential& q, const std::array<Complex, 2>& init,
                                 Complex lambda)
    : ts_(ts), q_(q), lambda_(lambda)
{
    for (const auto& s : propagate_numeric(ts, q, init, lambda))
        if (s.side == Side::Left)
            starts_.push_back({s.y, s.ydelta.value_or(Complex(0))});
}

Complex SolutionSampler::operator()(double x) const
{
    for (std::size_t l = 1; l <= ts_.size(); ++l) {
        if (x < ts_.a(l) || x > ts_.b(l))
            continue;
        const auto& st = starts_.at(l - 1);
        if (x == ts_.a(l))
            return st[0];
        std::size_t k = ts_.segment_number(l);
        double d = to_double(ts_.segment_length(k));
        Mat2 t = transfer_with_error(q_.segment(k), d, lambda_, 0.0, x - ts_.a(l)).value;
        return t[0] * st[0] + t[1] * st[1];
    }
    throw NotInScale("point " + std::to_string(x) + " is not in the time scale");
}

} // namespace tss
