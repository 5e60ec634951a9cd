#include "tsspec/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

#include <boost/math/tools/toms748_solve.hpp>

#include "tsspec/errors.hpp"

namespace tss {

namespace {

const Rational kRootWidth = Rational(1, 1000000000000000); // 1e-15 relative

std::size_t count_m(const TimeScale& ts) { return ts.size(); }

void require_discrete(const TimeScale& ts, const char* what)
{
    if (ts.n_segments() > 0)
        throw NotSupported(std::string(what) + " needs a purely discrete scale (N = 0)");
}

// ---------------------------------------------------------------------------
// numeric root finding

// lambda_11 < lambda_10 < lambda_21 < lambda_20 < ..., allowing order swaps
// within `slack` (relative) where the two spectra nearly touch.
bool interlaced(const std::vector<double>& r0, const std::vector<double>& r1, double slack = 1e-10)
{
    if (r1.size() < r0.size() || r1.size() > r0.size() + 1)
        return false;
    auto below = [&](double a, double b) { return a < b + slack * std::max(1.0, std::abs(b)); };
    for (std::size_t n = 0; n < r0.size(); ++n) {
        if (!below(r1[n], r0[n]))
            return false;
        if (n + 1 < r1.size() && !below(r0[n], r1[n + 1]))
            return false;
    }
    return true;
}

void evaluate_phases(const PhaseEval& phase, const std::vector<double>& lambda, std::vector<std::array<double, 2>>& out,
                     unsigned jobs)
{
    const std::size_t n = lambda.size();
    out.assign(n, {0.0, 0.0});
    auto work = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i)
            out[i] = phase(lambda[i]);
    };
    jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(n / 16 + 1)));
    if (jobs == 1) {
        work(0, n);
        return;
    }
    std::vector<std::thread> threads;
    std::size_t chunk = (n + jobs - 1) / jobs;
    for (unsigned t = 0; t < jobs; ++t) {
        std::size_t b = t * chunk, e = std::min(n, b + chunk);
        if (b < e)
            threads.emplace_back(work, b, e);
    }
    for (auto& th : threads)
        th.join();
}

// Solves phi_j(lambda) = target inside [lo, hi].
double polish(const PhaseEval& phase, int j, double target, double lo, double hi, double flo, double fhi)
{
    if (flo == 0.0)
        return lo;
    if (fhi == 0.0)
        return hi;
    auto f = [&](double x) { return phase(x)[j] - target; };
    auto tol = [](double a, double b) { return std::abs(b - a) <= 4e-16 * std::max(1.0, std::abs(a)); };
    std::uintmax_t iters = 200;
    auto r = boost::math::tools::toms748_solve(f, lo, hi, flo, fhi, tol, iters);
    return 0.5 * (r.first + r.second);
}

// Zeros of Theta_0 and Theta_1 in (floor, lambda_max]: the k-th zero of
// Theta_j is where phi_j crosses k pi.  The grid only supplies brackets.
std::pair<std::vector<double>, std::vector<double>> numeric_roots(const PhaseEval& phase, double& floor,
                                                                  double lambda_max, double step, unsigned jobs)
{
    // no zero may sit below the window: phi_j(floor) < pi
    for (int i = 0; i < 60; ++i) {
        auto p = phase(floor);
        if (p[0] < M_PI && p[1] < M_PI)
            break;
        floor -= 10.0 + std::abs(floor);
    }
    for (int round = 0; round <= 3; ++round) {
        double h = step / std::pow(2.0, round);
        double tmax = std::sqrt(std::max(0.0, lambda_max - floor));
        auto cells = static_cast<std::size_t>(std::ceil(tmax / h));
        std::vector<double> lambda;
        for (std::size_t i = 0; i <= cells; ++i) {
            double t = std::min(tmax, h * static_cast<double>(i));
            lambda.push_back(floor + t * t);
        }
        std::vector<std::array<double, 2>> phi;
        evaluate_phases(phase, lambda, phi, jobs);

        bool monotone = true;
        for (std::size_t i = 1; i < phi.size(); ++i)
            for (int j = 0; j < 2; ++j)
                if (phi[i][j] < phi[i - 1][j] - 1e-9)
                    monotone = false;
        if (!monotone)
            continue;

        std::vector<double> roots[2];
        for (int j = 0; j < 2; ++j) {
            std::size_t cell = 1;
            for (long k = 1;; ++k) {
                double target = M_PI * static_cast<double>(k);
                if (phi.back()[j] < target)
                    break;
                while (cell < phi.size() && phi[cell][j] < target)
                    ++cell;
                roots[j].push_back(polish(phase, j, target, lambda[cell - 1], lambda[cell],
                                          phi[cell - 1][j] - target, phi[cell][j] - target));
            }
        }
        if (interlaced(roots[0], roots[1]))
            return {roots[0], roots[1]};
    }
    throw RootMissSuspected("eigenvalue phases are inconsistent after 3 grid refinements");
}

double default_lambda_max_discrete(const TimeScale& ts, const Potential& q)
{
    // Gershgorin-type bound for the finite Jacobi-like problem
    double gmin = std::numeric_limits<double>::infinity();
    for (const auto& g : ts.gaps())
        gmin = std::min(gmin, to_double(g));
    double qmax = 0.0;
    for (const auto& [l, v] : q.isolated)
        qmax = std::max(qmax, std::abs(to_double(v)));
    return qmax + 8.0 / (gmin * gmin) + 10.0;
}

std::pair<Spectrum, Spectrum> numeric_spectra(const TimeScale& ts, const Potential& q, const SearchOptions& opts)
{
    validate_potential(ts, q);
    PhaseEval phase(ts, q);
    double floor = search_floor(ts, q);
    double total = 0.0;
    for (const auto& d : ts.segment_lengths())
        total += to_double(d);
    double step = total > 0 ? M_PI / (8.0 * total) : 0.05;
    if (total == 0.0) {
        double gmin = std::numeric_limits<double>::infinity();
        for (const auto& g : ts.gaps())
            gmin = std::min(gmin, to_double(g));
        step = std::min(step, gmin / 16.0);
    }

    double lambda_max = opts.lambda_max;
    if (ts.n_segments() == 0)
        lambda_max = std::max(lambda_max, default_lambda_max_discrete(ts, q));
    std::pair<std::vector<double>, std::vector<double>> roots;
    for (int grow = 0;; ++grow) {
        roots = numeric_roots(phase, floor, lambda_max, step, opts.jobs);
        bool enough = opts.n_max == 0 || ts.n_segments() == 0 ||
                      (roots.first.size() >= opts.n_max && roots.second.size() >= opts.n_max);
        if (enough || grow >= 24)
            break;
        lambda_max *= 2.0;
    }

    std::pair<Spectrum, Spectrum> out;
    Spectrum* s[2] = {&out.first, &out.second};
    const std::vector<double>* r[2] = {&roots.first, &roots.second};
    for (int j = 0; j < 2; ++j) {
        s[j]->j = j;
        s[j]->values = *r[j];
        s[j]->lambda_max = lambda_max;
        s[j]->complete = ts.n_segments() == 0;
        if (opts.n_max > 0 && s[j]->values.size() > opts.n_max) {
            s[j]->values.resize(opts.n_max);
            s[j]->complete = false;
        }
        s[j]->labels.assign(s[j]->values.size(), BranchLabel{});
    }
    return out;
}

Spectrum exact_spectrum(const PolyRat& theta, int j)
{
    Spectrum s;
    s.j = j;
    s.defining = theta;
    s.roots = isolate_real_roots(theta, kRootWidth);
    if (static_cast<int>(s.roots.size()) != theta.degree())
        throw PolynomialDegenerate("characteristic polynomial has non-real roots: " + theta.to_string());
    for (const auto& r : s.roots)
        s.values.push_back(r.value);
    s.labels.assign(s.values.size(), BranchLabel{});
    s.complete = true;
    return s;
}

} // namespace

double search_floor(const TimeScale& ts, const Potential& q) { return potential_minimum(ts, q) - 10.0; }

Spectrum find_spectrum(const TimeScale& ts, const Potential& q, int j, const SearchOptions& opts)
{
    if (j != 0 && j != 1)
        throw IndexOutOfRange("j must be 0 or 1");
    if (ts.n_segments() == 0) {
        auto pair = characteristic_pair(ts, q);
        return exact_spectrum(j == 0 ? pair.exact->theta0 : pair.exact->theta1, j);
    }
    auto both = numeric_spectra(ts, q, opts);
    return j == 0 ? both.first : both.second;
}

std::pair<Spectrum, Spectrum> find_spectra(const TimeScale& ts, const Potential& q, const SearchOptions& opts)
{
    if (ts.n_segments() == 0) {
        auto pair = characteristic_pair(ts, q);
        return {exact_spectrum(pair.exact->theta0, 0), exact_spectrum(pair.exact->theta1, 1)};
    }
    return numeric_spectra(ts, q, opts);
}

Spectrum find_spectrum_numeric(const TimeScale& ts, const Potential& q, int j, const SearchOptions& opts)
{
    if (j != 0 && j != 1)
        throw IndexOutOfRange("j must be 0 or 1");
    auto both = numeric_spectra(ts, q, opts);
    return j == 0 ? both.first : both.second;
}

// ---------------------------------------------------------------------------
// weights

WeightNumbers weight_numbers(const TimeScale& ts, const Potential& q, const Spectrum& spectrum1)
{
    if (spectrum1.j != 1)
        throw IndexOutOfRange("weight numbers need the j = 1 spectrum");
    WeightNumbers w;
    w.labels = spectrum1.labels;
    if (ts.n_segments() == 0 && spectrum1.is_exact()) {
        auto pair = characteristic_pair(ts, q).exact.value();
        const PolyRat& t1 = pair.theta1;
        PolyRat deriv = t1.derivative() % t1;
        PolyRat inv;
        try {
            inv = inverse_mod(deriv, t1);
        } catch (const PolynomialDegenerate&) {
            throw NonSimpleZero("Theta_1 has a multiple zero");
        }
        PolyRat residue = (-(pair.theta0) * inv) % t1;
        w.residue = residue;
        for (const auto& r : spectrum1.roots) {
            if (sign_at_root(residue, *spectrum1.defining, r) <= 0)
                throw InconsistentData("non-positive weight number at lambda = " + std::to_string(r.value));
            if (r.is_exact()) {
                Rational a = residue(r.lo);
                w.values.push_back(to_double(a));
                w.exact.emplace_back(a);
            } else {
                w.values.push_back(value_at_root(residue, *spectrum1.defining, r));
                w.exact.emplace_back(std::nullopt);
            }
        }
        return w;
    }

    // Theta_0 at a zero of Theta_1 is tiny when the two spectra nearly touch,
    // and evaluating it directly can lose the sign.  With W(C, S) = 1 at the
    // last point carrying a derivative,
    //     Theta_0 = (S^D * Theta_1 - 1) / C^D,
    // and a first-order step moves the value from the computed root to the
    // true one.  Theta_1 enters only through small products.
    EntireEval eval(ts, q);
    for (double lam : spectrum1.values) {
        double h = 1e-20 * (1.0 + std::abs(lam));
        auto shifted = eval(Complex(lam, h));
        double d0 = shifted.theta0.imag() / h;
        double d1 = shifted.theta1.imag() / h;
        auto c = propagate_numeric(ts, q, {Complex(1), Complex(0)}, Complex(lam));
        auto sv = propagate_numeric(ts, q, {Complex(0), Complex(1)}, Complex(lam));
        double cd = 0.0, sd = 0.0;
        for (std::size_t i = 0; i < c.size(); ++i)
            if (c[i].ydelta) {
                cd = c[i].ydelta->real();
                sd = sv[i].ydelta->real();
            }
        const double t1 = c.back().y.real();
        double t0 = (sd * t1 - 1.0) / cd - d0 * t1 / d1;
        if (std::abs(d1) <= 1e-14 * std::max(1.0, std::abs(t0)))
            throw NonSimpleZero("Theta_1'(" + std::to_string(lam) + ") vanishes");
        double a = -t0 / d1;
        if (!(a > 0))
            throw InconsistentData("non-positive weight number at lambda = " + std::to_string(lam));
        w.values.push_back(a);
        w.exact.emplace_back(std::nullopt);
    }
    return w;
}

// ---------------------------------------------------------------------------
// Weyl function

Complex weyl_eval(const TimeScale& ts, const Potential& q, Complex lambda, double tolerance)
{
    EntireEval eval(ts, q);
    auto v = eval(lambda);
    if (std::abs(v.theta1) <= tolerance * std::max(1.0, std::abs(v.theta0)))
        throw PoleHit("lambda = " + std::to_string(lambda.real()) + " is a pole of the Weyl function");
    return -v.theta0 / v.theta1;
}

Rational weyl_eval_exact(const TimeScale& ts, const Potential& q, const Rational& lambda)
{
    require_discrete(ts, "exact Weyl evaluation");
    auto pair = characteristic_pair(ts, q).exact.value();
    Rational den = pair.theta1(lambda);
    if (den == 0)
        throw PoleHit("lambda = " + to_string(lambda) + " is a pole of the Weyl function");
    return -pair.theta0(lambda) / den;
}

Complex weyl_eval_m(const TimeScale& ts, const Potential& q, std::size_t m, Complex lambda, double tolerance)
{
    EntireEval eval(ts, q);
    auto d = eval.d_values(lambda);
    if (m < 1 || m > d.size())
        throw IndexOutOfRange("m = " + std::to_string(m) + " outside 1.." + std::to_string(d.size()));
    auto [d0, d1] = d[m - 1];
    if (std::abs(d1) <= tolerance * std::max(1.0, std::abs(d0)))
        throw PoleHit("lambda is a pole of M_" + std::to_string(m));
    return -d0 / d1;
}

WeylFunction WeylFunction::from_characteristic(EntireEval eval)
{
    WeylFunction w;
    w.eval_ = std::move(eval);
    return w;
}

WeylFunction WeylFunction::from_ratio(PolyRat num, PolyRat den)
{
    if (den.is_zero())
        throw PolynomialDegenerate("Weyl function with zero denominator");
    WeylFunction w;
    w.num_ = std::move(num);
    w.den_ = std::move(den);
    return w;
}

WeylFunction WeylFunction::from_partial_fractions(double constant, std::vector<double> poles,
                                                  std::vector<double> residues)
{
    if (poles.size() != residues.size())
        throw LengthMismatch("poles and residues differ in length");
    WeylFunction w;
    w.constant_ = constant;
    w.poles_ = std::move(poles);
    w.residues_ = std::move(residues);
    return w;
}

Complex WeylFunction::operator()(Complex lambda, double tolerance) const
{
    if (eval_) {
        auto v = (*eval_)(lambda);
        if (std::abs(v.theta1) <= tolerance * std::max(1.0, std::abs(v.theta0)))
            throw PoleHit("lambda is a pole of the Weyl function");
        return -v.theta0 / v.theta1;
    }
    if (num_) {
        Complex d = (*den_)(lambda);
        Complex n = (*num_)(lambda);
        if (std::abs(d) <= tolerance * std::max(1.0, std::abs(n)))
            throw PoleHit("lambda is a pole of the Weyl function");
        return n / d;
    }
    Complex acc = constant_;
    for (std::size_t i = 0; i < poles_.size(); ++i) {
        Complex diff = lambda - poles_[i];
        if (std::abs(diff) <= tolerance * std::max(1.0, std::abs(poles_[i])))
            throw PoleHit("lambda is a pole of the Weyl function");
        acc += residues_[i] / diff;
    }
    return acc;
}

Rational WeylFunction::operator()(const Rational& lambda) const
{
    if (!num_)
        throw NotExact("Weyl function has no exact form");
    Rational d = (*den_)(lambda);
    if (d == 0)
        throw PoleHit("lambda = " + to_string(lambda) + " is a pole of the Weyl function");
    return (*num_)(lambda) / d;
}

Rational weyl_constant(const TimeScale& ts)
{
    if (ts.size() == 1)
        return Rational(0);
    if (ts.n_segments() == 0 || ts.mu0())
        return -ts.gap(1);
    return Rational(0);
}

// ---------------------------------------------------------------------------
// reconstruction

Rational theta_leading_coefficient(const TimeScale& ts, int j)
{
    require_discrete(ts, "leading coefficient formula");
    const std::size_t M = count_m(ts);
    Rational lc = (M - 2) % 2 == 0 ? Rational(1) : Rational(-1);
    lc *= ts.gap(M - 1);
    if (j == 0) {
        for (std::size_t l = 1; l <= M - 2; ++l)
            lc *= ts.gap(l) * ts.gap(l);
    } else {
        lc *= ts.gap(1);
        for (std::size_t l = 2; l <= M - 2; ++l)
            lc *= ts.gap(l) * ts.gap(l);
    }
    return lc;
}

PolyRat monic_from_roots(const Spectrum& spectrum, bool strict)
{
    const std::size_t n = spectrum.values.size();
    if (spectrum.defining && spectrum.defining->degree() == static_cast<int>(n) && spectrum.roots.size() == n)
        return spectrum.defining->monic();
    std::vector<Rational> exact;
    if (spectrum.roots.size() == n &&
        std::all_of(spectrum.roots.begin(), spectrum.roots.end(), [](const IsolatedRoot& r) { return r.is_exact(); })) {
        for (const auto& r : spectrum.roots)
            exact.push_back(r.lo);
    } else {
        if (strict)
            throw NotExact("eigenvalues are not given exactly");
        for (double v : spectrum.values)
            exact.push_back(rationalize(v, Integer(1000000000000LL)));
    }
    PolyRat p = PolyRat::constant(1);
    for (const auto& r : exact)
        p *= PolyRat{-r, Rational(1)};
    return p;
}

PolyRat hadamard_reconstruct(const Spectrum& spectrum, const TimeScale& ts, bool strict)
{
    require_discrete(ts, "Hadamard reconstruction");
    const std::size_t expected = count_m(ts) - 2;
    if (spectrum.values.size() != expected)
        throw WrongCount("expected " + std::to_string(expected) + " eigenvalues, got " +
                         std::to_string(spectrum.values.size()));
    return theta_leading_coefficient(ts, spectrum.j) * monic_from_roots(spectrum, strict);
}

WeylFunction weyl_from_spectral_data(const Spectrum& spectrum1, const WeightNumbers& weights, const TimeScale& ts,
                                     bool strict)
{
    if (spectrum1.values.size() != weights.values.size())
        throw LengthMismatch("spectrum has " + std::to_string(spectrum1.values.size()) + " values but " +
                             std::to_string(weights.values.size()) + " weights were given");
    if (ts.n_segments() > 0)
        return WeylFunction::from_partial_fractions(to_double(weyl_constant(ts)), spectrum1.values, weights.values);

    const std::size_t expected = count_m(ts) - 2;
    if (spectrum1.values.size() != expected)
        throw WrongCount("expected " + std::to_string(expected) + " eigenvalues, got " +
                         std::to_string(spectrum1.values.size()));

    PolyRat p = monic_from_roots(spectrum1, strict);
    PolyRat residue;
    bool exact_roots = spectrum1.roots.size() == spectrum1.values.size();
    if (weights.residue && exact_roots && spectrum1.defining) {
        residue = *weights.residue % p;
    } else {
        // Lagrange interpolation through (lambda_n, alpha_n)
        std::vector<Rational> xs, ys;
        bool roots_rational = exact_roots && std::all_of(spectrum1.roots.begin(), spectrum1.roots.end(),
                                                         [](const IsolatedRoot& r) { return r.is_exact(); });
        for (std::size_t i = 0; i < spectrum1.values.size(); ++i) {
            bool have_weight = i < weights.exact.size() && weights.exact[i].has_value();
            if (strict && !(roots_rational && have_weight))
                throw NotExact("spectral data are not given exactly");
            xs.push_back(roots_rational ? spectrum1.roots[i].lo
                                        : rationalize(spectrum1.values[i], Integer(1000000000000LL)));
            ys.push_back(have_weight ? *weights.exact[i] : rationalize(weights.values[i], Integer(1000000000000LL)));
        }
        if (!roots_rational) {
            p = PolyRat::constant(1);
            for (const auto& x : xs)
                p *= PolyRat{-x, Rational(1)};
        }
        for (std::size_t i = 0; i < xs.size(); ++i) {
            PolyRat basis = PolyRat::constant(1);
            Rational denom = 1;
            for (std::size_t k = 0; k < xs.size(); ++k) {
                if (k == i)
                    continue;
                basis *= PolyRat{-xs[k], Rational(1)};
                denom *= xs[i] - xs[k];
            }
            residue += basis * Rational(ys[i] / denom);
        }
    }
    PolyRat r = (residue * p.derivative()) % p;
    PolyRat num = weyl_constant(ts) * p + r;
    return WeylFunction::from_ratio(num, p);
}

// ---------------------------------------------------------------------------
// checks

CheckReport spectra_disjointness_check(const Spectrum& s0, const Spectrum& s1, double tolerance)
{
    CheckReport rep;
    rep.measure = std::numeric_limits<double>::infinity();
    for (double a : s0.values)
        for (double b : s1.values)
            rep.measure = std::min(rep.measure, std::abs(a - b));
    if (s0.defining && s1.defining) {
        PolyRat g = gcd(*s0.defining, *s1.defining);
        if (g.degree() > 0) {
            rep.pass = false;
            rep.violations.push_back("common factor " + g.to_string());
        }
        return rep;
    }
    for (double a : s0.values)
        for (double b : s1.values)
            if (std::abs(a - b) <= tolerance * std::max(1.0, std::abs(a))) {
                rep.pass = false;
                rep.violations.push_back("eigenvalue " + std::to_string(a) + " appears in both spectra");
            }
    return rep;
}

CheckReport weight_norm_identity_check(const TimeScale& ts, const Potential& q, const Spectrum& spectrum1,
                                       const WeightNumbers& weights, double tolerance)
{
    if (spectrum1.values.size() != weights.values.size())
        throw LengthMismatch("spectrum and weights differ in length");
    CheckReport rep;
    if (ts.n_segments() == 0 && spectrum1.defining && weights.residue) {
        // Nrm(lambda) = sum_k g_k C(a_{k+1}, lambda)^2, k = 1..M-2
        auto states = propagate_exact(ts, q, {Rational(1), Rational(0)});
        PolyRat norm;
        for (std::size_t k = 1; k + 2 <= ts.size(); ++k)
            norm += ts.gap(k) * (states[k].y * states[k].y);
        PolyRat defect = (*weights.residue * norm - PolyRat::constant(1)) % *spectrum1.defining;
        rep.pass = defect.is_zero();
        if (!rep.pass)
            rep.violations.push_back("alpha * ||C||^2 - 1 does not vanish on the spectrum: " + defect.to_string());
        PolyRat reduced = (*weights.residue * norm) % *spectrum1.defining;
        for (const auto& r : spectrum1.roots)
            rep.values.push_back(value_at_root(reduced, *spectrum1.defining, r));
        rep.measure = 0.0;
        for (double v : rep.values)
            rep.measure = std::max(rep.measure, std::abs(v - 1.0));
        return rep;
    }

    const double t_r = ts.mu1() ? ts.b(ts.size() - 1) : ts.max();
    for (std::size_t n = 0; n < spectrum1.values.size(); ++n) {
        SolutionSampler c(ts, q, {Complex(1), Complex(0)}, spectrum1.values[n]);
        auto f = [&](double t) {
            double v = c(jump_forward(ts, t)).real();
            return v * v;
        };
        double product = weights.values[n] * delta_integral(ts, f, ts.min(), t_r);
        rep.values.push_back(product);
        rep.measure = std::max(rep.measure, std::abs(product - 1.0));
        if (std::abs(product - 1.0) > tolerance) {
            rep.pass = false;
            rep.violations.push_back("n = " + std::to_string(n + 1) + ": product " + std::to_string(product));
        }
    }
    return rep;
}

} // namespace tss
