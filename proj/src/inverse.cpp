#include "tsspec/inverse.hpp"

#include "tsspec/errors.hpp"

namespace tss {

namespace {

void require_inverse_geometry(const TimeScale& ts)
{
    if (ts.n_segments() > 0)
        throw NotSupported("inverse recovery is only constructive on purely discrete scales; with segments the "
                           "spectral data determine q uniquely but no reconstruction algorithm is implemented");
    if (ts.size() < 3)
        throw NotSupported("inverse recovery needs at least 3 points");
}

} // namespace

const char* to_string(InputKind kind)
{
    switch (kind) {
    case InputKind::WeylFunction:
        return "weyl";
    case InputKind::TwoSpectra:
        return "two-spectra";
    case InputKind::SpectrumPlusWeights:
        return "spectrum-weights";
    }
    return "?";
}

InputKind parse_input_kind(const std::string& s)
{
    if (s == "weyl")
        return InputKind::WeylFunction;
    if (s == "two-spectra")
        return InputKind::TwoSpectra;
    if (s == "spectrum-weights")
        return InputKind::SpectrumPlusWeights;
    throw ParseError("unknown spectral data kind '" + s + "'");
}

ExactPair normalize_input(const SpectralInput& input, const TimeScale& ts)
{
    require_inverse_geometry(ts);
    const int degree = static_cast<int>(ts.size()) - 2;
    const Rational lc0 = theta_leading_coefficient(ts, 0), lc1 = theta_leading_coefficient(ts, 1);
    ExactPair out;
    switch (input.kind) {
    case InputKind::WeylFunction: {
        if (!input.weyl || !input.weyl->is_exact())
            throw NotExact("the Weyl function must be given as an exact rational function");
        PolyRat num = input.weyl->numerator(), den = input.weyl->denominator();
        PolyRat common = gcd(num, den);
        if (common.degree() > 0) {
            num = divmod(num, common).quotient;
            den = divmod(den, common).quotient;
        }
        if (den.degree() != degree)
            throw InconsistentData("denominator of M has degree " + std::to_string(den.degree()) + ", expected " +
                                   std::to_string(degree));
        Rational scale = lc1 / den.leading();
        out.theta1 = scale * den;
        out.theta0 = Rational(-scale) * num;
        break;
    }
    case InputKind::TwoSpectra: {
        if (input.spectrum0.j != 0 || input.spectrum1.j != 1)
            throw InconsistentData("two-spectra input needs the j = 0 and j = 1 spectra");
        out.theta0 = hadamard_reconstruct(input.spectrum0, ts, input.strict);
        out.theta1 = hadamard_reconstruct(input.spectrum1, ts, input.strict);
        break;
    }
    case InputKind::SpectrumPlusWeights: {
        for (double a : input.weights.values)
            if (!(a > 0))
                throw InconsistentData("weight numbers must be positive");
        WeylFunction m = weyl_from_spectral_data(input.spectrum1, input.weights, ts, input.strict);
        out.theta1 = lc1 * m.denominator();
        out.theta0 = Rational(-lc1) * m.numerator();
        break;
    }
    }
    if (out.theta0.degree() != degree || out.theta0.leading() != lc0)
        throw InconsistentData("Theta_0 does not have the degree and leading coefficient fixed by the gaps");
    if (gcd(out.theta0, out.theta1).degree() > 0)
        throw InconsistentData("Theta_0 and Theta_1 have a common zero");
    return out;
}

Recovery algorithm1(const PolyRat& theta0, const PolyRat& theta1, const TimeScale& ts)
{
    require_inverse_geometry(ts);
    const std::size_t M = ts.size();
    Recovery out;
    PolyRat d0 = theta0, d1 = theta1;
    for (std::size_t m = 1; m <= M - 2; ++m) {
        const Rational g = ts.gap(m), g_next = ts.gap(m + 1);
        RecoveryStep step;
        step.m = m;
        step.d0 = d0;
        step.d1 = d1;
        step.d0_next = d0 - g * d1;
        if (step.d0_next.is_zero())
            throw DivisionDegenerate("D_0^" + std::to_string(m + 1) + " vanishes identically");
        auto [quot, rem] = divmod(d0, step.d0_next);
        if (quot.degree() != 1)
            throw NonLinearQuotient("step " + std::to_string(m) + ": quotient has degree " +
                                    std::to_string(quot.degree()));
        step.quotient = quot;
        step.remainder = rem;
        step.q = (quot.coeff(0) - 1 - g / g_next) / (g * g);
        // alpha^m with the recovered q(a_m): a21 = g (q - l), a22 = 1 + g^2 (q - l)
        PolyRat shifted{step.q, Rational(-1)};
        PolyRat a21 = g * shifted, a22 = PolyRat{Rational(1)} + (g * g) * shifted;
        step.d1_next = a22 * d1 - a21 * d0;
        out.q.push_back(step.q);
        out.potential.isolated[m] = step.q;
        d0 = step.d0_next;
        d1 = step.d1_next;
        out.trace.steps.push_back(std::move(step));
    }
    auto pair = characteristic_pair(ts, out.potential);
    if (!pair.exact || pair.exact->theta0 != theta0 || pair.exact->theta1 != theta1)
        throw InconsistentData("no potential on this scale has the given characteristic pair");
    return out;
}

SpectralInput spectral_data(const TimeScale& ts, const Potential& q, InputKind kind)
{
    require_inverse_geometry(ts);
    SpectralInput in;
    in.kind = kind;
    in.strict = true;
    switch (kind) {
    case InputKind::WeylFunction: {
        auto pair = characteristic_pair(ts, q);
        in.weyl = WeylFunction::from_ratio(Rational(-1) * pair.exact->theta0, pair.exact->theta1);
        break;
    }
    case InputKind::TwoSpectra: {
        auto [s0, s1] = find_spectra(ts, q);
        in.spectrum0 = std::move(s0);
        in.spectrum1 = std::move(s1);
        break;
    }
    case InputKind::SpectrumPlusWeights:
        in.spectrum1 = find_spectrum(ts, q, 1);
        in.weights = weight_numbers(ts, q, in.spectrum1);
        break;
    }
    return in;
}

RoundtripReport roundtrip_check(const TimeScale& ts, const Potential& q, InputKind kind)
{
    RoundtripReport rep;
    rep.kind = kind;
    for (const auto& [l, v] : q.isolated)
        rep.original.push_back(v);
    try {
        ExactPair pair = normalize_input(spectral_data(ts, q, kind), ts);
        rep.recovered = algorithm1(pair.theta0, pair.theta1, ts).q;
        rep.pass = rep.recovered == rep.original;
        if (!rep.pass)
            rep.error = "recovered potential differs from the original";
    } catch (const Error& e) {
        rep.error = e.what();
    }
    return rep;
}

} // namespace tss
