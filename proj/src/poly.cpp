#include "tsspec/poly.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <optional>
#include <sstream>

#include "tsspec/errors.hpp"

namespace tss {

// ---------------------------------------------------------------------------
// rationals

namespace {

Integer floor_div(const Integer& n, const Integer& d)
{
    Integer q = n / d;
    if ((n % d != 0) && ((n < 0) != (d < 0)))
        q -= 1;
    return q;
}

Integer floor_of(const Rational& x)
{
    return floor_div(boost::multiprecision::numerator(x), boost::multiprecision::denominator(x));
}

Integer parse_integer(std::string_view digits, std::string_view whole)
{
    if (digits.empty())
        throw ParseError("expected digits in '" + std::string(whole) + "'");
    for (char c : digits)
        if (!std::isdigit(static_cast<unsigned char>(c)))
            throw ParseError("invalid number '" + std::string(whole) + "'");
    // cpp_int reads a leading 0 as an octal prefix
    std::size_t first = digits.find_first_not_of('0');
    return first == std::string_view::npos ? Integer(0) : Integer(std::string(digits.substr(first)));
}

Integer pow10(long e)
{
    Integer r = 1;
    for (long i = 0; i < e; ++i)
        r *= 10;
    return r;
}

} // namespace

Rational parse_rational(std::string_view text)
{
    std::string_view s = text;
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
        s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
        s.remove_suffix(1);
    if (s.empty())
        throw ParseError("empty rational literal");

    bool negative = false;
    if (s.front() == '-' || s.front() == '+') {
        negative = s.front() == '-';
        s.remove_prefix(1);
    }

    Rational result;
    if (auto slash = s.find('/'); slash != std::string_view::npos) {
        Integer num = parse_integer(s.substr(0, slash), text);
        Integer den = parse_integer(s.substr(slash + 1), text);
        if (den == 0)
            throw ParseError("zero denominator in '" + std::string(text) + "'");
        result = Rational(num, den);
    } else {
        long exponent = 0;
        if (auto e = s.find_first_of("eE"); e != std::string_view::npos) {
            std::string_view exp = s.substr(e + 1);
            bool exp_negative = false;
            if (!exp.empty() && (exp.front() == '-' || exp.front() == '+')) {
                exp_negative = exp.front() == '-';
                exp.remove_prefix(1);
            }
            Integer ev = parse_integer(exp, text);
            if (ev > 4000)
                throw ParseError("exponent out of range in '" + std::string(text) + "'");
            exponent = ev.convert_to<long>();
            if (exp_negative)
                exponent = -exponent;
            s = s.substr(0, e);
        }
        std::string digits;
        if (auto dot = s.find('.'); dot != std::string_view::npos) {
            std::string_view frac = s.substr(dot + 1);
            std::string_view whole = s.substr(0, dot);
            if (whole.empty() && frac.empty())
                throw ParseError("invalid number '" + std::string(text) + "'");
            digits = std::string(whole) + std::string(frac);
            exponent -= static_cast<long>(frac.size());
        } else {
            digits = std::string(s);
        }
        Integer mantissa = parse_integer(digits, text);
        if (exponent >= 0)
            result = Rational(mantissa * pow10(exponent));
        else
            result = Rational(mantissa, pow10(-exponent));
    }
    return negative ? Rational(-result) : result;
}

std::string to_string(const Rational& value)
{
    const Integer& den = boost::multiprecision::denominator(value);
    if (den == 1)
        return boost::multiprecision::numerator(value).str();
    return boost::multiprecision::numerator(value).str() + "/" + den.str();
}

double to_double(const Rational& value)
{
    return value.convert_to<double>();
}

Rational exact_rational(double value)
{
    if (!std::isfinite(value))
        throw ParseError("non-finite value cannot be converted to a rational");
    int exp = 0;
    double mant = std::frexp(value, &exp);
    // 53 bits of mantissa as an integer
    auto scaled = static_cast<long long>(std::ldexp(mant, 53));
    exp -= 53;
    Rational r(scaled);
    if (exp >= 0)
        r *= Rational(Integer(1) << exp);
    else
        r /= Rational(Integer(1) << (-exp));
    return r;
}

Rational rationalize(double value, const Integer& max_denominator)
{
    Rational exact = exact_rational(value);
    bool negative = exact < 0;
    if (negative)
        exact = -exact;
    Integer n = boost::multiprecision::numerator(exact);
    Integer d = boost::multiprecision::denominator(exact);
    if (d <= max_denominator)
        return negative ? Rational(-exact) : exact;

    Integer p0 = 0, q0 = 1, p1 = 1, q1 = 0;
    while (true) {
        Integer a = n / d;
        Integer q2 = q0 + a * q1;
        if (q2 > max_denominator)
            break;
        Integer p2 = p0 + a * p1;
        p0 = p1;
        q0 = q1;
        p1 = p2;
        q1 = q2;
        Integer r = n - a * d;
        n = d;
        d = r;
        if (d == 0)
            break;
    }
    Integer k = (max_denominator - q0) / q1;
    Rational bound1(p0 + k * p1, q0 + k * q1);
    Rational bound2(p1, q1);
    Rational best = (abs(bound2 - exact) <= abs(bound1 - exact)) ? bound2 : bound1;
    return negative ? Rational(-best) : best;
}

Rational simplest_between(const Rational& lo, const Rational& hi)
{
    if (lo > hi)
        throw ParseError("simplest_between: empty interval");
    if (lo <= 0 && hi >= 0)
        return Rational(0);
    if (hi < 0)
        return -simplest_between(-hi, -lo);
    Integer fl = floor_of(lo);
    if (Rational(fl) == lo)
        return lo;
    if (Rational(fl + 1) <= hi)
        return Rational(fl + 1);
    // lo and hi share the integer part; recurse on reciprocals of the fractions
    Rational a = lo - Rational(fl);
    Rational b = hi - Rational(fl);
    return Rational(fl) + 1 / simplest_between(1 / b, 1 / a);
}

// ---------------------------------------------------------------------------
// polynomials

PolyRat::PolyRat(std::initializer_list<Rational> coeffs) : coeffs_(coeffs) { trim(); }

PolyRat::PolyRat(std::vector<Rational> coeffs) : coeffs_(std::move(coeffs)) { trim(); }

PolyRat PolyRat::constant(const Rational& c) { return PolyRat({c}); }

PolyRat PolyRat::monomial(const Rational& c, int k)
{
    std::vector<Rational> v(static_cast<std::size_t>(k) + 1);
    v.back() = c;
    return PolyRat(std::move(v));
}

PolyRat PolyRat::identity() { return monomial(Rational(1), 1); }

void PolyRat::trim()
{
    while (!coeffs_.empty() && coeffs_.back() == 0)
        coeffs_.pop_back();
}

Rational PolyRat::coeff(int k) const
{
    if (k < 0 || k > degree())
        return Rational(0);
    return coeffs_[static_cast<std::size_t>(k)];
}

Rational PolyRat::leading() const
{
    return coeffs_.empty() ? Rational(0) : coeffs_.back();
}

Rational PolyRat::operator()(const Rational& x) const
{
    Rational acc = 0;
    for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it)
        acc = acc * x + *it;
    return acc;
}

double PolyRat::operator()(double x) const
{
    double acc = 0.0;
    for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it)
        acc = acc * x + to_double(*it);
    return acc;
}

std::complex<double> PolyRat::operator()(std::complex<double> x) const
{
    std::complex<double> acc = 0.0;
    for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it)
        acc = acc * x + to_double(*it);
    return acc;
}

PolyRat PolyRat::derivative() const
{
    if (coeffs_.size() <= 1)
        return {};
    std::vector<Rational> d(coeffs_.size() - 1);
    for (std::size_t k = 1; k < coeffs_.size(); ++k)
        d[k - 1] = coeffs_[k] * static_cast<long>(k);
    return PolyRat(std::move(d));
}

PolyRat PolyRat::monic() const
{
    if (is_zero())
        return {};
    PolyRat r = *this;
    Rational lc = leading();
    for (auto& c : r.coeffs_)
        c /= lc;
    return r;
}

PolyRat& PolyRat::operator+=(const PolyRat& rhs)
{
    if (rhs.coeffs_.size() > coeffs_.size())
        coeffs_.resize(rhs.coeffs_.size());
    for (std::size_t k = 0; k < rhs.coeffs_.size(); ++k)
        coeffs_[k] += rhs.coeffs_[k];
    trim();
    return *this;
}

PolyRat& PolyRat::operator-=(const PolyRat& rhs)
{
    if (rhs.coeffs_.size() > coeffs_.size())
        coeffs_.resize(rhs.coeffs_.size());
    for (std::size_t k = 0; k < rhs.coeffs_.size(); ++k)
        coeffs_[k] -= rhs.coeffs_[k];
    trim();
    return *this;
}

PolyRat& PolyRat::operator*=(const PolyRat& rhs)
{
    if (is_zero() || rhs.is_zero()) {
        coeffs_.clear();
        return *this;
    }
    std::vector<Rational> out(coeffs_.size() + rhs.coeffs_.size() - 1);
    for (std::size_t i = 0; i < coeffs_.size(); ++i) {
        if (coeffs_[i] == 0)
            continue;
        for (std::size_t j = 0; j < rhs.coeffs_.size(); ++j)
            out[i + j] += coeffs_[i] * rhs.coeffs_[j];
    }
    coeffs_ = std::move(out);
    trim();
    return *this;
}

PolyRat& PolyRat::operator*=(const Rational& rhs)
{
    for (auto& c : coeffs_)
        c *= rhs;
    trim();
    return *this;
}

PolyRat operator-(PolyRat a)
{
    for (auto& c : a.coeffs_)
        c = -c;
    return a;
}

std::string PolyRat::to_string(const char* var) const
{
    if (is_zero())
        return "0";
    std::ostringstream os;
    bool first = true;
    for (int k = degree(); k >= 0; --k) {
        Rational c = coeff(k);
        if (c == 0)
            continue;
        bool neg = c < 0;
        Rational a = neg ? Rational(-c) : c;
        if (first)
            os << (neg ? "-" : "");
        else
            os << (neg ? " - " : " + ");
        first = false;
        if (k == 0 || a != 1) {
            os << tss::to_string(a);
            if (k > 0)
                os << "*";
        }
        if (k >= 1)
            os << var;
        if (k >= 2)
            os << "^" << k;
    }
    return os.str();
}

DivMod divmod(const PolyRat& numerator, const PolyRat& divisor)
{
    if (divisor.is_zero())
        throw PolynomialDegenerate("polynomial division by zero");
    std::vector<Rational> rem = numerator.coefficients();
    const int dd = divisor.degree();
    const int nd = numerator.degree();
    if (nd < dd)
        return {PolyRat{}, numerator};
    std::vector<Rational> quot(static_cast<std::size_t>(nd - dd + 1));
    const Rational lc = divisor.leading();
    for (int k = nd - dd; k >= 0; --k) {
        Rational c = rem[static_cast<std::size_t>(k + dd)] / lc;
        quot[static_cast<std::size_t>(k)] = c;
        if (c == 0)
            continue;
        for (int i = 0; i <= dd; ++i)
            rem[static_cast<std::size_t>(k + i)] -= c * divisor.coeff(i);
    }
    rem.resize(static_cast<std::size_t>(dd));
    return {PolyRat(std::move(quot)), PolyRat(std::move(rem))};
}

PolyRat operator%(const PolyRat& a, const PolyRat& m)
{
    return divmod(a, m).remainder;
}

PolyRat gcd(const PolyRat& a, const PolyRat& b)
{
    PolyRat x = a, y = b;
    while (!y.is_zero()) {
        PolyRat r = x % y;
        x = std::move(y);
        y = r.monic();
    }
    return x.monic();
}

PolyRat inverse_mod(const PolyRat& a, const PolyRat& m)
{
    // extended Euclid tracking only the coefficient of `a`
    PolyRat r0 = m, r1 = a % m;
    PolyRat s0{}, s1 = PolyRat::constant(1);
    while (!r1.is_zero()) {
        DivMod qr = divmod(r0, r1);
        PolyRat s2 = s0 - qr.quotient * s1;
        r0 = std::move(r1);
        r1 = std::move(qr.remainder);
        s0 = std::move(s1);
        s1 = std::move(s2);
    }
    if (r0.degree() != 0)
        throw PolynomialDegenerate("polynomials share a common factor; no modular inverse");
    return (s0 * (1 / r0.leading())) % m;
}

int sign_variations(const std::vector<int>& signs)
{
    int count = 0;
    int last = 0;
    for (int s : signs) {
        if (s == 0)
            continue;
        if (last != 0 && s != last)
            ++count;
        last = s;
    }
    return count;
}

SturmSequence::SturmSequence(const PolyRat& p)
{
    if (p.is_zero())
        throw PolynomialDegenerate("Sturm sequence of the zero polynomial");
    auto normalized = [](PolyRat q) {
        Rational lc = q.leading();
        return q * Rational(1 / abs(lc));
    };
    chain_.push_back(normalized(p));
    if (p.degree() == 0)
        return;
    chain_.push_back(normalized(p.derivative()));
    while (true) {
        PolyRat r = -(chain_[chain_.size() - 2] % chain_.back());
        if (r.is_zero())
            break;
        chain_.push_back(normalized(r));
    }
    if (chain_.back().degree() > 0)
        throw PolynomialDegenerate("polynomial is not square-free: " + p.to_string());
}

int SturmSequence::variations_at(const Rational& x) const
{
    std::vector<int> signs;
    signs.reserve(chain_.size());
    for (const auto& q : chain_)
        signs.push_back(q(x).sign());
    return sign_variations(signs);
}

int SturmSequence::count_roots(const Rational& lo, const Rational& hi) const
{
    return variations_at(lo) - variations_at(hi);
}

Rational cauchy_root_bound(const PolyRat& p)
{
    Rational m = 0;
    Rational lc = abs(p.leading());
    for (int k = 0; k < p.degree(); ++k)
        m = std::max(m, Rational(abs(p.coeff(k)) / lc));
    return m + 1;
}

namespace {

struct Bracket {
    Rational lo;
    Rational hi;
};

bool narrow_enough(const Bracket& b, const Rational& rel_width)
{
    Rational scale = std::max({Rational(1), Rational(abs(b.lo)), Rational(abs(b.hi))});
    return b.hi - b.lo <= rel_width * scale;
}

// Refines a bracket holding exactly one simple root of p.  Returns the exact
// root when one is met on the way.
std::optional<Rational> refine_bracket(const PolyRat& p, Bracket& b, const Rational& rel_width)
{
    if (p(b.hi) == 0)
        return b.hi;
    int s_lo = p(b.lo).sign();
    while (!narrow_enough(b, rel_width)) {
        Rational cand = simplest_between(b.lo, b.hi);
        if (cand != b.lo && p(cand) == 0)
            return cand;
        Rational mid = (b.lo + b.hi) / 2;
        int s = p(mid).sign();
        if (s == 0)
            return mid;
        if (s == s_lo)
            b.lo = mid;
        else
            b.hi = mid;
    }
    return std::nullopt;
}

} // namespace

std::vector<IsolatedRoot> isolate_real_roots(const PolyRat& p, const Rational& rel_width)
{
    if (p.is_zero())
        throw PolynomialDegenerate("root isolation of the zero polynomial");
    SturmSequence{p}; // square-free check

    std::vector<Rational> exact;
    std::vector<Bracket> brackets;
    PolyRat work = p;

    bool restart = true;
    while (restart) {
        restart = false;
        brackets.clear();
        if (work.degree() <= 0)
            break;
        SturmSequence sturm(work);
        Rational bound = cauchy_root_bound(work);
        std::vector<Bracket> stack{{-bound, bound}};
        std::vector<Bracket> singles;
        std::optional<Rational> found;
        while (!stack.empty() && !found) {
            Bracket b = stack.back();
            stack.pop_back();
            int n = sturm.count_roots(b.lo, b.hi);
            if (n == 0)
                continue;
            if (n == 1) {
                singles.push_back(b);
                continue;
            }
            Rational mid = (b.lo + b.hi) / 2;
            if (work(mid) == 0) {
                found = mid;
                break;
            }
            stack.push_back({mid, b.hi});
            stack.push_back({b.lo, mid});
        }
        if (!found) {
            for (auto& b : singles) {
                found = refine_bracket(work, b, rel_width);
                if (found)
                    break;
                brackets.push_back(b);
            }
        }
        if (found) {
            exact.push_back(*found);
            work = divmod(work, PolyRat{-*found, Rational(1)}).quotient;
            restart = true;
        }
    }

    // brackets isolate roots of the deflated polynomial; make sure none of
    // them also contains one of the exact roots of p
    for (auto& b : brackets) {
        auto contains_exact = [&] {
            return std::any_of(exact.begin(), exact.end(),
                               [&](const Rational& r) { return r >= b.lo && r <= b.hi; });
        };
        int s_lo = work(b.lo).sign();
        while (contains_exact()) {
            Rational mid = (b.lo + b.hi) / 2;
            int s = work(mid).sign();
            if (s == s_lo)
                b.lo = mid;
            else
                b.hi = mid;
        }
    }

    std::vector<IsolatedRoot> roots;
    for (const auto& r : exact)
        roots.push_back({r, r, to_double(r)});
    for (const auto& b : brackets)
        roots.push_back({b.lo, b.hi, to_double((b.lo + b.hi) / 2)});
    std::sort(roots.begin(), roots.end(),
              [](const IsolatedRoot& a, const IsolatedRoot& b) { return a.lo < b.lo; });
    return roots;
}

double value_at_root(const PolyRat& f, const PolyRat& p, IsolatedRoot root)
{
    if (root.is_exact())
        return to_double(f(root.lo));
    int s_lo = p(root.lo).sign();
    for (int iter = 0; iter < 2000; ++iter) {
        Rational flo = f(root.lo), fhi = f(root.hi);
        Rational spread = abs(flo - fhi), scale = std::min(abs(flo), abs(fhi));
        if (spread <= scale * Rational(1, 10000000000000000LL) || spread == 0)
            break;
        Rational mid = (root.lo + root.hi) / 2;
        int s = p(mid).sign();
        if (s == 0)
            return to_double(f(mid));
        if (s == s_lo)
            root.lo = mid;
        else
            root.hi = mid;
    }
    return to_double(f((root.lo + root.hi) / 2));
}

int sign_at_root(const PolyRat& f, const PolyRat& p, IsolatedRoot root)
{
    if (f.is_zero())
        return 0;
    if (root.is_exact())
        return f(root.lo).sign();

    PolyRat g = gcd(f, p);
    if (g.degree() > 0) {
        SturmSequence sg(g);
        if (g(root.lo) != 0 && sg.count_roots(root.lo, root.hi) > 0)
            return 0;
    }
    PolyRat sqf = divmod(f, gcd(f, f.derivative())).quotient;
    if (sqf.degree() <= 0)
        return f(root.lo).sign();
    SturmSequence sf(sqf);
    int s_lo = p(root.lo).sign();
    for (int iter = 0; iter < 4000; ++iter) {
        if (sqf(root.lo) != 0 && sf.count_roots(root.lo, root.hi) == 0)
            return f(root.hi).sign();
        Rational mid = (root.lo + root.hi) / 2;
        int s = p(mid).sign();
        if (s == 0)
            return f(mid).sign();
        if (s == s_lo)
            root.lo = mid;
        else
            root.hi = mid;
    }
    throw PolynomialDegenerate("sign_at_root did not separate the roots");
}

} // namespace tss
