#pragma once

#include <complex>
#include <initializer_list>
#include <string>
#include <utility>
#include <vector>

#include "tsspec/rational.hpp"

namespace tss {

/// Polynomial in the spectral parameter with exact rational coefficients,
/// stored in ascending degree.  The representation is always normalized:
/// no trailing zero coefficients, so the zero polynomial has no coefficients
/// and degree -1.
class PolyRat {
public:
    PolyRat() = default;
    PolyRat(std::initializer_list<Rational> coeffs);
    explicit PolyRat(std::vector<Rational> coeffs);
    static PolyRat constant(const Rational& c);
    /// c * lambda^k
    static PolyRat monomial(const Rational& c, int k);
    /// The polynomial lambda.
    static PolyRat identity();

    int degree() const { return static_cast<int>(coeffs_.size()) - 1; }
    bool is_zero() const { return coeffs_.empty(); }
    const std::vector<Rational>& coefficients() const { return coeffs_; }
    /// Coefficient of lambda^k, zero outside the stored range.
    Rational coeff(int k) const;
    Rational leading() const;

    Rational operator()(const Rational& x) const;
    double operator()(double x) const;
    std::complex<double> operator()(std::complex<double> x) const;

    PolyRat derivative() const;
    PolyRat monic() const;

    PolyRat& operator+=(const PolyRat& rhs);
    PolyRat& operator-=(const PolyRat& rhs);
    PolyRat& operator*=(const PolyRat& rhs);
    PolyRat& operator*=(const Rational& rhs);

    friend PolyRat operator+(PolyRat a, const PolyRat& b) { return a += b; }
    friend PolyRat operator-(PolyRat a, const PolyRat& b) { return a -= b; }
    friend PolyRat operator*(PolyRat a, const PolyRat& b) { return a *= b; }
    friend PolyRat operator*(PolyRat a, const Rational& b) { return a *= b; }
    friend PolyRat operator*(const Rational& a, PolyRat b) { return b *= a; }
    friend PolyRat operator-(PolyRat a);
    friend bool operator==(const PolyRat& a, const PolyRat& b) { return a.coeffs_ == b.coeffs_; }

    /// Human-readable form, e.g. "l^2 - 4*l + 3".
    std::string to_string(const char* var = "l") const;

private:
    void trim();
    std::vector<Rational> coeffs_;
};

struct DivMod {
    PolyRat quotient;
    PolyRat remainder;
};

/// Euclidean division; throws PolynomialDegenerate on a zero divisor.
DivMod divmod(const PolyRat& numerator, const PolyRat& divisor);
PolyRat operator%(const PolyRat& a, const PolyRat& m);

/// Monic greatest common divisor (zero if both are zero).
PolyRat gcd(const PolyRat& a, const PolyRat& b);

/// Inverse of `a` modulo `m`; throws PolynomialDegenerate if they share a factor.
PolyRat inverse_mod(const PolyRat& a, const PolyRat& m);

/// Number of sign changes in a sequence, zeros skipped.
int sign_variations(const std::vector<int>& signs);

/// Sturm chain of a square-free polynomial, with root counting on
/// half-open intervals (lo, hi].
class SturmSequence {
public:
    explicit SturmSequence(const PolyRat& p);
    int variations_at(const Rational& x) const;
    int count_roots(const Rational& lo, const Rational& hi) const;
    const std::vector<PolyRat>& chain() const { return chain_; }

private:
    std::vector<PolyRat> chain_;
};

/// Bound B such that every real root lies in (-B, B).
Rational cauchy_root_bound(const PolyRat& p);

/// A real root known through an isolating interval [lo, hi].  When lo == hi
/// the root is the rational value itself.
struct IsolatedRoot {
    Rational lo;
    Rational hi;
    double value;
    bool is_exact() const { return lo == hi; }
};

/// All real roots of a square-free polynomial in ascending order.  Each is
/// bracketed by an interval of width at most rel_width * max(1, |root|) and
/// checked for an exact rational value along the way.  Throws
/// PolynomialDegenerate when the polynomial is zero or not square-free.
std::vector<IsolatedRoot> isolate_real_roots(const PolyRat& p, const Rational& rel_width);

/// f at the root of p bracketed by `root`, to about 1e-16 relative: the bracket
/// is bisected until f varies by less than that across it.
double value_at_root(const PolyRat& f, const PolyRat& p, IsolatedRoot root);

/// Sign of `f` at the root of `p` isolated by `root`.  Refines the interval
/// until `f` has no root in it (or confirms f vanishes at the root).
int sign_at_root(const PolyRat& f, const PolyRat& p, IsolatedRoot root);

} // namespace tss
