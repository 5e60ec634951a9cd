#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "tsspec/poly.hpp"
#include "tsspec/propagation.hpp"
#include "tsspec/timescale.hpp"

namespace tss {

/// Which part of the spectrum an eigenvalue belongs to: the finite part
/// Lambda_j, or the n-th root of segment branch k.
struct BranchLabel {
    bool bounded = true;
    std::size_t k = 0;
    std::size_t n = 0;
    friend bool operator==(const BranchLabel&, const BranchLabel&) = default;
};

/// Eigenvalues of L_j in ascending order.
///
/// On discrete scales the spectrum is known exactly: `defining` is a
/// square-free polynomial whose real roots are exactly `values`, and `roots`
/// holds an isolating interval for each (a point interval for rational
/// eigenvalues).  Numeric spectra leave both empty.
struct Spectrum {
    int j = 0;
    std::vector<double> values;
    std::vector<BranchLabel> labels;
    std::optional<PolyRat> defining;
    std::vector<IsolatedRoot> roots;
    /// False when the list was cut at lambda_max.
    bool complete = true;
    double lambda_max = 0.0;

    bool is_exact() const { return defining.has_value(); }
    std::size_t size() const { return values.size(); }
};

/// Residues of the Weyl function at the j = 1 eigenvalues, aligned with the
/// spectrum.  For discrete scales `residue` is the polynomial W (reduced
/// modulo Theta_1) with alpha_n = W(lambda_n1), which keeps the data exact
/// even when the eigenvalues are irrational.
struct WeightNumbers {
    std::vector<double> values;
    std::vector<BranchLabel> labels;
    std::optional<PolyRat> residue;
    /// Exact values where both eigenvalue and weight are rational.
    std::vector<std::optional<Rational>> exact;
};

struct SearchOptions {
    double lambda_max = 1000.0;
    /// Stop after this many eigenvalues (0: no limit).
    std::size_t n_max = 0;
    unsigned jobs = 1;
    double tolerance = 1e-12;
};

/// Lower end of the numeric search window: min q - 10.
double search_floor(const TimeScale& ts, const Potential& q);

/// Zeros of Theta_j.  Exact isolation for discrete scales; otherwise the
/// k-th zero is located as the crossing phi_j = k pi of the polar angle
/// (PhaseEval), scanned in t = sqrt(lambda - floor) and polished with
/// toms748, then checked against the interlacing of the two spectra.
/// Throws RootMissSuspected or PolynomialDegenerate.
Spectrum find_spectrum(const TimeScale& ts, const Potential& q, int j, const SearchOptions& opts = {});

/// Both spectra in one pass (shares the interlacing repair).
std::pair<Spectrum, Spectrum> find_spectra(const TimeScale& ts, const Potential& q, const SearchOptions& opts = {});

/// Same as find_spectrum but forcing the numeric root finder on any scale.
Spectrum find_spectrum_numeric(const TimeScale& ts, const Potential& q, int j, const SearchOptions& opts = {});

/// alpha_n = -Theta_0(lambda_n1) / Theta_1'(lambda_n1).  Throws NonSimpleZero.
WeightNumbers weight_numbers(const TimeScale& ts, const Potential& q, const Spectrum& spectrum1);

/// M(lambda) = -Theta_0 / Theta_1.  Throws PoleHit.
Complex weyl_eval(const TimeScale& ts, const Potential& q, Complex lambda, double tolerance = 1e-12);
Rational weyl_eval_exact(const TimeScale& ts, const Potential& q, const Rational& lambda);
/// M_m(lambda) = -D_0^m / D_1^m.
Complex weyl_eval_m(const TimeScale& ts, const Potential& q, std::size_t m, Complex lambda, double tolerance = 1e-12);

/// Leading coefficient of Theta_j on a discrete scale (a function of the gaps).
Rational theta_leading_coefficient(const TimeScale& ts, int j);

/// Monic polynomial whose roots are exactly the listed eigenvalues.  Uses the
/// exact representation when present (defining polynomial or point roots).
/// Otherwise `strict` throws NotExact, and the doubles are rationalized with
/// denominators up to 1e12.
PolyRat monic_from_roots(const Spectrum& spectrum, bool strict = false);

/// Theta_j = LC_j * prod (lambda - lambda_nj) on a discrete scale.
/// Throws WrongCount or NotSupported.
PolyRat hadamard_reconstruct(const Spectrum& spectrum, const TimeScale& ts, bool strict = false);

/// Weyl function as a callable, with the exact rational form when known.
class WeylFunction {
public:
    /// -Theta_0 / Theta_1 through the evaluator.
    static WeylFunction from_characteristic(EntireEval eval);
    /// num / den with exact polynomials.
    static WeylFunction from_ratio(PolyRat num, PolyRat den);
    /// constant + sum alpha_n / (lambda - lambda_n).
    static WeylFunction from_partial_fractions(double constant, std::vector<double> poles, std::vector<double> residues);

    Complex operator()(Complex lambda, double tolerance = 1e-12) const;
    /// Only for exact functions.  Throws PoleHit.
    Rational operator()(const Rational& lambda) const;

    bool is_exact() const { return num_.has_value(); }
    const PolyRat& numerator() const { return *num_; }
    const PolyRat& denominator() const { return *den_; }
    const std::vector<double>& poles() const { return poles_; }

private:
    WeylFunction() = default;
    std::optional<EntireEval> eval_;
    std::optional<PolyRat> num_, den_;
    double constant_ = 0.0;
    std::vector<double> poles_, residues_;
};

/// Constant term of the partial-fraction expansion of M.
Rational weyl_constant(const TimeScale& ts);

/// M from the j = 1 spectrum and weights.  Exact on discrete scales when the
/// data are exact; truncated sum otherwise.  Throws LengthMismatch.
WeylFunction weyl_from_spectral_data(const Spectrum& spectrum1, const WeightNumbers& weights, const TimeScale& ts,
                                     bool strict = false);

struct CheckReport {
    bool pass = true;
    /// Check-specific figure of merit (minimum gap, maximum deviation, ...).
    double measure = 0.0;
    std::vector<double> values;
    std::vector<std::string> violations;
};

/// No eigenvalue in both spectra.  Exact gcd test when both are exact.
CheckReport spectra_disjointness_check(const Spectrum& s0, const Spectrum& s1, double tolerance = 1e-9);

/// alpha_n * int_{a_1}^{t_r} C(sigma(t), lambda_n1)^2 Dt = 1.  Exact on
/// discrete scales; `values` holds the products.
CheckReport weight_norm_identity_check(const TimeScale& ts, const Potential& q, const Spectrum& spectrum1,
                                       const WeightNumbers& weights, double tolerance = 1e-8);

} // namespace tss
