#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "tsspec/propagation.hpp"
#include "tsspec/rational.hpp"
#include "tsspec/spectral.hpp"
#include "tsspec/timescale.hpp"

namespace tss {

/// Leading data of beta^{l_k-s}_{ij}(lambda) = a (lambda^{s-2+i} + b lambda^{s-3+i} + ...).
struct LemmaOneCoeffs {
    std::size_t k = 0, s = 0, i = 0, j = 0;
    Rational a;
    Rational b;
    /// Degree s - 2 + i of the entry.
    int degree() const { return static_cast<int>(s + i) - 2; }
};

/// Closed-form a and b for 1 <= k <= N + mu1, 1 <= s <= l_k - l_{k-1},
/// i <= 2 - [k == N + 1], j in {1, 2}.  Throws IndexOutOfRange.
LemmaOneCoeffs lemma1_coeffs(const TimeScale& ts, const Potential& q, std::size_t k, std::size_t s, std::size_t i,
                             std::size_t j);

/// delta_k^e with e = j [l_k == 1]:  delta_k^0 = [delta_k == 0] / 2,
/// delta_k^1 = 1/2 - delta_k^0.
double branch_shift(bool delta_k, int j, bool lk_is_first);

/// Number of eigenvalues of L_j outside the segment branches:
/// N + M + j (1 - mu0) sign(N - 1 + mu1) - mu1 - 1.
long bounded_part_size(const TimeScale& ts, int j);

/// Per-segment constants of the branch asymptotics.
struct BranchConstants {
    std::size_t k = 0;
    std::size_t l = 0;    ///< l_k
    double d = 0.0;       ///< d_k
    bool delta = false;   ///< delta_k = [l_k == N + M]
    double omega = 0.0;   ///< half the integral of q_k
    double c = 0.0;
    double z = 0.0;
    double gamma = 0.0;   ///< d_k + ... + d_N
    double a_tilde[4] = {0, 0, 0, 0};
    double a[2] = {0, 0}; ///< A_k0, A_k1
};

class StructuralConstants {
public:
    StructuralConstants(const TimeScale& ts, const Potential& q);

    const std::vector<BranchConstants>& branches() const { return branches_; }
    const BranchConstants& branch(std::size_t k) const { return branches_.at(k - 1); }

    /// f_kj(x): sin or cos of d_k x, chosen by delta_k.
    Complex f(std::size_t k, int j, Complex x) const;
    /// v_kj(rho), the leading shape of D_j at the start of segment k.
    Complex v(std::size_t k, int j, Complex rho) const;
    /// g_k(rho) = v_k0 + (-1)^{delta_k} v_k1 / (rho (a_{l_k} - b_{l_k - 1})); v_k0 when l_k = 1.
    Complex g(std::size_t k, Complex rho) const;
    /// eta_kj(rho): multiplicity of rho as a zero of f_{k+1,0} ... f_{N,0} f_kj,
    /// i.e. how many factors vanish there (d_l rho / pi within 1e-9 of the
    /// zero lattice).
    int eta(std::size_t k, int j, double rho) const;

private:
    const TimeScale& ts_;
    const Potential& q_;
    std::vector<BranchConstants> branches_;
};

struct Commensurability {
    Rational r;
    std::vector<Integer> x;
};

/// Largest r with d_k = r x_k, x_k integers.  Exact for rational input.
Commensurability commensurability_check(const std::vector<Rational>& d);
/// Floating input: ratios d_k / d_1 must be within `tolerance` (relative) of a
/// fraction with denominator <= max_denominator.  Throws NotCommensurable.
Commensurability commensurability_check(const std::vector<double>& d, double tolerance = 1e-9,
                                        long max_denominator = 1000);

enum class PredictionOrder { Main, Corrected };

enum class ResidualClass { LittleO1, BigO1n, LittleO1n, KappaN };

const char* to_string(ResidualClass c);

struct AsymptoticPrediction {
    std::size_t k = 0;
    int j = 0;
    std::size_t n = 0;
    bool delta_k = false;
    double shift = 0.0;       ///< delta_k^{j delta(1, l_k)}
    double main_term = 0.0;   ///< pi (n - shift) / d_k
    double correction = 0.0;  ///< z_k / (n - shift), zero for the main order
    ResidualClass residual = ResidualClass::LittleO1;
    bool distinctness_violated = false;

    double rho() const { return main_term + correction; }
    double lambda() const { return rho() * rho(); }
};

/// Throws IndexOutOfRange, or NotCommensurable for the corrected order.
AsymptoticPrediction predict_branch(const TimeScale& ts, const Potential& q, std::size_t k, int j, std::size_t n,
                                    PredictionOrder order);

struct WeightPrediction {
    std::size_t k = 0;
    std::size_t n = 0;
    /// 2 / d_1 for the first branch when min T is not isolated; absent otherwise
    /// (the weights then decay like kappa_n / n).
    std::optional<double> limit;
    ResidualClass residual = ResidualClass::KappaN;
    bool hypotheses_hold = true;
};

WeightPrediction predict_weights(const TimeScale& ts, const Potential& q, std::size_t k, std::size_t n);

struct LabelReport {
    std::vector<std::string> mismatches;
    /// Per branch: eigenvalues assigned, predictions below the window top.
    std::vector<std::pair<std::size_t, std::size_t>> counts;
    std::size_t bounded = 0;
};

/// Assigns every eigenvalue to Lambda_j or to a branch (k, n) by a monotone
/// minimum-cost matching against the merged branch predictions (corrected
/// when commensurable).  Skipped interior predictions are reported.
LabelReport label_branches(Spectrum& spectrum, const TimeScale& ts, const Potential& q);

struct ResidualRow {
    std::size_t k = 0;
    std::size_t n = 0;
    double computed = 0.0;  ///< rho = sqrt(lambda)
    double main = 0.0;
    double corrected = 0.0;
    double e = 0.0;         ///< |computed - main|
    double scaled = 0.0;    ///< n e
    double scaled_corrected = 0.0;
};

struct BranchResidualSummary {
    std::size_t k = 0;
    std::size_t count = 0;
    double bottom_max = 0.0;  ///< max n e_n over the lower half of the n-range
    double top_max = 0.0;     ///< same over the upper half
    bool bounded = false;     ///< top_max <= 1.5 bottom_max
    double scaled_max = 0.0;
    double corrected_max = 0.0;
    double improvement = 0.0; ///< scaled_max / corrected_max
};

struct WeightRow {
    std::size_t n = 0;
    double computed = 0.0;
    double limit = 0.0;
    double scaled = 0.0;    ///< n |alpha - limit|
};

struct AsymptoticsReport {
    int j = 1;
    bool commensurable = false;
    bool distinct = false;
    std::vector<ResidualRow> rows;
    std::vector<BranchResidualSummary> branches;
    std::vector<WeightRow> weights;
    double weight_bottom_max = 0.0, weight_top_max = 0.0;
    bool weights_bounded = false;
    std::vector<std::string> notes;
};

/// "Bounded" as used throughout: max over the upper half of the sequence is
/// at most 1.5 times the max over the lower half.
bool bounded_on_halves(const std::vector<double>& values, double* bottom = nullptr, double* top = nullptr);

/// Residuals of a labeled spectrum against the predictions for n in
/// [n_lo, n_hi].  When `weights` is given (j = 1) the first-branch weight law
/// is checked too.  Throws LabelMismatch for an unlabeled spectrum.
AsymptoticsReport verify_asymptotics(const Spectrum& spectrum, const TimeScale& ts, const Potential& q,
                                     std::size_t n_lo, std::size_t n_hi, const WeightNumbers* weights = nullptr);

/// Columns: branch, n, computed, main, corrected, e_n, n*e_n.
std::string residuals_csv(const AsymptoticsReport& report);

} // namespace tss
