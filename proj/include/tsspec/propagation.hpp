#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

#include "tsspec/poly.hpp"
#include "tsspec/timescale.hpp"

namespace tss {

using Complex = std::complex<double>;

/// Row-major 2x2 complex matrix.
using Mat2 = std::array<Complex, 4>;

Mat2 mat_mul(const Mat2& x, const Mat2& y);
inline Complex det(const Mat2& m) { return m[0] * m[3] - m[1] * m[2]; }
inline Mat2 identity_mat2() { return {Complex(1), Complex(0), Complex(0), Complex(1)}; }

/// Jump across gap l, mapping (y(b_l), y^D(b_l)) to (y(a_{l+1}), y^D(a_{l+1})):
///
///     [ 1          g             ]
///     [ g(q - l)   1 + g^2 (q - l) ]       g = a_{l+1} - b_l,  q = q(b_l).
///
/// For l = K-1 outside S only the first row exists.
struct JumpMatrix {
    std::size_t index = 0;
    bool row_only = false;
    Rational gap;
    std::optional<Rational> potential;
    PolyRat a11, a12, a21, a22;

    Mat2 eval(Complex lambda) const;
};

/// Throws IndexOutOfRange or MissingPotentialValue.
JumpMatrix jump_matrix(const TimeScale& ts, const Potential& q, std::size_t l);

/// Product of consecutive jump matrices; one row when the leftmost factor
/// is a row-only jump.
struct BetaMatrix {
    std::vector<std::array<PolyRat, 2>> rows;

    std::size_t n_rows() const { return rows.size(); }
    /// 1-based entry beta_ij.
    const PolyRat& entry(std::size_t i, std::size_t j) const { return rows.at(i - 1).at(j - 1); }
};

/// l_k: interval index of segment k, with l_0 = 1 and l_{N+1} = N + M.
std::size_t l_index(const TimeScale& ts, std::size_t k);

/// beta^{l_k - s} = alpha^{l_k - 1} ... alpha^{l_k - s} for 1 <= k <= N + mu1,
/// 1 <= s <= l_k - l_{k-1}.  Throws IndexOutOfRange.
BetaMatrix beta_product(const TimeScale& ts, const Potential& q, std::size_t k, std::size_t s);

/// Transfer matrix of -y'' + q y = lambda y on the sub-interval [x0, x1] of a
/// segment of length d (local coordinates).  Closed form for constant
/// profiles, adaptive Dormand-Prince 5(4) otherwise.  Throws IntegratorFailure.
Mat2 segment_transfer(const SegmentProfile& profile, double d, Complex lambda, double x0, double x1);
inline Mat2 segment_transfer(const SegmentProfile& profile, double d, Complex lambda)
{
    return segment_transfer(profile, d, lambda, 0.0, d);
}

enum class Backend { Exact, Numeric };

/// Where a state sits: the left or right end of interval l.  Isolated points
/// have a single state, reported as Side::Left.
enum class Side { Left, Right };

template <class V>
struct SolutionState {
    std::size_t interval = 0;
    Side side = Side::Left;
    V y{};
    /// Absent at max T when it is left-isolated.
    std::optional<V> ydelta;
};

using ExactState = SolutionState<PolyRat>;
using NumericState = SolutionState<Complex>;

/// Exact propagation of (y, y^D)(a_1) = init through a purely discrete scale;
/// states are polynomials in lambda.  Throws BackendMismatch when N > 0.
std::vector<ExactState> propagate_exact(const TimeScale& ts, const Potential& q, const std::array<Rational, 2>& init,
                                        std::size_t start = 1);

/// Numeric propagation at a fixed lambda, starting at a_start.
std::vector<NumericState> propagate_numeric(const TimeScale& ts, const Potential& q, const std::array<Complex, 2>& init,
                                            Complex lambda, std::size_t start = 1);

/// Theta_0, Theta_1 (and D_j^m) as callable entire functions of lambda.
class EntireEval {
public:
    EntireEval(TimeScale ts, Potential q);

    struct Value {
        Complex theta0;
        Complex theta1;
        /// Rough absolute error bound of the evaluation.
        double error = 0.0;
    };

    Value operator()(Complex lambda) const;
    /// (D_0^m, D_1^m) for m = 1 .. K - mu1.
    std::vector<std::array<Complex, 2>> d_values(Complex lambda) const;

    /// Growth order in lambda: 1/2 with segments, 0 (polynomial) without.
    double growth_order() const { return ts_.n_segments() > 0 ? 0.5 : 0.0; }
    const TimeScale& scale() const { return ts_; }
    const Potential& potential() const { return q_; }

private:
    // suffix[m-1] maps (y, y^D)(a_m) to the terminal state
    std::vector<Mat2> suffix_products(Complex lambda, double* error) const;
    TimeScale ts_;
    Potential q_;
    std::vector<JumpMatrix> jumps_;
};

/// Continuous polar angle phi of (y, y^D) = r (sin phi, cos phi) at the
/// terminal point, for the S and C solutions at real lambda.  The angle is
/// lifted piece by piece (segment sub-steps and the two shears that make up
/// each jump turn the vector by less than pi), so it is continuous and
/// strictly increasing in lambda, and Theta_j(lambda) = 0 exactly when
/// phi_j(lambda) is a multiple of pi.
class PhaseEval {
public:
    PhaseEval(const TimeScale& ts, const Potential& q);
    /// {phi_0, phi_1}: angles of the S and C solutions.
    std::array<double, 2> operator()(double lambda) const;

private:
    const TimeScale& ts_;
    const Potential& q_;
    std::vector<JumpMatrix> jumps_;
    std::vector<double> segment_min_;
};

struct ExactPair {
    PolyRat theta0;
    PolyRat theta1;
};

/// Both characteristic functions.  `exact` is filled on purely discrete scales.
struct CharacteristicPair {
    std::optional<ExactPair> exact;
    EntireEval eval;
};

CharacteristicPair characteristic_pair(const TimeScale& ts, const Potential& q);

/// Exact (D_0^m, D_1^m) on a discrete scale, 1 <= m <= K - mu1.
/// Throws IndexOutOfRange or BackendMismatch.
ExactPair d_functions(const TimeScale& ts, const Potential& q, std::size_t m);

/// All exact D-functions, m = 1 .. K - mu1, from one backward sweep.
std::vector<ExactPair> all_d_functions(const TimeScale& ts, const Potential& q);

/// Evaluates a solution with (y, y^D)(a_1) = init anywhere on T at a fixed
/// lambda; the interval-start states are computed once.
class SolutionSampler {
public:
    SolutionSampler(const TimeScale& ts, const Potential& q, const std::array<Complex, 2>& init, Complex lambda);
    Complex operator()(double x) const;

private:
    const TimeScale& ts_;
    const Potential& q_;
    Complex lambda_;
    std::vector<std::array<Complex, 2>> starts_;
};

} // namespace tss
