#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <vector>

#include "tsspec/rational.hpp"

namespace tss {

/// Closed interval [a, b] of the scale; a == b is an isolated point.
struct Interval {
    Rational a;
    Rational b;
    bool is_point() const { return a == b; }
    friend bool operator==(const Interval&, const Interval&) = default;
};

/// A bounded time scale made of finitely many segments and isolated points,
///
///     T = [a_1, b_1] u ... u [a_K, b_K],   b_{l-1} < a_l <= b_l,   K = N + M.
///
/// All indices in this interface are 1-based and follow the interval
/// numbering: interval l = 1..K, gap l = 1..K-1 (between b_l and a_{l+1}),
/// segment k = 1..N living at interval segment_index(k).
///
/// Instances are immutable and only produced by validate_timescale(), so the
/// ordering and non-degeneracy invariants always hold.
class TimeScale {
public:
    std::size_t size() const { return intervals_.size(); }
    const std::vector<Interval>& intervals() const { return intervals_; }
    const Interval& interval(std::size_t l) const { return intervals_.at(l - 1); }
    double a(std::size_t l) const { return a_.at(l - 1); }
    double b(std::size_t l) const { return b_.at(l - 1); }

    std::size_t n_segments() const { return segment_indices_.size(); }
    std::size_t n_isolated() const { return size() - n_segments(); }
    const std::vector<std::size_t>& segment_indices() const { return segment_indices_; }
    std::size_t segment_index(std::size_t k) const { return segment_indices_.at(k - 1); }
    bool is_segment(std::size_t l) const { return !interval(l).is_point(); }
    /// k with segment_index(k) == l, or 0 when interval l is a point.
    std::size_t segment_number(std::size_t l) const;

    /// a_{l+1} - b_l for l = 1..K-1.
    const Rational& gap(std::size_t l) const { return gaps_.at(l - 1); }
    const std::vector<Rational>& gaps() const { return gaps_; }
    /// d_k = b_{l_k} - a_{l_k}.
    const Rational& segment_length(std::size_t k) const { return lengths_.at(k - 1); }
    const std::vector<Rational>& segment_lengths() const { return lengths_; }

    /// 1 when the first interval is a point.
    bool mu0() const { return interval(1).is_point(); }
    /// 1 when the last interval is a point.
    bool mu1() const { return interval(size()).is_point(); }
    /// Largest element of the index set S = {1..K-1-mu1}.
    std::size_t s_max() const { return size() - 1 - (mu1() ? 1 : 0); }
    bool in_s(std::size_t l) const { return l >= 1 && l <= s_max(); }

    double min() const { return a_.front(); }
    double max() const { return b_.back(); }

    friend TimeScale validate_timescale(std::vector<Interval> intervals);
    friend bool operator==(const TimeScale& x, const TimeScale& y) { return x.intervals_ == y.intervals_; }

private:
    TimeScale() = default;
    std::vector<Interval> intervals_;
    std::vector<double> a_, b_;
    std::vector<std::size_t> segment_indices_;
    std::vector<Rational> gaps_;
    std::vector<Rational> lengths_;
};

/// Checks ordering and non-degeneracy and fills in the derived data.
/// Throws ReversedInterval, OverlapError or DegenerateScale.
TimeScale validate_timescale(std::vector<Interval> intervals);

/// Potential on one segment, in the local coordinate x in [0, d].
class SegmentProfile {
public:
    enum class Kind { Constant, Polynomial, Samples };

    static SegmentProfile constant(Rational c);
    /// Ascending coefficients of a polynomial in x.
    static SegmentProfile polynomial(std::vector<Rational> coeffs);
    /// Values on a uniform grid over [0, d] joined linearly; needs >= 2 values.
    static SegmentProfile samples(std::vector<Rational> values);

    Kind kind() const { return kind_; }
    const std::vector<Rational>& data() const { return data_; }

    double value(double x, double d) const;
    double derivative(double x, double d) const;
    /// Exact value at a rational point of [0, d].
    Rational value_exact(const Rational& x, const Rational& d) const;
    /// Closed-form integral over [0, d].
    double integral(double d) const;
    /// Lower bound of the profile on [0, d] (exact for constants and samples).
    double minimum(double d) const;
    /// Interior points where the profile is not smooth.
    std::vector<double> kinks(double d) const;

private:
    SegmentProfile(Kind kind, std::vector<Rational> data);
    Kind kind_ = Kind::Constant;
    std::vector<Rational> data_;
    std::vector<double> values_;
};

/// q restricted to the core domain: exact values at the isolated points of
/// the core, plus one profile per segment.
struct Potential {
    /// Interval index l -> q(b_l) for isolated points.
    std::map<std::size_t, Rational> isolated;
    /// One profile per segment, k = 1..N.
    std::vector<SegmentProfile> segments;

    const SegmentProfile& segment(std::size_t k) const { return segments.at(k - 1); }
};

/// Checks that `q` fits `ts`: a value for exactly the isolated points of the
/// core domain and one profile per segment.  Throws InvalidPotential.
void validate_potential(const TimeScale& ts, const Potential& q);

/// q(b_l) as used by the jump across gap l: the isolated value, or the
/// segment profile at its right end.  Throws MissingPotentialValue.
Rational potential_at_right_end(const TimeScale& ts, const Potential& q, std::size_t l);

/// Lower bound of q over the core domain.
double potential_minimum(const TimeScale& ts, const Potential& q);

/// sigma(x): the next point of the scale to the right (x itself at max T or
/// inside a segment).  Throws NotInScale.
double jump_forward(const TimeScale& ts, double x);

/// sigma_-(x), the mirror of jump_forward.
double jump_backward(const TimeScale& ts, double x);

enum class PointKind { Dense, Isolated, LeftIsolatedRightDense, RightIsolatedLeftDense };

struct PointClass {
    PointKind kind;
    bool is_min;
    bool is_max;
};

/// Classifies x by comparing it with sigma(x) and sigma_-(x).  At min T and
/// max T the formal definitions (sigma_-(min) = min, sigma(max) = max) apply;
/// the flags mark those boundary variants.
PointClass classify_point(const TimeScale& ts, double x);

const char* to_string(PointKind kind);

/// The intervals of T^{0^n}: the truncation "drop max T if it is
/// left-isolated" applied n times.  n = 2 gives the domain of q.
std::vector<Interval> truncated_domain(const TimeScale& ts, int n);
inline std::vector<Interval> core_domain(const TimeScale& ts) { return truncated_domain(ts, 2); }

/// Gauss-Legendre panels on [lo, hi]; panels are doubled until two successive
/// estimates agree to 1e-13 relative (cap 4096 panels).
double segment_quadrature(const std::function<double(double)>& f, double lo, double hi);

/// Delta-integral between breakpoints a <= b:
///   sum over b_k in [a, b) of f(b_k) (a_{k+1} - b_k)  +  integrals over segments inside [a, b].
/// Throws EndpointNotBreakpoint when a or b is not one of the declared endpoints.
double delta_integral(const TimeScale& ts, const std::function<double(double)>& f, double a, double b);

} // namespace tss
