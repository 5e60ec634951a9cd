#include "tsspec/timescale.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <boost/math/quadrature/gauss.hpp>

#include "tsspec/errors.hpp"

namespace tss {

namespace {

std::string index_text(std::size_t l) { return std::to_string(l); }

// 1-based index of the interval containing x, or 0.
std::size_t locate(const TimeScale& ts, double x)
{
    for (std::size_t l = 1; l <= ts.size(); ++l)
        if (x >= ts.a(l) && x <= ts.b(l))
            return l;
    return 0;
}

std::size_t locate_or_throw(const TimeScale& ts, double x)
{
    std::size_t l = locate(ts, x);
    if (l == 0)
        throw NotInScale("point " + std::to_string(x) + " is not in the time scale");
    return l;
}

} // namespace

TimeScale validate_timescale(std::vector<Interval> intervals)
{
    if (intervals.empty())
        throw DegenerateScale("time scale needs at least one interval");
    TimeScale ts;
    for (std::size_t i = 0; i < intervals.size(); ++i) {
        const auto& iv = intervals[i];
        if (iv.a > iv.b)
            throw ReversedInterval("interval " + index_text(i + 1) + " has a > b");
        if (i > 0 && intervals[i - 1].b >= iv.a)
            throw OverlapError("interval " + index_text(i + 1) + " starts at or before the end of interval " +
                               index_text(i));
    }
    ts.intervals_ = std::move(intervals);
    for (std::size_t l = 1; l <= ts.intervals_.size(); ++l) {
        const auto& iv = ts.intervals_[l - 1];
        ts.a_.push_back(to_double(iv.a));
        ts.b_.push_back(to_double(iv.b));
        if (!iv.is_point()) {
            ts.segment_indices_.push_back(l);
            ts.lengths_.push_back(iv.b - iv.a);
        }
        if (l < ts.intervals_.size())
            ts.gaps_.push_back(ts.intervals_[l].a - iv.b);
    }
    if (ts.n_segments() == 0 && ts.n_isolated() < 3)
        throw DegenerateScale("a purely discrete scale needs at least 3 points (N > 0 or M >= 3)");
    return ts;
}

std::size_t TimeScale::segment_number(std::size_t l) const
{
    auto it = std::find(segment_indices_.begin(), segment_indices_.end(), l);
    return it == segment_indices_.end() ? 0 : static_cast<std::size_t>(it - segment_indices_.begin()) + 1;
}

// ---------------------------------------------------------------------------
// segment profiles

SegmentProfile::SegmentProfile(Kind kind, std::vector<Rational> data) : kind_(kind), data_(std::move(data))
{
    values_.reserve(data_.size());
    for (const auto& r : data_)
        values_.push_back(to_double(r));
}

SegmentProfile SegmentProfile::constant(Rational c) { return SegmentProfile(Kind::Constant, {std::move(c)}); }

SegmentProfile SegmentProfile::polynomial(std::vector<Rational> coeffs)
{
    if (coeffs.empty())
        coeffs.push_back(Rational(0));
    return SegmentProfile(Kind::Polynomial, std::move(coeffs));
}

SegmentProfile SegmentProfile::samples(std::vector<Rational> values)
{
    if (values.size() < 2)
        throw InvalidPotential("sampled segment profile needs at least two values");
    return SegmentProfile(Kind::Samples, std::move(values));
}

double SegmentProfile::value(double x, double d) const
{
    switch (kind_) {
    case Kind::Constant:
        return values_[0];
    case Kind::Polynomial: {
        double acc = 0.0;
        for (auto it = values_.rbegin(); it != values_.rend(); ++it)
            acc = acc * x + *it;
        return acc;
    }
    case Kind::Samples: {
        const double h = d / static_cast<double>(values_.size() - 1);
        double pos = std::clamp(x / h, 0.0, static_cast<double>(values_.size() - 1));
        auto i = std::min(static_cast<std::size_t>(pos), values_.size() - 2);
        double t = pos - static_cast<double>(i);
        return values_[i] * (1.0 - t) + values_[i + 1] * t;
    }
    }
    return 0.0;
}

double SegmentProfile::derivative(double x, double d) const
{
    switch (kind_) {
    case Kind::Constant:
        return 0.0;
    case Kind::Polynomial: {
        double acc = 0.0;
        for (std::size_t k = values_.size(); k-- > 1;)
            acc = acc * x + static_cast<double>(k) * values_[k];
        return acc;
    }
    case Kind::Samples: {
        const double h = d / static_cast<double>(values_.size() - 1);
        double pos = std::clamp(x / h, 0.0, static_cast<double>(values_.size() - 1));
        auto i = std::min(static_cast<std::size_t>(pos), values_.size() - 2);
        return (values_[i + 1] - values_[i]) / h;
    }
    }
    return 0.0;
}

Rational SegmentProfile::value_exact(const Rational& x, const Rational& d) const
{
    switch (kind_) {
    case Kind::Constant:
        return data_[0];
    case Kind::Polynomial: {
        Rational acc = 0;
        for (auto it = data_.rbegin(); it != data_.rend(); ++it)
            acc = acc * x + *it;
        return acc;
    }
    case Kind::Samples: {
        const auto cells = static_cast<long>(data_.size() - 1);
        Rational pos = x * cells / d;
        if (pos <= 0)
            return data_.front();
        if (pos >= cells)
            return data_.back();
        Integer fl = boost::multiprecision::numerator(pos) / boost::multiprecision::denominator(pos);
        auto i = fl.convert_to<std::size_t>();
        Rational t = pos - Rational(fl);
        return data_[i] * (1 - t) + data_[i + 1] * t;
    }
    }
    return Rational(0);
}

double SegmentProfile::integral(double d) const
{
    switch (kind_) {
    case Kind::Constant:
        return values_[0] * d;
    case Kind::Polynomial: {
        double acc = 0.0;
        for (std::size_t k = values_.size(); k-- > 0;)
            acc = acc * d + values_[k] / static_cast<double>(k + 1);
        return acc * d;
    }
    case Kind::Samples: {
        const double h = d / static_cast<double>(values_.size() - 1);
        double acc = 0.0;
        for (std::size_t i = 0; i + 1 < values_.size(); ++i)
            acc += 0.5 * (values_[i] + values_[i + 1]) * h;
        return acc;
    }
    }
    return 0.0;
}

double SegmentProfile::minimum(double d) const
{
    switch (kind_) {
    case Kind::Constant:
        return values_[0];
    case Kind::Samples:
        return *std::min_element(values_.begin(), values_.end());
    case Kind::Polynomial: {
        // dense sampling plus a Lipschitz margin from the derivative bound
        constexpr int n = 512;
        double lo = std::numeric_limits<double>::infinity();
        double slope = 0.0;
        for (int i = 0; i <= n; ++i) {
            double x = d * i / n;
            lo = std::min(lo, value(x, d));
            slope = std::max(slope, std::abs(derivative(x, d)));
        }
        return lo - slope * d / n;
    }
    }
    return 0.0;
}

std::vector<double> SegmentProfile::kinks(double d) const
{
    std::vector<double> out;
    if (kind_ == Kind::Samples) {
        const double h = d / static_cast<double>(values_.size() - 1);
        for (std::size_t i = 1; i + 1 < values_.size(); ++i)
            out.push_back(h * static_cast<double>(i));
    }
    return out;
}

// ---------------------------------------------------------------------------
// potentials

void validate_potential(const TimeScale& ts, const Potential& q)
{
    if (q.segments.size() != ts.n_segments())
        throw InvalidPotential("expected " + std::to_string(ts.n_segments()) + " segment profiles, got " +
                               std::to_string(q.segments.size()));
    for (std::size_t l = 1; l <= ts.size(); ++l) {
        bool needed = !ts.is_segment(l) && ts.in_s(l);
        bool present = q.isolated.count(l) > 0;
        if (needed && !present)
            throw InvalidPotential("missing potential value at isolated point " + std::to_string(l));
        if (!needed && present)
            throw InvalidPotential("potential value given at interval " + std::to_string(l) +
                                   ", which is not an isolated point of the core domain");
    }
    for (const auto& [l, v] : q.isolated)
        if (l < 1 || l > ts.size())
            throw InvalidPotential("potential index " + std::to_string(l) + " out of range");
}

Rational potential_at_right_end(const TimeScale& ts, const Potential& q, std::size_t l)
{
    if (l < 1 || l > ts.size())
        throw IndexOutOfRange("interval index " + std::to_string(l) + " out of range");
    if (std::size_t k = ts.segment_number(l); k != 0) {
        if (k > q.segments.size())
            throw MissingPotentialValue("no profile for segment " + std::to_string(k));
        return q.segment(k).value_exact(ts.segment_length(k), ts.segment_length(k));
    }
    auto it = q.isolated.find(l);
    if (it == q.isolated.end())
        throw MissingPotentialValue("no potential value at b_" + std::to_string(l));
    return it->second;
}

double potential_minimum(const TimeScale& ts, const Potential& q)
{
    double lo = std::numeric_limits<double>::infinity();
    for (const auto& [l, v] : q.isolated)
        lo = std::min(lo, to_double(v));
    for (std::size_t k = 1; k <= ts.n_segments() && k <= q.segments.size(); ++k)
        lo = std::min(lo, q.segment(k).minimum(to_double(ts.segment_length(k))));
    return std::isfinite(lo) ? lo : 0.0;
}

// ---------------------------------------------------------------------------
// jump functions

double jump_forward(const TimeScale& ts, double x)
{
    std::size_t l = locate_or_throw(ts, x);
    if (x < ts.b(l) || l == ts.size())
        return x;
    return ts.a(l + 1);
}

double jump_backward(const TimeScale& ts, double x)
{
    std::size_t l = locate_or_throw(ts, x);
    if (x > ts.a(l) || l == 1)
        return x;
    return ts.b(l - 1);
}

PointClass classify_point(const TimeScale& ts, double x)
{
    double fwd = jump_forward(ts, x);
    double bwd = jump_backward(ts, x);
    bool right_dense = fwd == x;
    bool left_dense = bwd == x;
    PointKind kind;
    if (left_dense && right_dense)
        kind = PointKind::Dense;
    else if (!left_dense && !right_dense)
        kind = PointKind::Isolated;
    else if (right_dense)
        kind = PointKind::LeftIsolatedRightDense;
    else
        kind = PointKind::RightIsolatedLeftDense;
    return {kind, x == ts.min(), x == ts.max()};
}

const char* to_string(PointKind kind)
{
    switch (kind) {
    case PointKind::Dense:
        return "dense";
    case PointKind::Isolated:
        return "isolated";
    case PointKind::LeftIsolatedRightDense:
        return "left-isolated-right-dense";
    case PointKind::RightIsolatedLeftDense:
        return "right-isolated-left-dense";
    }
    return "?";
}

std::vector<Interval> truncated_domain(const TimeScale& ts, int n)
{
    std::vector<Interval> out = ts.intervals();
    for (int i = 0; i < n && out.size() > 1; ++i) {
        // max T is left-isolated exactly when the last interval is a point
        if (out.back().is_point())
            out.pop_back();
    }
    return out;
}

// ---------------------------------------------------------------------------
// integration

double segment_quadrature(const std::function<double(double)>& f, double lo, double hi)
{
    using Rule = boost::math::quadrature::gauss<double, 10>;
    if (hi <= lo)
        return 0.0;
    auto panels = [&](int count) {
        double h = (hi - lo) / count;
        double acc = 0.0;
        for (int i = 0; i < count; ++i)
            acc += Rule::integrate(f, lo + i * h, lo + (i + 1) * h);
        return acc;
    };
    double previous = panels(1);
    for (int count = 2; count <= 4096; count *= 2) {
        double current = panels(count);
        if (std::abs(current - previous) <= 1e-13 * std::max(1.0, std::abs(current)))
            return current;
        previous = current;
    }
    return previous;
}

double delta_integral(const TimeScale& ts, const std::function<double(double)>& f, double a, double b)
{
    auto is_breakpoint = [&](double x) {
        for (std::size_t l = 1; l <= ts.size(); ++l)
            if (x == ts.a(l) || x == ts.b(l))
                return true;
        return false;
    };
    if (!is_breakpoint(a))
        throw EndpointNotBreakpoint("lower limit " + std::to_string(a) + " is not an interval endpoint");
    if (!is_breakpoint(b))
        throw EndpointNotBreakpoint("upper limit " + std::to_string(b) + " is not an interval endpoint");
    if (a > b)
        throw EndpointNotBreakpoint("delta_integral requires a <= b");

    double total = 0.0;
    for (std::size_t l = 1; l <= ts.size(); ++l) {
        if (l < ts.size() && ts.b(l) >= a && ts.b(l) < b)
            total += f(ts.b(l)) * to_double(ts.gap(l));
        if (ts.is_segment(l) && ts.a(l) >= a && ts.b(l) <= b)
            total += segment_quadrature(f, ts.a(l), ts.b(l));
    }
    return total;
}

} // namespace tss
