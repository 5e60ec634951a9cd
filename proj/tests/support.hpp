#pragma once

#include <random>
#include <utility>
#include <vector>

#include "tsspec/timescale.hpp"

namespace tss::testing {

inline TimeScale points(std::vector<Rational> xs)
{
    std::vector<Interval> iv;
    for (auto& x : xs)
        iv.push_back({x, x});
    return validate_timescale(iv);
}

inline Potential zero_potential(const TimeScale& ts)
{
    Potential q;
    for (std::size_t l = 1; l <= ts.size(); ++l)
        if (!ts.is_segment(l) && ts.in_s(l))
            q.isolated[l] = 0;
    for (std::size_t k = 1; k <= ts.n_segments(); ++k)
        q.segments.push_back(SegmentProfile::constant(0));
    return q;
}

/// Discrete scale with M points, gaps p/q in (0, 5], and q values with
/// |numerator|, denominator <= 20.
inline std::pair<TimeScale, Potential> random_discrete(std::mt19937& rng, int max_points = 8)
{
    std::uniform_int_distribution<int> count(3, max_points), num(-20, 20), den(1, 20), gnum(1, 20), gden(1, 4);
    const int m = count(rng);
    std::vector<Rational> xs;
    Rational x = 0;
    for (int i = 0; i < m; ++i) {
        xs.push_back(x);
        Rational g(gnum(rng), gden(rng));
        if (g > 5)
            g = 5;
        x += g;
    }
    TimeScale ts = points(xs);
    Potential q;
    for (int l = 1; l <= m - 2; ++l)
        q.isolated[l] = Rational(num(rng), den(rng));
    return {ts, q};
}

} // namespace tss::testing
