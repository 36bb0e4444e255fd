#include "tfmseg/intervals.hpp"

#include <algorithm>
#include <cmath>

#include "tfmseg/errors.hpp"

namespace tfmseg {

double default_mu(Index T) {
    return std::log2(4.0 * std::log(static_cast<double>(T)));
}

Index default_trim(Index T) {
    return static_cast<Index>(std::ceil(0.25 * static_cast<double>(T) / std::log(static_cast<double>(T))));
}

std::vector<Interval> seeded_level(Index T, int level) {
    // m = T / 2^level is exactly representable, and the products below stay
    // within the 53-bit exact-integer range for any practical T, so floor
    // and ceil are exact.
    const double m = std::ldexp(static_cast<double>(T), -level);
    const Index count = (Index(1) << level) - 1;
    std::vector<Interval> out;
    out.reserve(static_cast<size_t>(count));
    for (Index i = 1; i <= count; ++i) {
        Index a = static_cast<Index>(std::floor(static_cast<double>(i - 1) * m));
        Index b = static_cast<Index>(std::ceil(static_cast<double>(i + 1) * m));
        a = std::max<Index>(a, 0);
        b = std::min<Index>(b, T);
        out.push_back({a, b, level});
    }
    return out;
}

SeededIntervalSet generate_seeded_intervals(Index T, double mu, Index trim) {
    if (T < 8) fail(ErrorCode::bad_argument, "seeded intervals need T >= 8");
    const int depth = static_cast<int>(std::floor(mu));
    if (depth < 1) fail(ErrorCode::bad_argument, "interval depth parameter below one level");
    if (trim < 0) fail(ErrorCode::bad_argument, "negative trim");

    SeededIntervalSet set;
    set.depth = depth;
    set.trim = trim;
    set.mu = mu;
    for (int h = 1; h <= depth; ++h) {
        auto level = seeded_level(T, h);
        set.intervals.insert(set.intervals.end(), level.begin(), level.end());
    }
    // Deduplicate identical (a, b] pairs, keeping the lowest level.
    std::stable_sort(set.intervals.begin(), set.intervals.end(),
                     [](const Interval& x, const Interval& y) {
                         if (x.a != y.a) return x.a < y.a;
                         if (x.b != y.b) return x.b < y.b;
                         return x.level < y.level;
                     });
    set.intervals.erase(std::unique(set.intervals.begin(), set.intervals.end(),
                                    [](const Interval& x, const Interval& y) {
                                        return x.a == y.a && x.b == y.b;
                                    }),
                        set.intervals.end());
    set.finer = seeded_level(T, depth + 1);
    return set;
}

SeededIntervalSet generate_seeded_intervals(Index T) {
    return generate_seeded_intervals(T, default_mu(T), default_trim(T));
}

}  // namespace tfmseg
