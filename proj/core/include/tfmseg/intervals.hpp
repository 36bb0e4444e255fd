#pragma once

#include <vector>

#include "tfmseg/tensor.hpp"

namespace tfmseg {

struct Interval {
    Index a = 0;
    Index b = 0;  // (a, b]
    int level = 0;

    Index length() const { return b - a; }
    bool contains(Index t) const { return a < t && t <= b; }
};

// Dyadic seeded intervals. Level h in 1..depth places 2^h - 1 overlapping
// intervals of length about T/2^(h-1):
//   ( floor((i-1) m_h), ceil((i+1) m_h) ],  m_h = T / 2^h, i = 1..2^h - 1,
// deduplicated across levels keeping the lowest level. `finer` holds the
// single-level set one step below the deepest level, used for endpoint
// adjustment after detection. `trim` is the scan margin applied inside each
// interval.
struct SeededIntervalSet {
    std::vector<Interval> intervals;
    std::vector<Interval> finer;
    int depth = 0;
    Index trim = 0;
    double mu = 0.0;
};

// Default interval depth parameter: log2(4 ln T), floored when levels are
// enumerated.
double default_mu(Index T);

// Default scan margin: ceil(0.25 T / ln T).
Index default_trim(Index T);

std::vector<Interval> seeded_level(Index T, int level);

SeededIntervalSet generate_seeded_intervals(Index T, double mu, Index trim);
SeededIntervalSet generate_seeded_intervals(Index T);

}  // namespace tfmseg
