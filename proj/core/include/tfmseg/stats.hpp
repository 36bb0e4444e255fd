#pragma once

#include "tfmseg/series.hpp"

namespace tfmseg {

// Total length of the stacked vech vectors: sum of r_k (r_k + 1) / 2.
Index stacked_dim(const std::vector<Index>& ranks);

// Second-moment summaries of a pseudo-factor series. Column t of `v` is
//   V_t = (vech(mat_1(G_t) mat_1(G_t)^T), ..., vech(mat_K(G_t) mat_K(G_t)^T)),
// and `prefix` carries running sums with a leading zero column, so the mean
// of V over an interval (a, b] is (prefix[b] - prefix[a]) / (b - a) in O(d).
// Averaging block k of V over (a, b] and unpacking gives the mode-k
// pseudo-factor covariance of the interval.
struct PseudoFactorStats {
    std::vector<Index> ranks;
    std::vector<Index> offsets;  // block k occupies [offsets[k], offsets[k+1])
    Matrix v;                    // d x T
    Matrix prefix;               // d x (T+1)

    Index dim() const { return v.rows(); }
    Index length() const { return v.cols(); }

    Vector interval_mean(Index a, Index b) const;

    // Mode-k pseudo-factor covariance over (a, b], unpacked to dense.
    Matrix interval_covariance(Index k, Index a, Index b) const;
};

PseudoFactorStats pseudo_factor_stats(const TensorSeries& g);

// CUSUM contrast of interval means around tau inside (a, b]:
//   sqrt((tau - a)(b - tau)/(b - a)) * (mean over (tau, b] - mean over (a, tau]).
Vector cusum(const PseudoFactorStats& stats, Index a, Index tau, Index b);

// Diagonal of the Bartlett long-run covariance of the centered summaries,
// with bandwidth floor(T^(1/4)):
//   W_ii = C_0(i) + 2 sum_{l=1}^w (1 - l/(w+1)) C_l(i),
// where C_l(i) = T^{-1} sum_{t=l+1}^T g_{t,i} g_{t-l,i} and g_t = V_t minus
// the full-sample mean. Entries are floored at max(diag) * 1e-10 (1e-300
// when the whole diagonal vanishes) so the detector can divide by them.
Vector weight_matrix(const PseudoFactorStats& stats);

// Bandwidth used by weight_matrix: the largest integer w with w^4 <= T.
Index bartlett_bandwidth(Index T);

}  // namespace tfmseg
