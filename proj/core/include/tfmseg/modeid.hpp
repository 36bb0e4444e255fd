#pragma once

#include "tfmseg/segmentation.hpp"

namespace tfmseg {

// Segment boundaries used around each estimate when contrasting the
// before/after covariances. `lower`/`upper` bracket the estimate; a fallback
// flag marks a side where no qualifying finer interval existed (or the
// adjusted boundary collided with a neighbouring estimate) and the estimate
// itself was used instead.
struct EndpointPair {
    Index lower = 0;
    Index upper = 0;
    bool lower_fallback = false;
    bool upper_fallback = false;
};

// Conservative endpoints from the finer single-level interval set: lower =
// max{a : (a,b] in finer, b <= location}, upper = min{b : (a,b] in finer,
// a > location}. With practical = true both collapse to the location, which
// is the default behaviour of the pipeline.
std::vector<EndpointPair> adjusted_endpoints(const std::vector<Index>& locations,
                                             const std::vector<Interval>& finer, Index T,
                                             bool practical);

// Attribution threshold: multiplier * (T^(-1/2) + p^(-1)), p the number of
// cells per observation.
double threshold_zeta(Index T, Index p, double multiplier = 3.5);

// Trace-normalized covariance contrast: next/tr(next) - prev/tr(prev).
// Fails with degenerate-segment when a trace is not positive.
Matrix xi_from_covariances(const Matrix& prev, const Matrix& next);

// Operator norm of a symmetric matrix (largest absolute eigenvalue).
double operator_norm_sym(const Matrix& sym);

struct XiResult {
    Matrix xi;
    double norm = 0.0;
};

// Mode-k contrast between the pseudo-factor covariances of two segments.
XiResult xi_statistic(const PseudoFactorStats& stats, Index k, Index prev_a, Index prev_b,
                      Index next_a, Index next_b);

struct ModeAttribution {
    Index location = 0;
    EndpointPair endpoints;
    std::vector<double> xi_norms;  // per mode, operator norms of the contrast
    std::vector<Index> modes;      // modes whose norm exceeds zeta, ascending
};

struct ModeIdConfig {
    double zeta_multiplier = 3.5;
    bool practical_endpoints = true;
};

struct ModeIdResult {
    double zeta = 0.0;
    double scale = 0.0;  // T^(-1/2) + p^(-1); norms divided by it are on the multiplier scale
    double zeta_multiplier = 0.0;
    bool practical_endpoints = true;
    std::vector<ModeAttribution> attributions;
};

// Attributes each detected change to the modes where the covariance
// contrast clears the threshold. An empty mode set declares the change
// identifiable in no mode (a pure rescaling-and-rotation change).
ModeIdResult identify_modes(const PseudoFactorStats& stats, const std::vector<Index>& locations,
                            const SeededIntervalSet& intervals, Index cells,
                            const ModeIdConfig& cfg);

// Orthogonal-projection distance between the column spaces of two,
// full-column-rank matrices with equal row counts; lies in [0, 1].
double loading_distance(const Matrix& a, const Matrix& b);

// Orthonormal basis of the column space at the standard numerical-rank
// tolerance. Turns a rank-deficient loading matrix into a full-rank
// representative that loading_distance accepts.
Matrix column_space_basis(const Matrix& m);

// Per-mode loading re-estimation that pools across segments. For mode k,
// consecutive segments separated only by changes not identifiable in mode k
// are merged into maximal runs. Within a run of two or more segments, the
// projected second-moment matrices of its segments are summed; segment j
// contributes through a projector whose mode-l parts are j's own two-step
// loadings (at j's estimated ranks) when mode l changes identifiably inside
// the run, and the run-wide first-step loadings (at the global rank) when it
// does not. sqrt(p_k) times the leading ranks[k] eigenvectors of the pooled
// matrix serve every segment of the run. A run consisting of a single
// segment falls back to that segment's own two-step estimate at its
// estimated ranks.
//
// `ranks` are the full-sample ranks, used for pooled eigenvector counts and
// run-wide first-step loadings; ranks of the per-segment estimates are
// re-estimated on each segment. Returns one LoadingSet per segment (q + 1 of
// them), with provenance mode_informed.
std::vector<LoadingSet> mode_informed_loadings(const TensorSeries& s,
                                               const std::vector<Index>& locations,
                                               const std::vector<std::vector<Index>>& mode_sets,
                                               const std::vector<Index>& ranks);

}  // namespace tfmseg
