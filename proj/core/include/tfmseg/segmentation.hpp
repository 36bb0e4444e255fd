#pragma once

#include <string>

#include "tfmseg/factor.hpp"
#include "tfmseg/intervals.hpp"
#include "tfmseg/stats.hpp"

namespace tfmseg {

// Regression coefficients mapping (T, d) to the detection threshold. The
// regressors, in order: 1, sqrt(d), sqrt(ln T), ln(ln T)/sqrt(ln T),
// 1/sqrt(ln T).
struct PiCoefficients {
    double intercept = 0.0;
    double sqrt_d = 0.0;
    double sqrt_log_t = 0.0;
    double loglog_t_over_sqrt_log_t = 0.0;
    double inv_sqrt_log_t = 0.0;
};

// Coefficients bundled with the library, fitted by `tfmseg calibrate
// --what pi` on the default null grid (see tools/); override via file when
// recalibrating.
PiCoefficients default_pi_coefficients();

// Threshold value: the regression evaluated at sqrt-dim d = stacked_dim
// (ranks) and sample size T, floored at zero.
double threshold_pi(Index T, const std::vector<Index>& ranks, const PiCoefficients& c);

// Weighted CUSUM aggregate sqrt(sum_i M_i^2 / W_ii).
double detector(const Vector& m, const Vector& weight);

struct DetectorParams {
    double pi = 0.0;
    Vector weight;
    Index trim = 0;
};

struct ChangePointEstimate {
    Index location = 0;          // maximizing split point
    double detector_value = 0.0;
    Interval source;             // interval the estimate was emitted from
};

// The narrowest-interval selection loop. Each interval longer than twice the
// trim is scanned over integer split points tau with a + trim < tau < b -
// trim; the maximizing tau (smallest on ties) and its detector value survive
// when the value exceeds pi. Surviving candidates are consumed shortest
// interval first (ties: larger detector value, then smaller left endpoint);
// each emitted estimate removes every candidate whose interval contains it.
// Returned estimates are sorted by location.
std::vector<ChangePointEstimate> detect_change_points(const PseudoFactorStats& stats,
                                                      const SeededIntervalSet& intervals,
                                                      const DetectorParams& params);

struct DetectConfig {
    std::vector<Index> ranks;  // empty: estimate via the eigenvalue-ratio rule
    PiCoefficients pi_coefficients = default_pi_coefficients();
    std::string pi_source = "built-in";
    double mu = 0.0;    // <= 0: default_mu(T)
    Index trim = -1;    // < 0: default_trim(T)
    double zeta_multiplier = 3.5;  // consumed by mode identification
    bool record_timing = false;    // when true, reports carry wall-clock seconds
};

// Everything the pipeline computes before and beside the change-point scan,
// kept so later stages (mode identification, re-estimation, reporting) can
// reuse it without recomputation.
struct DetectionState {
    std::vector<Index> ranks;
    bool ranks_estimated = false;
    LoadingSet loadings;
    TensorSeries factors;
    PseudoFactorStats stats;
    SeededIntervalSet intervals;
    Vector weight;
    Index bandwidth = 0;
    double pi = 0.0;
};

struct ChangePointReport {
    Dims dims;
    Index series_length = 0;
    std::vector<Index> ranks;
    bool ranks_estimated = false;
    double mu = 0.0;
    int depth = 0;
    Index trim = 0;
    Index bandwidth = 0;
    double pi = 0.0;
    PiCoefficients pi_coefficients;
    std::string pi_source;
    Vector weight;
    std::vector<ChangePointEstimate> estimates;
    double seconds = -1.0;  // negative: not recorded
};

DetectionState prepare_detection(const TensorSeries& s, const DetectConfig& cfg);
ChangePointReport run_detection(const TensorSeries& s, const DetectionState& state,
                                const DetectConfig& cfg);

// prepare_detection followed by run_detection.
ChangePointReport detect(const TensorSeries& s, const DetectConfig& cfg);

}  // namespace tfmseg
