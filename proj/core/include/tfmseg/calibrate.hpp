#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "tfmseg/segmentation.hpp"
#include "tfmseg/sim.hpp"

namespace tfmseg {

// Empirical quantile with the usual linear interpolation between order
// statistics (the same convention R's quantile uses by default).
double quantile_type7(std::vector<double> values, double prob);

// Runs fn(0..count-1), splitting the work across threads when asked.
// threads <= 0 means one worker per available hardware thread. Tasks must
// write only into their own slots; the first exception thrown is rethrown
// after all workers finish.
void parallel_replications(Index count, int threads, const std::function<void(Index)>& fn);

// Maximum of the detector statistic over every seeded interval and every
// interior split point, with no end-trimming; loadings are computed at the
// supplied ranks. This is the null statistic whose upper quantiles set the
// detection threshold.
double null_max_detector(const TensorSeries& series, const Dims& ranks);

struct PiCalibrationConfig {
    std::vector<Index> lengths = {400, 1200, 2000, 2800, 3200, 4000, 4800, 5600};
    std::vector<Dims> dims_grid = {{10, 10, 10}, {10, 10, 100}, {10, 20, 40}, {20, 20, 20}};
    std::vector<Dims> ranks_grid = {{2, 2, 2}, {2, 3, 2}, {2, 3, 3}, {3, 3, 3}};
    double rho = 0.7;
    Index reps = 100;
    double quantile = 0.9;
    std::uint64_t seed = 20260822;
    int threads = 0;
};

struct PiCalibrationCell {
    Index length = 0;
    Dims dims;
    Dims ranks;
    Index stacked = 0;
    double quantile_value = 0.0;
};

struct PiCalibrationResult {
    PiCoefficients coefficients;
    double r2 = 0.0;
    // Reported only when the fit leaves residual degrees of freedom
    // (more than five cells); NaN otherwise.
    double r2_adjusted = 0.0;
    std::vector<PiCalibrationCell> cells;
};

// Least-squares fit of cell quantiles on the threshold's regressors. Fewer
// cells than coefficients interpolate exactly; five or more cells with a
// rank-deficient design (e.g. a single distinct length) are rejected.
PiCalibrationResult fit_pi_regression(std::vector<PiCalibrationCell> cells);

// Simulates the null scenario over the grid, records per-cell upper quantiles
// of the maximal detector, and fits the threshold regression. One stream per
// (cell, replication) pair keeps runs reproducible under any thread count.
PiCalibrationResult calibrate_pi(const PiCalibrationConfig& cfg);

struct ZetaCalibrationConfig {
    std::vector<Scenario> scenarios = {Scenario::s1, Scenario::s2};
    std::vector<Index> lengths = {400, 800, 1600, 3200};
    std::vector<Dims> dims_grid = {{10, 10, 10}, {10, 10, 100}, {10, 20, 40}, {20, 20, 20}};
    double rho = 0.7;
    Spacing spacing = Spacing::equal;
    Index reps = 100;
    double quantile = 0.99;
    std::uint64_t seed = 20260823;
    int threads = 0;
};

struct ZetaCalibrationResult {
    double multiplier = 0.0;
    Index pooled_count = 0;
    std::vector<double> per_scenario;
};

// Pools the scaled covariance-shift norms of the modes that do NOT change
// identifiably, evaluated at the true change locations with true ranks, and
// returns their upper quantile: the attribution threshold multiplier that
// would keep the false flag rate at 1 - quantile under the grid.
ZetaCalibrationResult calibrate_zeta(const ZetaCalibrationConfig& cfg);

}  // namespace tfmseg
