#include "tfmseg/calibrate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

#include "tfmseg/errors.hpp"
#include "tfmseg/factor.hpp"
#include "tfmseg/intervals.hpp"
#include "tfmseg/modeid.hpp"
#include "tfmseg/stats.hpp"

namespace tfmseg {

double quantile_type7(std::vector<double> values, double prob) {
    if (values.empty()) fail(ErrorCode::bad_argument, "quantile of an empty sample");
    if (!(prob >= 0.0 && prob <= 1.0))
        fail(ErrorCode::bad_argument, "quantile probability must lie in [0, 1]");
    std::sort(values.begin(), values.end());
    const double h = prob * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    if (lo + 1 >= values.size()) return values.back();
    const double frac = h - static_cast<double>(lo);
    return values[lo] + frac * (values[lo + 1] - values[lo]);
}

void parallel_replications(Index count, int threads, const std::function<void(Index)>& fn) {
    if (count <= 0) return;
    int workers = threads;
    if (workers <= 0) {
        const unsigned hw = std::thread::hardware_concurrency();
        workers = hw == 0 ? 1 : static_cast<int>(hw);
    }
    workers = static_cast<int>(std::min<Index>(workers, count));
    if (workers <= 1) {
        for (Index i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<Index> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto work = [&] {
        for (;;) {
            const Index i = next.fetch_add(1);
            if (i >= count) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                next.store(count);
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

double null_max_detector(const TensorSeries& series, const Dims& ranks) {
    const LoadingSet loadings = estimate_loadings(series, ranks);
    const TensorSeries factors = estimate_pseudo_factors(series, loadings);
    const PseudoFactorStats stats = pseudo_factor_stats(factors);
    const Vector weight = weight_matrix(stats);
    const SeededIntervalSet intervals = generate_seeded_intervals(series.length());
    double best = 0.0;
    for (const Interval& iv : intervals.intervals) {
        for (Index tau = iv.a + 1; tau < iv.b; ++tau) {
            const double value = detector(cusum(stats, iv.a, tau, iv.b), weight);
            if (value > best) best = value;
        }
    }
    return best;
}

namespace {

struct DesignRow {
    double sqrt_d;
    double sqrt_log_t;
    double loglog_over;
    double inv_sqrt;
};

DesignRow design_row(Index length, Index stacked) {
    const double log_t = std::log(static_cast<double>(length));
    return {std::sqrt(static_cast<double>(stacked)), std::sqrt(log_t),
            std::log(log_t) / std::sqrt(log_t), 1.0 / std::sqrt(log_t)};
}

}  // namespace

PiCalibrationResult fit_pi_regression(std::vector<PiCalibrationCell> cells) {
    const auto n = static_cast<Index>(cells.size());
    if (n == 0) fail(ErrorCode::bad_argument, "threshold regression needs at least one cell");
    for (auto& cell : cells) {
        if (cell.length < 3) fail(ErrorCode::bad_argument, "cell lengths must be at least 3");
        if (cell.stacked <= 0)
            fail(ErrorCode::bad_argument, "cell stacked dimension must be positive");
    }

    Matrix design(n, 5);
    Vector response(n);
    for (Index i = 0; i < n; ++i) {
        const auto& cell = cells[static_cast<std::size_t>(i)];
        const DesignRow row = design_row(cell.length, cell.stacked);
        design(i, 0) = 1.0;
        design(i, 1) = row.sqrt_d;
        design(i, 2) = row.sqrt_log_t;
        design(i, 3) = row.loglog_over;
        design(i, 4) = row.inv_sqrt;
        response(i) = cell.quantile_value;
    }

    Eigen::ColPivHouseholderQR<Matrix> qr(design);
    if (n >= 5 && qr.rank() < 5)
        fail(ErrorCode::config_error,
             "calibration grid is degenerate: the threshold regressors are collinear");
    const Vector beta = qr.solve(response);

    PiCalibrationResult out;
    out.coefficients.intercept = beta(0);
    out.coefficients.sqrt_d = beta(1);
    out.coefficients.sqrt_log_t = beta(2);
    out.coefficients.loglog_t_over_sqrt_log_t = beta(3);
    out.coefficients.inv_sqrt_log_t = beta(4);

    const Vector fitted = design * beta;
    const double ss_res = (response - fitted).squaredNorm();
    const double mean = response.mean();
    const double ss_tot = (response.array() - mean).matrix().squaredNorm();
    out.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
    if (n > 5) {
        out.r2_adjusted =
            1.0 - (1.0 - out.r2) * static_cast<double>(n - 1) / static_cast<double>(n - 5);
    } else {
        out.r2_adjusted = std::numeric_limits<double>::quiet_NaN();
    }
    out.cells = std::move(cells);
    return out;
}

PiCalibrationResult calibrate_pi(const PiCalibrationConfig& cfg) {
    if (cfg.lengths.empty() || cfg.dims_grid.empty() || cfg.ranks_grid.empty())
        fail(ErrorCode::config_error, "calibration grid must be nonempty");
    if (cfg.reps < 1) fail(ErrorCode::config_error, "calibration needs at least one replication");

    std::vector<PiCalibrationCell> cells;
    for (Index length : cfg.lengths)
        for (const Dims& dims : cfg.dims_grid)
            for (const Dims& ranks : cfg.ranks_grid) {
                PiCalibrationCell cell;
                cell.length = length;
                cell.dims = dims;
                cell.ranks = ranks;
                cell.stacked = stacked_dim(ranks);
                cells.push_back(std::move(cell));
            }

    const auto n_cells = static_cast<Index>(cells.size());
    std::vector<std::vector<double>> maxima(static_cast<std::size_t>(n_cells));
    for (auto& m : maxima) m.resize(static_cast<std::size_t>(cfg.reps));

    const Index tasks = n_cells * cfg.reps;
    parallel_replications(tasks, cfg.threads, [&](Index task) {
        const Index cell_idx = task / cfg.reps;
        const Index rep = task % cfg.reps;
        const auto& cell = cells[static_cast<std::size_t>(cell_idx)];
        SimScenario sc;
        sc.scenario = Scenario::s0;
        sc.length = cell.length;
        sc.dims = cell.dims;
        sc.ranks = cell.ranks;
        sc.rho = cfg.rho;
        sc.seed = cfg.seed;
        sc.stream = static_cast<std::uint64_t>(task);
        const Realisation real = generate(sc);
        maxima[static_cast<std::size_t>(cell_idx)][static_cast<std::size_t>(rep)] =
            null_max_detector(real.series, cell.ranks);
    });

    for (Index i = 0; i < n_cells; ++i)
        cells[static_cast<std::size_t>(i)].quantile_value =
            quantile_type7(maxima[static_cast<std::size_t>(i)], cfg.quantile);

    return fit_pi_regression(std::move(cells));
}

ZetaCalibrationResult calibrate_zeta(const ZetaCalibrationConfig& cfg) {
    if (cfg.scenarios.empty() || cfg.lengths.empty() || cfg.dims_grid.empty())
        fail(ErrorCode::config_error, "calibration grid must be nonempty");
    if (cfg.reps < 1) fail(ErrorCode::config_error, "calibration needs at least one replication");
    for (Scenario s : cfg.scenarios)
        if (s == Scenario::s0)
            fail(ErrorCode::config_error, "the null scenario has no changes to attribute");

    struct Cell {
        Scenario scenario;
        Index length;
        Dims dims;
    };
    std::vector<Cell> cellList;
    for (Scenario s : cfg.scenarios)
        for (Index length : cfg.lengths)
            for (const Dims& dims : cfg.dims_grid) cellList.push_back({s, length, dims});

    const auto n_cells = static_cast<Index>(cellList.size());
    const Index tasks = n_cells * cfg.reps;
    std::vector<std::vector<double>> contributions(static_cast<std::size_t>(tasks));

    parallel_replications(tasks, cfg.threads, [&](Index task) {
        const Index cell_idx = task / cfg.reps;
        const Cell& cell = cellList[static_cast<std::size_t>(cell_idx)];
        SimScenario sc;
        sc.scenario = cell.scenario;
        sc.length = cell.length;
        sc.dims = cell.dims;
        sc.rho = cfg.rho;
        sc.spacing = cfg.spacing;
        sc.seed = cfg.seed;
        sc.stream = static_cast<std::uint64_t>(task);
        const Realisation real = generate(sc);

        const LoadingSet loadings = estimate_loadings(real.series, sc.ranks);
        const TensorSeries factors = estimate_pseudo_factors(real.series, loadings);
        const PseudoFactorStats stats = pseudo_factor_stats(factors);

        const Index T = real.series.length();
        const double scale =
            1.0 / std::sqrt(static_cast<double>(T)) + 1.0 / static_cast<double>(real.series.cell_count());

        std::vector<Index> bounds;
        bounds.push_back(0);
        bounds.insert(bounds.end(), real.truth.locations.begin(), real.truth.locations.end());
        bounds.push_back(T);

        auto& slot = contributions[static_cast<std::size_t>(task)];
        const auto K = static_cast<Index>(real.series.dims.size());
        for (std::size_t j = 0; j < real.truth.locations.size(); ++j) {
            const auto& truth_modes = real.truth.mode_sets[j];
            for (Index k = 0; k < K; ++k) {
                if (std::find(truth_modes.begin(), truth_modes.end(), k) != truth_modes.end())
                    continue;
                const XiResult xi = xi_statistic(stats, k, bounds[j], bounds[j + 1], bounds[j + 1],
                                                 bounds[j + 2]);
                slot.push_back(xi.norm / scale);
            }
        }
    });

    ZetaCalibrationResult out;
    std::vector<double> pooled;
    for (std::size_t s = 0; s < cfg.scenarios.size(); ++s) {
        std::vector<double> scenario_pool;
        const Index per_scenario_cells = n_cells / static_cast<Index>(cfg.scenarios.size());
        const Index first_task = static_cast<Index>(s) * per_scenario_cells * cfg.reps;
        const Index last_task = first_task + per_scenario_cells * cfg.reps;
        for (Index task = first_task; task < last_task; ++task) {
            const auto& slot = contributions[static_cast<std::size_t>(task)];
            scenario_pool.insert(scenario_pool.end(), slot.begin(), slot.end());
        }
        pooled.insert(pooled.end(), scenario_pool.begin(), scenario_pool.end());
        out.per_scenario.push_back(quantile_type7(std::move(scenario_pool), cfg.quantile));
    }
    out.pooled_count = static_cast<Index>(pooled.size());
    out.multiplier = quantile_type7(std::move(pooled), cfg.quantile);
    return out;
}

}  // namespace tfmseg
