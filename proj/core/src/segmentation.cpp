#include "tfmseg/segmentation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace tfmseg {

double threshold_pi(Index T, const std::vector<Index>& ranks, const PiCoefficients& c) {
    if (T < 3) fail(ErrorCode::bad_argument, "threshold regression needs T >= 3");
    const double d = static_cast<double>(stacked_dim(ranks));
    const double lt = std::log(static_cast<double>(T));
    const double pi = c.intercept + c.sqrt_d * std::sqrt(d) + c.sqrt_log_t * std::sqrt(lt) +
                      c.loglog_t_over_sqrt_log_t * std::log(lt) / std::sqrt(lt) +
                      c.inv_sqrt_log_t / std::sqrt(lt);
    return std::max(pi, 0.0);
}

double detector(const Vector& m, const Vector& weight) {
    if (m.size() != weight.size())
        fail(ErrorCode::dimension_mismatch, "weight length does not match statistic length");
    return std::sqrt(m.cwiseAbs2().cwiseQuotient(weight).sum());
}

namespace {

struct Candidate {
    Interval interval;
    Index tau = 0;
    double value = 0.0;
};

}  // namespace

std::vector<ChangePointEstimate> detect_change_points(const PseudoFactorStats& stats,
                                                      const SeededIntervalSet& intervals,
                                                      const DetectorParams& params) {
    if (params.weight.size() != stats.dim())
        fail(ErrorCode::dimension_mismatch, "weight length does not match summary dimension");
    const Index trim = params.trim;

    std::vector<Candidate> candidates;
    for (const Interval& iv : intervals.intervals) {
        if (iv.length() <= 2 * trim) continue;
        Index best_tau = -1;
        double best = -1.0;
        for (Index tau = iv.a + trim + 1; tau < iv.b - trim; ++tau) {
            double val = detector(cusum(stats, iv.a, tau, iv.b), params.weight);
            if (val > best) {
                best = val;
                best_tau = tau;
            }
        }
        if (best_tau >= 0 && best > params.pi) candidates.push_back({iv, best_tau, best});
    }

    std::vector<ChangePointEstimate> out;
    std::vector<bool> dead(candidates.size(), false);
    for (;;) {
        Index pick = -1;
        for (size_t i = 0; i < candidates.size(); ++i) {
            if (dead[i]) continue;
            if (pick < 0) {
                pick = static_cast<Index>(i);
                continue;
            }
            const Candidate& c = candidates[i];
            const Candidate& p = candidates[static_cast<size_t>(pick)];
            if (c.interval.length() != p.interval.length()) {
                if (c.interval.length() < p.interval.length()) pick = static_cast<Index>(i);
            } else if (c.value != p.value) {
                if (c.value > p.value) pick = static_cast<Index>(i);
            } else if (c.interval.a < p.interval.a) {
                pick = static_cast<Index>(i);
            }
        }
        if (pick < 0) break;
        const Candidate& chosen = candidates[static_cast<size_t>(pick)];
        out.push_back({chosen.tau, chosen.value, chosen.interval});
        for (size_t i = 0; i < candidates.size(); ++i)
            if (!dead[i] && candidates[i].interval.contains(chosen.tau)) dead[i] = true;
    }

    std::sort(out.begin(), out.end(),
              [](const ChangePointEstimate& x, const ChangePointEstimate& y) {
                  return x.location < y.location;
              });
    return out;
}

DetectionState prepare_detection(const TensorSeries& s, const DetectConfig& cfg) {
    require_complete(s, "change point detection");
    const Index T = s.length();
    if (T < 8) fail(ErrorCode::bad_argument, "detection needs T >= 8");

    DetectionState st;
    if (cfg.ranks.empty()) {
        st.ranks = estimate_ranks(s);
        st.ranks_estimated = true;
    } else {
        st.ranks = cfg.ranks;
    }
    st.loadings = estimate_loadings(s, st.ranks);
    st.factors = estimate_pseudo_factors(s, st.loadings);
    st.stats = pseudo_factor_stats(st.factors);
    st.weight = weight_matrix(st.stats);
    st.bandwidth = bartlett_bandwidth(T);
    const double mu = cfg.mu > 0.0 ? cfg.mu : default_mu(T);
    const Index trim = cfg.trim >= 0 ? cfg.trim : default_trim(T);
    st.intervals = generate_seeded_intervals(T, mu, trim);
    st.pi = threshold_pi(T, st.ranks, cfg.pi_coefficients);
    return st;
}

ChangePointReport run_detection(const TensorSeries& s, const DetectionState& state,
                                const DetectConfig& cfg) {
    const auto started = std::chrono::steady_clock::now();

    DetectorParams params;
    params.pi = state.pi;
    params.weight = state.weight;
    params.trim = state.intervals.trim;

    ChangePointReport report;
    report.dims = s.dims;
    report.series_length = s.length();
    report.ranks = state.ranks;
    report.ranks_estimated = state.ranks_estimated;
    report.mu = state.intervals.mu;
    report.depth = state.intervals.depth;
    report.trim = state.intervals.trim;
    report.bandwidth = state.bandwidth;
    report.pi = state.pi;
    report.pi_coefficients = cfg.pi_coefficients;
    report.pi_source = cfg.pi_source;
    report.weight = state.weight;
    report.estimates = detect_change_points(state.stats, state.intervals, params);
    if (cfg.record_timing) {
        report.seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    }
    return report;
}

ChangePointReport detect(const TensorSeries& s, const DetectConfig& cfg) {
    DetectionState state = prepare_detection(s, cfg);
    return run_detection(s, state, cfg);
}

}  // namespace tfmseg
