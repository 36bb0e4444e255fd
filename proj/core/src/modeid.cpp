#include "tfmseg/modeid.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

namespace tfmseg {

std::vector<EndpointPair> adjusted_endpoints(const std::vector<Index>& locations,
                                             const std::vector<Interval>& finer, Index T,
                                             bool practical) {
    const size_t q = locations.size();
    for (size_t j = 0; j < q; ++j) {
        if (locations[j] <= 0 || locations[j] >= T)
            fail(ErrorCode::bad_argument, "change point location outside (0, T)");
        if (j > 0 && locations[j] <= locations[j - 1])
            fail(ErrorCode::bad_argument, "change point locations must increase");
    }

    std::vector<EndpointPair> pairs(q);
    for (size_t j = 0; j < q; ++j) {
        const Index loc = locations[j];
        if (practical) {
            pairs[j] = {loc, loc, false, false};
            continue;
        }
        Index lo = -1, hi = -1;
        for (const Interval& iv : finer) {
            if (iv.b <= loc) lo = std::max(lo, iv.a);
            if (iv.a > loc) hi = (hi < 0) ? iv.b : std::min(hi, iv.b);
        }
        pairs[j].lower = lo >= 0 ? lo : loc;
        pairs[j].lower_fallback = lo < 0;
        pairs[j].upper = hi >= 0 ? hi : loc;
        pairs[j].upper_fallback = hi < 0;
    }

    // The bracketed boundaries must leave a nonempty stretch between
    // consecutive estimates (and the series ends); where they collide, the
    // affected side degrades to the estimate itself.
    for (size_t j = 0; j < q; ++j) {
        const Index prev_plus = j == 0 ? 0 : pairs[j - 1].upper;
        if (pairs[j].lower <= prev_plus) {
            pairs[j].lower = locations[j];
            pairs[j].lower_fallback = true;
            if (j > 0 && pairs[j].lower <= pairs[j - 1].upper) {
                pairs[j - 1].upper = locations[j - 1];
                pairs[j - 1].upper_fallback = true;
            }
        }
    }
    if (q > 0 && pairs[q - 1].upper >= T) {
        pairs[q - 1].upper = locations[q - 1];
        pairs[q - 1].upper_fallback = true;
    }
    return pairs;
}

double threshold_zeta(Index T, Index p, double multiplier) {
    if (T <= 0 || p <= 0) fail(ErrorCode::bad_argument, "zeta needs positive T and p");
    return multiplier * (1.0 / std::sqrt(static_cast<double>(T)) + 1.0 / static_cast<double>(p));
}

Matrix xi_from_covariances(const Matrix& prev, const Matrix& next) {
    if (prev.rows() != prev.cols() || next.rows() != next.cols() || prev.rows() != next.rows())
        fail(ErrorCode::dimension_mismatch, "covariance shapes differ");
    const double tp = prev.trace();
    const double tn = next.trace();
    if (!(tp > 0.0) || !(tn > 0.0))
        fail(ErrorCode::degenerate_segment, "segment covariance has nonpositive trace");
    return next / tn - prev / tp;
}

double operator_norm_sym(const Matrix& sym) {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(sym, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success)
        fail(ErrorCode::degenerate_segment, "eigendecomposition failed to converge");
    const auto& ev = solver.eigenvalues();
    return std::max(std::abs(ev[0]), std::abs(ev[ev.size() - 1]));
}

XiResult xi_statistic(const PseudoFactorStats& stats, Index k, Index prev_a, Index prev_b,
                      Index next_a, Index next_b) {
    Matrix prev = stats.interval_covariance(k, prev_a, prev_b);
    Matrix next = stats.interval_covariance(k, next_a, next_b);
    XiResult out;
    out.xi = xi_from_covariances(prev, next);
    out.norm = operator_norm_sym(out.xi);
    return out;
}

ModeIdResult identify_modes(const PseudoFactorStats& stats, const std::vector<Index>& locations,
                            const SeededIntervalSet& intervals, Index cells,
                            const ModeIdConfig& cfg) {
    const Index T = stats.length();
    const Index K = static_cast<Index>(stats.ranks.size());
    const size_t q = locations.size();

    ModeIdResult result;
    result.scale = 1.0 / std::sqrt(static_cast<double>(T)) + 1.0 / static_cast<double>(cells);
    result.zeta_multiplier = cfg.zeta_multiplier;
    result.zeta = threshold_zeta(T, cells, cfg.zeta_multiplier);
    result.practical_endpoints = cfg.practical_endpoints;
    if (q == 0) return result;

    std::vector<EndpointPair> pairs =
        adjusted_endpoints(locations, intervals.finer, T, cfg.practical_endpoints);

    result.attributions.resize(q);
    for (size_t j = 0; j < q; ++j) {
        const Index prev_a = j == 0 ? 0 : pairs[j - 1].upper;
        const Index prev_b = pairs[j].lower;
        const Index next_a = pairs[j].upper;
        const Index next_b = j + 1 < q ? pairs[j + 1].lower : T;

        ModeAttribution& at = result.attributions[j];
        at.location = locations[j];
        at.endpoints = pairs[j];
        at.xi_norms.resize(static_cast<size_t>(K));
        for (Index k = 0; k < K; ++k) {
            XiResult xi = xi_statistic(stats, k, prev_a, prev_b, next_a, next_b);
            at.xi_norms[static_cast<size_t>(k)] = xi.norm;
            if (xi.norm > result.zeta) at.modes.push_back(k);
        }
    }
    return result;
}

double loading_distance(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows()) fail(ErrorCode::dimension_mismatch, "row counts differ");
    if (a.cols() < 1 || b.cols() < 1 || a.cols() > a.rows() || b.cols() > b.rows())
        fail(ErrorCode::bad_argument, "column counts must lie in [1, rows]");
    auto orthonormal = [](const Matrix& m) {
        Eigen::ColPivHouseholderQR<Matrix> qr(m);
        if (qr.rank() < m.cols())
            fail(ErrorCode::bad_argument, "rank-deficient matrix has no unique column space");
        Matrix q = qr.householderQ() * Matrix::Identity(m.rows(), m.cols());
        // Undo the column pivoting's effect on order; spans are unaffected,
        // so the thin Q columns already span col(m).
        return q;
    };
    Matrix qa = orthonormal(a);
    Matrix qb = orthonormal(b);
    if (qa.cols() != qb.cols()) return 1.0;
    // The operator norm of the projector difference is the sine of the
    // largest principal angle.
    Eigen::JacobiSVD<Matrix> svd(qa.transpose() * qb);
    const double c = svd.singularValues().minCoeff();
    const double clamped = std::min(std::max(c, 0.0), 1.0);
    return std::sqrt(1.0 - clamped * clamped);
}

Matrix column_space_basis(const Matrix& m) {
    if (m.rows() < 1 || m.cols() < 1) fail(ErrorCode::bad_argument, "matrix must be nonempty");
    Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU);
    const Vector& sv = svd.singularValues();
    const double tol = static_cast<double>(std::max(m.rows(), m.cols())) *
                       std::numeric_limits<double>::epsilon() * sv(0);
    Index rank = 0;
    for (Index i = 0; i < sv.size(); ++i)
        if (sv(i) > tol) ++rank;
    if (rank < 1) fail(ErrorCode::bad_argument, "zero matrix has no column space");
    return svd.matrixU().leftCols(rank);
}

namespace {

struct SegmentCache {
    const TensorSeries* series = nullptr;
    std::vector<Index> bounds;  // q + 2 boundaries
    std::vector<std::optional<LoadingSet>> two_step;

    Index count() const { return static_cast<Index>(bounds.size()) - 1; }
    Index begin(Index j) const { return bounds[static_cast<size_t>(j)]; }
    Index end(Index j) const { return bounds[static_cast<size_t>(j) + 1]; }

    const LoadingSet& segment_estimate(Index j) {
        auto& slot = two_step[static_cast<size_t>(j)];
        if (!slot) {
            if (end(j) - begin(j) < 2)
                fail(ErrorCode::segment_too_short,
                     "segment has fewer than 2 observations");
            TensorSeries seg = slice(*series, begin(j), end(j));
            std::vector<Index> seg_ranks = estimate_ranks(seg);
            LoadingSet est = estimate_loadings(seg, seg_ranks);
            est.provenance = LoadingProvenance::segment;
            est.segment = j;
            slot = std::move(est);
        }
        return *slot;
    }
};

}  // namespace

std::vector<LoadingSet> mode_informed_loadings(const TensorSeries& s,
                                               const std::vector<Index>& locations,
                                               const std::vector<std::vector<Index>>& mode_sets,
                                               const std::vector<Index>& ranks) {
    require_complete(s, "mode-informed loading estimation");
    const Index K = static_cast<Index>(s.dims.size());
    const Index T = s.length();
    if (mode_sets.size() != locations.size())
        fail(ErrorCode::bad_argument, "one mode set per change point required");
    if (static_cast<Index>(ranks.size()) != K)
        fail(ErrorCode::dimension_mismatch, "one rank per mode required");

    if (locations.empty()) {
        // No changes: every mode pools over the whole sample, which is the
        // plain two-step estimate.
        LoadingSet global = estimate_loadings(s, ranks);
        global.provenance = LoadingProvenance::mode_informed;
        global.segment = 0;
        return {std::move(global)};
    }

    SegmentCache cache;
    cache.series = &s;
    cache.bounds.push_back(0);
    for (size_t j = 0; j < locations.size(); ++j) {
        if (locations[j] <= cache.bounds.back() || locations[j] >= T)
            fail(ErrorCode::bad_argument, "change point locations must increase inside (0, T)");
        cache.bounds.push_back(locations[j]);
    }
    cache.bounds.push_back(T);
    const Index nseg = cache.count();
    cache.two_step.resize(static_cast<size_t>(nseg));
    for (Index j = 0; j < nseg; ++j)
        if (cache.end(j) - cache.begin(j) < 2)
            fail(ErrorCode::segment_too_short, "segment has fewer than 2 observations");

    auto gap_breaks_mode = [&](Index gap, Index k) {
        const auto& set = mode_sets[static_cast<size_t>(gap)];
        return std::find(set.begin(), set.end(), k) != set.end();
    };

    std::vector<LoadingSet> out(static_cast<size_t>(nseg));
    for (Index j = 0; j < nseg; ++j) {
        out[static_cast<size_t>(j)].provenance = LoadingProvenance::mode_informed;
        out[static_cast<size_t>(j)].segment = j;
        out[static_cast<size_t>(j)].loadings.resize(static_cast<size_t>(K));
        out[static_cast<size_t>(j)].ranks.resize(static_cast<size_t>(K));
    }

    for (Index k = 0; k < K; ++k) {
        Index run_start = 0;
        while (run_start < nseg) {
            Index run_end = run_start;  // inclusive
            while (run_end + 1 < nseg && !gap_breaks_mode(run_end, k)) ++run_end;

            if (run_start == run_end) {
                const LoadingSet& seg = cache.segment_estimate(run_start);
                out[static_cast<size_t>(run_start)].loadings[static_cast<size_t>(k)] =
                    seg.loadings[static_cast<size_t>(k)];
                out[static_cast<size_t>(run_start)].ranks[static_cast<size_t>(k)] =
                    seg.ranks[static_cast<size_t>(k)];
                run_start = run_end + 1;
                continue;
            }

            // Modes changing identifiably at a gap interior to this run need
            // per-segment loadings in the projector; the rest keep one
            // first-step estimate over the whole run.
            std::vector<bool> changed(static_cast<size_t>(K), false);
            for (Index gap = run_start; gap < run_end; ++gap)
                for (Index l : mode_sets[static_cast<size_t>(gap)])
                    changed[static_cast<size_t>(l)] = true;

            const Index run_a = cache.begin(run_start);
            const Index run_b = cache.end(run_end);
            std::vector<Matrix> run_prelim(static_cast<size_t>(K));
            for (Index l = 0; l < K; ++l)
                if (l != k && !changed[static_cast<size_t>(l)])
                    run_prelim[static_cast<size_t>(l)] =
                        preliminary_loading(s, l, ranks[static_cast<size_t>(l)], run_a, run_b);

            const Index pk = s.dims[static_cast<size_t>(k)];
            Matrix pooled = Matrix::Zero(pk, pk);
            for (Index j = run_start; j <= run_end; ++j) {
                std::vector<Matrix> parts(static_cast<size_t>(K));
                for (Index l = 0; l < K; ++l) {
                    if (l == k) continue;
                    parts[static_cast<size_t>(l)] =
                        changed[static_cast<size_t>(l)]
                            ? cache.segment_estimate(j).loadings[static_cast<size_t>(l)]
                            : run_prelim[static_cast<size_t>(l)];
                }
                Matrix proj = kron_excluding(parts, k);
                for (Index t = cache.begin(j); t < cache.end(j); ++t) {
                    Matrix y = unfold(s.dims, s.values.col(t), k) * proj;
                    pooled.selfadjointView<Eigen::Lower>().rankUpdate(y);
                }
            }
            const double pmk = static_cast<double>(codim(s.dims, k));
            const double scale = 1.0 / (pmk * pmk * static_cast<double>(run_b - run_a) *
                                        static_cast<double>(pk));
            pooled = scale * Matrix(pooled.selfadjointView<Eigen::Lower>());

            Matrix vecs = std::sqrt(static_cast<double>(pk)) *
                          top_eigenvectors(pooled, ranks[static_cast<size_t>(k)]);
            for (Index j = run_start; j <= run_end; ++j) {
                out[static_cast<size_t>(j)].loadings[static_cast<size_t>(k)] = vecs;
                out[static_cast<size_t>(j)].ranks[static_cast<size_t>(k)] =
                    ranks[static_cast<size_t>(k)];
            }
            run_start = run_end + 1;
        }
    }
    return out;
}

}  // namespace tfmseg
