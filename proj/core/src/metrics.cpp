#include "tfmseg/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "tfmseg/errors.hpp"

namespace tfmseg {

DetectionEval evaluate_detection(const std::vector<Index>& estimates, const GroundTruth& gt,
                                 Index length) {
    if (length < 2) fail(ErrorCode::bad_argument, "series length must be at least 2");
    DetectionEval out;
    out.q_true = static_cast<Index>(gt.locations.size());
    out.q_hat = static_cast<Index>(estimates.size());
    out.q_diff = out.q_hat - out.q_true;

    const double radius = 2.0 * std::log(static_cast<double>(length));
    out.accurate.resize(gt.locations.size(), false);
    for (std::size_t j = 0; j < gt.locations.size(); ++j) {
        for (Index est : estimates) {
            if (std::abs(static_cast<double>(est - gt.locations[j])) <= radius) {
                out.accurate[j] = true;
                break;
            }
        }
    }

    if (out.q_hat == out.q_true) {
        std::vector<Index> sorted = estimates;
        std::sort(sorted.begin(), sorted.end());
        out.matched = true;
        for (std::size_t j = 0; j < gt.locations.size(); ++j) {
            const Index prev = j == 0 ? 0 : gt.locations[j - 1];
            const Index next = j + 1 < gt.locations.size() ? gt.locations[j + 1] : length;
            const double lo = 0.5 * static_cast<double>(prev + gt.locations[j]);
            const double hi = 0.5 * static_cast<double>(gt.locations[j] + next);
            const double est = static_cast<double>(sorted[j]);
            if (!(est > lo && est <= hi)) {
                out.matched = false;
                break;
            }
        }
    }
    return out;
}

ModeIdEval evaluate_mode_id(const std::vector<std::vector<Index>>& estimated,
                            const GroundTruth& gt, Index order) {
    if (estimated.size() != gt.mode_sets.size())
        fail(ErrorCode::bad_argument, "need one estimated mode set per true change");
    ModeIdEval out;
    out.tpr.resize(gt.mode_sets.size());
    out.fpr.resize(gt.mode_sets.size());
    for (std::size_t j = 0; j < gt.mode_sets.size(); ++j) {
        const auto& truth = gt.mode_sets[j];
        const auto& hat = estimated[j];
        Index hits = 0;
        Index false_hits = 0;
        for (Index k : hat) {
            const bool in_truth = std::find(truth.begin(), truth.end(), k) != truth.end();
            if (in_truth)
                ++hits;
            else
                ++false_hits;
        }
        const auto truth_size = static_cast<Index>(truth.size());
        out.tpr[j] = static_cast<double>(hits) / static_cast<double>(std::max<Index>(truth_size, 1));
        out.fpr[j] = static_cast<double>(false_hits) /
                     static_cast<double>(std::max<Index>(order - truth_size, 1));
    }
    return out;
}

StudySummary summarize(const std::vector<ReplicationRecord>& records, Index q_true, Index order) {
    StudySummary out;
    out.replications = static_cast<Index>(records.size());
    out.accuracy.assign(static_cast<std::size_t>(q_true), 0.0);
    out.tpr.assign(static_cast<std::size_t>(q_true), 0.0);
    out.fpr.assign(static_cast<std::size_t>(q_true), 0.0);
    if (records.empty()) return out;

    for (const auto& rec : records) {
        ++out.q_diff_counts[rec.detection.q_diff];
        for (std::size_t j = 0; j < rec.detection.accurate.size() && j < out.accuracy.size(); ++j)
            if (rec.detection.accurate[j]) out.accuracy[j] += 1.0;
        out.mean_seconds += rec.seconds;
        if (rec.detection.matched) ++out.matched;
        if (rec.detection.matched && rec.has_mode_id) {
            ++out.attributed;
            for (std::size_t j = 0; j < out.tpr.size() && j < rec.mode_id.tpr.size(); ++j) {
                out.tpr[j] += rec.mode_id.tpr[j];
                out.fpr[j] += rec.mode_id.fpr[j];
            }
        }
    }
    for (auto& a : out.accuracy) a /= static_cast<double>(records.size());
    out.mean_seconds /= static_cast<double>(records.size());
    if (out.attributed > 0) {
        for (std::size_t j = 0; j < out.tpr.size(); ++j) {
            out.tpr[j] /= static_cast<double>(out.attributed);
            out.fpr[j] /= static_cast<double>(out.attributed);
        }
    }
    return out;
}

}  // namespace tfmseg
