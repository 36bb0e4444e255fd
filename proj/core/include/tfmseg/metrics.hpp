#pragma once

#include <map>
#include <vector>

#include "tfmseg/sim.hpp"
#include "tfmseg/tensor.hpp"

namespace tfmseg {

// Outcome of one detection run against the truth. accurate[j] says whether
// some estimate lies within 2 log(T) of the j-th true location; matched says
// the run recovered the right count with every estimate falling inside the
// midpoint window around its target, which is the screen applied before
// judging attribution quality.
struct DetectionEval {
    Index q_true = 0;
    Index q_hat = 0;
    Index q_diff = 0;
    std::vector<bool> accurate;
    bool matched = false;
};

DetectionEval evaluate_detection(const std::vector<Index>& estimates, const GroundTruth& gt,
                                 Index length);

// Per-change true and false positive rates for estimated mode sets, with the
// guarded denominators max(|K_j|, 1) and max(K - |K_j|, 1).
struct ModeIdEval {
    std::vector<double> tpr;
    std::vector<double> fpr;
};

ModeIdEval evaluate_mode_id(const std::vector<std::vector<Index>>& estimated,
                            const GroundTruth& gt, Index order);

// One replication's worth of results as recorded by the simulation harness.
// mode_id is meaningful only when has_mode_id is set (attribution runs only
// on replications that pass the matched screen).
struct ReplicationRecord {
    DetectionEval detection;
    ModeIdEval mode_id;
    bool has_mode_id = false;
    double seconds = 0.0;
};

// Aggregates across replications: the histogram of q_hat - q_true, per-change
// accuracy rates, the matched fraction, and attribution rates averaged over
// matched replications only.
struct StudySummary {
    Index replications = 0;
    Index matched = 0;
    Index attributed = 0;
    std::map<Index, Index> q_diff_counts;
    std::vector<double> accuracy;
    std::vector<double> tpr;
    std::vector<double> fpr;
    double mean_seconds = 0.0;
};

StudySummary summarize(const std::vector<ReplicationRecord>& records, Index q_true, Index order);

}  // namespace tfmseg
