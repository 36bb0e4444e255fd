#pragma once

#include <string>
#include <vector>

#include "tfmseg/calibrate.hpp"
#include "tfmseg/metrics.hpp"
#include "tfmseg/modeid.hpp"
#include "tfmseg/segmentation.hpp"
#include "tfmseg/series.hpp"
#include "tfmseg/sim.hpp"

namespace tfmseg {

enum class SeriesFormat { binary, csv };

SeriesFormat parse_series_format(const std::string& name);

// Binary container: "TFTS" magic, u16 version, u32 mode count, u64 dims,
// u64 length, u16 element tag (1 = IEEE-754 binary64), u8 mask flag, then the
// values column by column (cells within a column ordered first-mode fastest)
// and the mask bytes when flagged. Everything little-endian; round-trips are
// bit-exact, masked cells keep their NaN payload.
void save_series_binary(const TensorSeries& s, const std::string& path);
TensorSeries load_series_binary(const std::string& path);

// Long-format CSV: header "t,i_1,...,i_K,value", one row per observed cell
// with 1-based indices, values at full double precision. Cells absent from
// the file come back masked. Dimensions and length are inferred from the
// largest indices present, so a file missing an entire trailing slice loads
// as the smaller series that covers what remains.
void save_series_csv(const TensorSeries& s, const std::string& path);
TensorSeries load_series_csv(const std::string& path);

void save_series(const TensorSeries& s, const std::string& path, SeriesFormat format);
TensorSeries load_series(const std::string& path, SeriesFormat format);

// Threshold coefficients as "name=value" lines: intercept, sqrt_d, sqrt_logT,
// loglogT_over_sqrtlogT, inv_sqrtlogT.
void save_pi_coefficients(const PiCoefficients& c, const std::string& path);
PiCoefficients load_pi_coefficients(const std::string& path);

// Scenario description as "key=value" lines mirroring SimScenario.
void save_scenario(const SimScenario& sc, const std::string& path);
SimScenario load_scenario(const std::string& path);

void save_ground_truth(const GroundTruth& gt, const std::string& path);
GroundTruth load_ground_truth(const std::string& path);

// Optional summary of the mode-informed re-estimation: the ranks every
// segment ended up with, and distances to true loading spaces per segment and
// mode when the truth is available.
struct ModeInformedReport {
    std::vector<std::vector<Index>> segment_ranks;
    std::vector<std::vector<double>> truth_distances;
};

// Everything one pipeline run decided and produced, in one self-describing
// document. Serialized as JSON with full-precision numbers; modes and time
// indices are 1-based on disk.
struct ReportDocument {
    ChangePointReport detection;
    bool has_mode_id = false;
    ModeIdResult mode_id;
    bool has_mode_informed = false;
    ModeInformedReport mode_informed;
    double total_seconds = -1.0;
};

std::string report_to_json(const ReportDocument& doc);
ReportDocument report_from_json(const std::string& text);
void save_report(const ReportDocument& doc, const std::string& path);
ReportDocument load_report(const std::string& path);

// Metric table for one or more replications, one row each, with q_hat - q,
// per-change accuracy, and attribution rates where available.
void save_metrics_csv(const std::vector<ReplicationRecord>& records, Index q_true,
                      const std::string& path);

}  // namespace tfmseg
