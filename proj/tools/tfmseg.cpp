#include <chrono>
#include <cstdlib>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tfmseg/calibrate.hpp"
#include "tfmseg/errors.hpp"
#include "tfmseg/io.hpp"
#include "tfmseg/metrics.hpp"
#include "tfmseg/modeid.hpp"
#include "tfmseg/segmentation.hpp"
#include "tfmseg/sim.hpp"

namespace {

using namespace tfmseg;

int env_threads() {
    const char* value = std::getenv("TFMSEG_THREADS");
    if (value == nullptr || *value == '\0') return 0;
    char* end = nullptr;
    const long n = std::strtol(value, &end, 10);
    if (end == value || *end != '\0' || n < 0)
        fail(ErrorCode::config_error, "TFMSEG_THREADS must be a nonnegative integer");
    return static_cast<int>(n);
}

std::vector<Index> parse_index_list(const std::string& text, const std::string& what) {
    std::vector<Index> out;
    std::size_t pos = 0;
    while (true) {
        const std::size_t comma = text.find(',', pos);
        const std::string piece =
            comma == std::string::npos ? text.substr(pos) : text.substr(pos, comma - pos);
        try {
            std::size_t used = 0;
            const long long v = std::stoll(piece, &used);
            if (used != piece.size() || v < 0) throw std::invalid_argument(piece);
            out.push_back(static_cast<Index>(v));
        } catch (...) {
            fail(ErrorCode::config_error, "bad " + what + " entry '" + piece + "'");
        }
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return out;
}

std::vector<Dims> parse_grid(const std::string& text, const std::string& what) {
    std::vector<Dims> out;
    std::size_t pos = 0;
    while (true) {
        const std::size_t semi = text.find(';', pos);
        const std::string piece =
            semi == std::string::npos ? text.substr(pos) : text.substr(pos, semi - pos);
        out.push_back(parse_index_list(piece, what));
        if (semi == std::string::npos) break;
        pos = semi + 1;
    }
    return out;
}

SeriesFormat resolve_format(const std::string& flag, const std::string& path) {
    if (flag == "auto") {
        if (path.size() >= 4 && path.compare(path.size() - 4, 4, ".csv") == 0)
            return SeriesFormat::csv;
        return SeriesFormat::binary;
    }
    return parse_series_format(flag);
}

std::string joined(const std::vector<Index>& v) {
    std::ostringstream out;
    for (std::size_t i = 0; i < v.size(); ++i) out << (i ? "," : "") << v[i];
    return out.str();
}

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// ---- detect ----

struct DetectArgs {
    std::string input;
    std::string format = "auto";
    std::string ranks;
    std::string pi_coeffs;
    std::string truth;
    std::string output;
    double zeta_mult = 3.5;
    double mu = 0.0;
    Index trim = -1;
    bool theoretical = false;
    bool mode_informed = false;
};

ModeInformedReport summarize_mode_informed(const TensorSeries& series,
                                           const std::vector<LoadingSet>& sets,
                                           const std::string& truth_path) {
    ModeInformedReport out;
    for (const auto& set : sets) out.segment_ranks.push_back(set.ranks);
    if (truth_path.empty()) return out;
    const GroundTruth gt = load_ground_truth(truth_path);
    if (gt.segment_loadings.size() != sets.size()) {
        std::cerr << "note: truth has " << gt.segment_loadings.size() << " segments but "
                  << sets.size() << " were estimated; skipping loading distances\n";
        return out;
    }
    (void)series;
    for (std::size_t j = 0; j < sets.size(); ++j) {
        std::vector<double> row;
        for (std::size_t k = 0; k < sets[j].loadings.size(); ++k) {
            const Matrix basis = column_space_basis(gt.segment_loadings[j][k]);
            row.push_back(loading_distance(sets[j].loadings[k], basis));
        }
        out.truth_distances.push_back(std::move(row));
    }
    return out;
}

void run_detect(const DetectArgs& a) {
    const auto start = std::chrono::steady_clock::now();
    const TensorSeries series = load_series(a.input, resolve_format(a.format, a.input));

    DetectConfig cfg;
    cfg.record_timing = true;
    if (!a.ranks.empty()) cfg.ranks = parse_index_list(a.ranks, "rank");
    if (!a.pi_coeffs.empty()) {
        cfg.pi_coefficients = load_pi_coefficients(a.pi_coeffs);
        cfg.pi_source = a.pi_coeffs;
    }
    cfg.mu = a.mu;
    cfg.trim = a.trim;
    cfg.zeta_multiplier = a.zeta_mult;

    const DetectionState state = prepare_detection(series, cfg);
    ReportDocument doc;
    doc.detection = run_detection(series, state, cfg);

    std::vector<Index> locations;
    for (const auto& est : doc.detection.estimates) locations.push_back(est.location);

    ModeIdConfig mcfg;
    mcfg.zeta_multiplier = a.zeta_mult;
    mcfg.practical_endpoints = !a.theoretical;
    doc.mode_id = identify_modes(state.stats, locations, state.intervals, series.cell_count(), mcfg);
    doc.has_mode_id = true;

    if (a.mode_informed) {
        std::vector<std::vector<Index>> mode_sets;
        for (const auto& attr : doc.mode_id.attributions) mode_sets.push_back(attr.modes);
        const std::vector<LoadingSet> sets =
            mode_informed_loadings(series, locations, mode_sets, state.ranks);
        doc.mode_informed = summarize_mode_informed(series, sets, a.truth);
        doc.has_mode_informed = true;
    }

    doc.total_seconds = seconds_since(start);
    save_report(doc, a.output);

    std::cout << "ranks: " << joined(doc.detection.ranks)
              << (doc.detection.ranks_estimated ? " (estimated)" : " (given)") << "\n";
    std::cout << "threshold: " << doc.detection.pi << " (" << doc.detection.pi_source
              << " coefficients)\n";
    if (doc.detection.estimates.empty()) {
        std::cout << "no change points detected\n";
    } else {
        for (std::size_t i = 0; i < doc.detection.estimates.size(); ++i) {
            const auto& est = doc.detection.estimates[i];
            const auto& attr = doc.mode_id.attributions[i];
            std::cout << "change at t=" << est.location << " detector=" << est.detector_value
                      << " modes=";
            if (attr.modes.empty()) {
                std::cout << "none";
            } else {
                std::vector<Index> shown;
                for (Index k : attr.modes) shown.push_back(k + 1);
                std::cout << joined(shown);
            }
            std::cout << "\n";
        }
    }
    std::cout << "report written to " << a.output << "\n";
}

// ---- identify ----

struct IdentifyArgs {
    std::string input;
    std::string format = "auto";
    std::string report;
    std::string locations;
    std::string ranks;
    std::string output;
    double zeta_mult = 3.5;
    bool theoretical = false;
};

void run_identify(const IdentifyArgs& a) {
    const auto start = std::chrono::steady_clock::now();
    if (a.report.empty() == a.locations.empty())
        fail(ErrorCode::config_error, "identify needs exactly one of --report or --locations");
    const TensorSeries series = load_series(a.input, resolve_format(a.format, a.input));

    ReportDocument doc;
    std::vector<Index> locations;
    DetectConfig cfg;
    cfg.record_timing = true;
    cfg.zeta_multiplier = a.zeta_mult;
    if (!a.ranks.empty()) cfg.ranks = parse_index_list(a.ranks, "rank");

    bool have_report = false;
    if (!a.report.empty()) {
        doc = load_report(a.report);
        have_report = true;
        for (const auto& est : doc.detection.estimates) locations.push_back(est.location);
        if (a.ranks.empty()) cfg.ranks = doc.detection.ranks;
    } else {
        locations = parse_index_list(a.locations, "location");
    }

    const DetectionState state = prepare_detection(series, cfg);
    ModeIdConfig mcfg;
    mcfg.zeta_multiplier = a.zeta_mult;
    mcfg.practical_endpoints = !a.theoretical;
    const ModeIdResult mid =
        identify_modes(state.stats, locations, state.intervals, series.cell_count(), mcfg);

    if (!have_report) {
        ChangePointReport& det = doc.detection;
        det.dims = series.dims;
        det.series_length = series.length();
        det.ranks = state.ranks;
        det.ranks_estimated = state.ranks_estimated;
        det.mu = state.intervals.mu;
        det.depth = state.intervals.depth;
        det.trim = state.intervals.trim;
        det.bandwidth = state.bandwidth;
        det.pi = state.pi;
        det.pi_coefficients = cfg.pi_coefficients;
        det.pi_source = cfg.pi_source;
        det.weight = state.weight;
        for (Index loc : locations) {
            ChangePointEstimate est;
            est.location = loc;
            est.detector_value = std::nan("");
            det.estimates.push_back(est);
        }
    }
    doc.mode_id = mid;
    doc.has_mode_id = true;
    doc.total_seconds = seconds_since(start);
    save_report(doc, a.output);

    for (std::size_t i = 0; i < mid.attributions.size(); ++i) {
        const auto& attr = mid.attributions[i];
        std::vector<Index> shown;
        for (Index k : attr.modes) shown.push_back(k + 1);
        std::cout << "change at t=" << attr.location
                  << " modes=" << (shown.empty() ? std::string("none") : joined(shown)) << "\n";
    }
    std::cout << "report written to " << a.output << "\n";
}

// ---- simulate ----

struct SimulateArgs {
    std::string scenario = "S1";
    Index length = 400;
    std::string dims = "10,10,10";
    std::string ranks = "3,3,3";
    double rho = 0.0;
    std::string spacing = "equal";
    bool missing = false;
    std::uint64_t seed = 1;
    std::uint64_t stream = 0;
    std::string config;
    std::string output;
    std::string format = "auto";
    std::string truth_output;
    std::string scenario_output;
};

void run_simulate(const SimulateArgs& a, const CLI::App* sub) {
    SimScenario sc;
    if (!a.config.empty()) sc = load_scenario(a.config);
    const auto given = [&](const std::string& flag) { return sub->count(flag) > 0; };
    if (a.config.empty() || given("--scenario")) sc.scenario = parse_scenario(a.scenario);
    if (a.config.empty() || given("--T")) sc.length = a.length;
    if (a.config.empty() || given("--dims")) sc.dims = parse_index_list(a.dims, "dimension");
    if (a.config.empty() || given("--ranks")) sc.ranks = parse_index_list(a.ranks, "rank");
    if (a.config.empty() || given("--rho")) sc.rho = a.rho;
    if (a.config.empty() || given("--spacing")) sc.spacing = parse_spacing(a.spacing);
    if (a.config.empty() || given("--missing")) sc.missing = a.missing;
    if (a.config.empty() || given("--seed")) sc.seed = a.seed;
    if (a.config.empty() || given("--stream")) sc.stream = a.stream;

    const Realisation real = generate(sc);
    save_series(real.series, a.output, resolve_format(a.format, a.output));
    const std::string truth_path =
        a.truth_output.empty() ? a.output + ".truth.json" : a.truth_output;
    save_ground_truth(real.truth, truth_path);
    if (!a.scenario_output.empty()) save_scenario(sc, a.scenario_output);

    std::cout << "scenario " << scenario_name(sc.scenario) << " T=" << sc.length << " dims="
              << joined(sc.dims) << " seed=" << sc.seed << " stream=" << sc.stream << "\n";
    if (!real.truth.locations.empty()) {
        std::cout << "true changes at " << joined(real.truth.locations) << "\n";
        for (std::size_t j = 0; j < real.truth.sizes.size(); ++j)
            std::cout << "change " << (j + 1) << " size=" << real.truth.sizes[j].total << "\n";
    }
    std::cout << "series written to " << a.output << "\n";
    std::cout << "truth written to " << truth_path << "\n";
}

// ---- calibrate ----

struct CalibrateArgs {
    std::string what = "pi";
    std::string lengths;
    std::string dims_grid;
    std::string ranks_grid;
    std::string scenarios;
    double rho = -1.0;
    std::string spacing = "equal";
    Index reps = -1;
    double quantile = -1.0;
    long long seed = -1;
    std::string output;
    std::string cells_output;
};

void run_calibrate(const CalibrateArgs& a) {
    const int threads = env_threads();
    if (a.what == "pi") {
        PiCalibrationConfig cfg;
        if (!a.lengths.empty()) cfg.lengths = parse_index_list(a.lengths, "length");
        if (!a.dims_grid.empty()) cfg.dims_grid = parse_grid(a.dims_grid, "dimension");
        if (!a.ranks_grid.empty()) cfg.ranks_grid = parse_grid(a.ranks_grid, "rank");
        if (a.rho >= 0.0) cfg.rho = a.rho;
        if (a.reps > 0) cfg.reps = a.reps;
        if (a.quantile > 0.0) cfg.quantile = a.quantile;
        if (a.seed >= 0) cfg.seed = static_cast<std::uint64_t>(a.seed);
        cfg.threads = threads;
        const PiCalibrationResult result = calibrate_pi(cfg);
        save_pi_coefficients(result.coefficients, a.output);
        if (!a.cells_output.empty()) {
            std::ofstream cells(a.cells_output);
            if (!cells)
                fail(ErrorCode::io_error, "cannot open '" + a.cells_output + "' for writing");
            cells.precision(17);
            cells << "T,dims,ranks,d,quantile\n";
            for (const auto& cell : result.cells) {
                cells << cell.length << ',';
                for (std::size_t k = 0; k < cell.dims.size(); ++k)
                    cells << (k ? "x" : "") << cell.dims[k];
                cells << ',';
                for (std::size_t k = 0; k < cell.ranks.size(); ++k)
                    cells << (k ? "x" : "") << cell.ranks[k];
                cells << ',' << cell.stacked << ',' << cell.quantile_value << '\n';
            }
        }
        std::cout << "cells: " << result.cells.size() << "\n";
        std::cout << "r2: " << result.r2 << "\n";
        std::cout << "r2_adjusted: " << result.r2_adjusted << "\n";
        std::cout << "coefficients written to " << a.output << "\n";
    } else if (a.what == "zeta") {
        ZetaCalibrationConfig cfg;
        if (!a.scenarios.empty()) {
            cfg.scenarios.clear();
            std::size_t pos = 0;
            while (true) {
                const std::size_t comma = a.scenarios.find(',', pos);
                const std::string piece = comma == std::string::npos
                                              ? a.scenarios.substr(pos)
                                              : a.scenarios.substr(pos, comma - pos);
                cfg.scenarios.push_back(parse_scenario(piece));
                if (comma == std::string::npos) break;
                pos = comma + 1;
            }
        }
        if (!a.lengths.empty()) cfg.lengths = parse_index_list(a.lengths, "length");
        if (!a.dims_grid.empty()) cfg.dims_grid = parse_grid(a.dims_grid, "dimension");
        if (a.rho >= 0.0) cfg.rho = a.rho;
        cfg.spacing = parse_spacing(a.spacing);
        if (a.reps > 0) cfg.reps = a.reps;
        if (a.quantile > 0.0) cfg.quantile = a.quantile;
        if (a.seed >= 0) cfg.seed = static_cast<std::uint64_t>(a.seed);
        cfg.threads = threads;
        const ZetaCalibrationResult result = calibrate_zeta(cfg);
        std::ofstream out(a.output);
        if (!out) fail(ErrorCode::io_error, "cannot open '" + a.output + "' for writing");
        out.precision(17);
        out << "multiplier=" << result.multiplier << '\n'
            << "pooled_count=" << result.pooled_count << '\n'
            << "quantile=" << cfg.quantile << '\n';
        for (std::size_t s = 0; s < cfg.scenarios.size(); ++s)
            out << scenario_name(cfg.scenarios[s]) << "=" << result.per_scenario[s] << '\n';
        std::cout << "pooled multiplier: " << result.multiplier << " over "
                  << result.pooled_count << " statistics\n";
        std::cout << "written to " << a.output << "\n";
    } else {
        fail(ErrorCode::config_error, "unknown calibration target '" + a.what +
                                          "', expected pi or zeta");
    }
}

// ---- evaluate ----

struct EvaluateArgs {
    std::string report;
    std::string truth;
    std::string output;
};

void run_evaluate(const EvaluateArgs& a) {
    const ReportDocument doc = load_report(a.report);
    const GroundTruth gt = load_ground_truth(a.truth);

    std::vector<Index> locations;
    for (const auto& est : doc.detection.estimates) locations.push_back(est.location);

    ReplicationRecord rec;
    rec.detection = evaluate_detection(locations, gt, doc.detection.series_length);
    rec.seconds = doc.total_seconds < 0 ? 0.0 : doc.total_seconds;
    if (doc.has_mode_id && rec.detection.q_hat == rec.detection.q_true &&
        !gt.mode_sets.empty()) {
        std::vector<std::vector<Index>> estimated;
        for (const auto& attr : doc.mode_id.attributions) estimated.push_back(attr.modes);
        rec.mode_id =
            evaluate_mode_id(estimated, gt, static_cast<Index>(doc.detection.dims.size()));
        rec.has_mode_id = true;
    }
    save_metrics_csv({rec}, rec.detection.q_true, a.output);

    std::cout << "q_hat - q: " << rec.detection.q_diff << "\n";
    for (std::size_t j = 0; j < rec.detection.accurate.size(); ++j)
        std::cout << "accuracy_" << (j + 1) << ": " << (rec.detection.accurate[j] ? 1 : 0) << "\n";
    std::cout << "matched: " << (rec.detection.matched ? 1 : 0) << "\n";
    if (rec.has_mode_id)
        for (std::size_t j = 0; j < rec.mode_id.tpr.size(); ++j)
            std::cout << "tpr_" << (j + 1) << ": " << rec.mode_id.tpr[j] << " fpr_" << (j + 1)
                      << ": " << rec.mode_id.fpr[j] << "\n";
    std::cout << "metrics written to " << a.output << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multiple change point detection in high-dimensional tensor factor series"};
    app.require_subcommand(1);

    DetectArgs det;
    auto* det_cmd = app.add_subcommand("detect", "Detect change points and attribute modes");
    det_cmd->add_option("--input", det.input, "series file")->required();
    det_cmd->add_option("--format", det.format, "binary|csv|auto (default auto)");
    det_cmd->add_option("--ranks", det.ranks, "comma-separated ranks; omitted: estimated");
    det_cmd->add_option("--pi-coeffs", det.pi_coeffs, "detection threshold coefficients file");
    det_cmd->add_option("--zeta-mult", det.zeta_mult, "attribution threshold multiplier");
    det_cmd->add_option("--mu", det.mu, "interval depth parameter override");
    det_cmd->add_option("--trim", det.trim, "scan margin override");
    det_cmd->add_flag("--theoretical-endpoints", det.theoretical,
                      "use conservative interval endpoints for attribution");
    det_cmd->add_flag("--mode-informed", det.mode_informed,
                      "re-estimate loadings pooling across attributed changes");
    det_cmd->add_option("--truth", det.truth, "ground truth file for loading distances");
    det_cmd->add_option("--output", det.output, "report path")->required();

    IdentifyArgs ident;
    auto* id_cmd = app.add_subcommand("identify", "Attribute given change points to modes");
    id_cmd->add_option("--input", ident.input, "series file")->required();
    id_cmd->add_option("--format", ident.format, "binary|csv|auto (default auto)");
    id_cmd->add_option("--report", ident.report, "report with detected change points");
    id_cmd->add_option("--locations", ident.locations, "comma-separated change locations");
    id_cmd->add_option("--ranks", ident.ranks, "comma-separated ranks; omitted: estimated");
    id_cmd->add_option("--zeta-mult", ident.zeta_mult, "attribution threshold multiplier");
    id_cmd->add_flag("--theoretical-endpoints", ident.theoretical,
                     "use conservative interval endpoints for attribution");
    id_cmd->add_option("--output", ident.output, "report path")->required();

    SimulateArgs sim;
    auto* sim_cmd = app.add_subcommand("simulate", "Generate a scenario realisation");
    sim_cmd->add_option("--scenario", sim.scenario, "S0|S1|S2|S3");
    sim_cmd->add_option("--T", sim.length, "series length");
    sim_cmd->add_option("--dims", sim.dims, "tensor dimensions, comma-separated");
    sim_cmd->add_option("--ranks", sim.ranks, "factor ranks, comma-separated");
    sim_cmd->add_option("--rho", sim.rho, "factor autocorrelation");
    sim_cmd->add_option("--spacing", sim.spacing, "equal|unequal change spacing");
    sim_cmd->add_flag("--missing", sim.missing, "mask the late half-hypercube cells");
    sim_cmd->add_option("--seed", sim.seed, "RNG seed");
    sim_cmd->add_option("--stream", sim.stream, "RNG stream (replication index)");
    sim_cmd->add_option("--config", sim.config, "scenario file; flags override its values");
    sim_cmd->add_option("--output", sim.output, "series path")->required();
    sim_cmd->add_option("--format", sim.format, "binary|csv|auto (default auto)");
    sim_cmd->add_option("--truth-output", sim.truth_output,
                        "truth path (default <output>.truth.json)");
    sim_cmd->add_option("--scenario-output", sim.scenario_output, "write resolved scenario file");

    CalibrateArgs cal;
    auto* cal_cmd = app.add_subcommand("calibrate", "Calibrate detection or attribution thresholds");
    cal_cmd->add_option("--what", cal.what, "pi|zeta")->required();
    cal_cmd->add_option("--lengths", cal.lengths, "grid of series lengths");
    cal_cmd->add_option("--dims-grid", cal.dims_grid, "dimension tuples, ';'-separated");
    cal_cmd->add_option("--ranks-grid", cal.ranks_grid, "rank tuples, ';'-separated (pi only)");
    cal_cmd->add_option("--scenarios", cal.scenarios, "scenario list for zeta (default S1,S2)");
    cal_cmd->add_option("--rho", cal.rho, "factor autocorrelation");
    cal_cmd->add_option("--spacing", cal.spacing, "equal|unequal (zeta only)");
    cal_cmd->add_option("--reps", cal.reps, "replications per grid cell");
    cal_cmd->add_option("--quantile", cal.quantile, "upper quantile level");
    cal_cmd->add_option("--seed", cal.seed, "RNG seed");
    cal_cmd->add_option("--output", cal.output, "output file")->required();
    cal_cmd->add_option("--cells-output", cal.cells_output, "per-cell quantile CSV (pi only)");

    EvaluateArgs ev;
    auto* ev_cmd = app.add_subcommand("evaluate", "Score a report against ground truth");
    ev_cmd->add_option("--report", ev.report, "report file")->required();
    ev_cmd->add_option("--truth", ev.truth, "ground truth file")->required();
    ev_cmd->add_option("--output", ev.output, "metrics CSV path")->required();

    det_cmd->callback([&] { run_detect(det); });
    id_cmd->callback([&] { run_identify(ident); });
    sim_cmd->callback([&] { run_simulate(sim, sim_cmd); });
    cal_cmd->callback([&] { run_calibrate(cal); });
    ev_cmd->callback([&] { run_evaluate(ev); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const tfmseg::Error& e) {
        std::cerr << "error: [" << error_code_name(e.code()) << "] " << e.what() << "\n";
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        std::cerr << "error: [internal] " << e.what() << "\n";
        return 70;
    }
    return 0;
}
