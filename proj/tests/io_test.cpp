#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "tfmseg/io.hpp"
#include "tfmseg/rng.hpp"

using namespace tfmseg;

namespace {

struct TempFile {
    std::string path;
    explicit TempFile(const std::string& name) : path("/tmp/tfmseg_iotest_" + name) {}
    ~TempFile() { std::remove(path.c_str()); }
};

TensorSeries random_series(const Dims& dims, Index T, Rng& rng) {
    Matrix values(dim_product(dims), T);
    for (Index t = 0; t < T; ++t)
        for (Index i = 0; i < values.rows(); ++i) values(i, t) = rng.normal();
    return TensorSeries(dims, std::move(values));
}

std::string read_all(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("binary series round-trips bit-exactly") {
    Rng rng(90, 0);
    TensorSeries s = random_series({3, 4, 2}, 6, rng);
    s.values(5, 2) = -0.0;
    s.values(0, 0) = std::numeric_limits<double>::quiet_NaN();
    TempFile f("roundtrip.tfts");
    save_series_binary(s, f.path);
    TensorSeries back = load_series_binary(f.path);
    CHECK(back.dims == s.dims);
    REQUIRE(back.values.rows() == s.values.rows());
    REQUIRE(back.values.cols() == s.values.cols());
    for (Index t = 0; t < s.length(); ++t)
        for (Index i = 0; i < s.cell_count(); ++i) {
            const double a = s.values(i, t), b = back.values(i, t);
            CHECK(std::memcmp(&a, &b, sizeof a) == 0);
        }
    CHECK(!back.has_mask());

    s.mask = MaskMatrix::Ones(s.cell_count(), s.length());
    s.mask(0, 0) = 0;
    save_series_binary(s, f.path);
    TensorSeries masked = load_series_binary(f.path);
    REQUIRE(masked.has_mask());
    CHECK(masked.mask == s.mask);
}

TEST_CASE("binary loader rejects corrupted input") {
    Rng rng(91, 0);
    TensorSeries s = random_series({2, 2}, 3, rng);
    TempFile f("corrupt.tfts");
    save_series_binary(s, f.path);

    std::string bytes = read_all(f.path);
    {
        std::ofstream out(f.path, std::ios::binary);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() - 5));
    }
    CHECK_THROWS_AS(load_series_binary(f.path), Error);

    {
        std::ofstream out(f.path, std::ios::binary);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        out << "tail";
    }
    CHECK_THROWS_AS(load_series_binary(f.path), Error);

    bytes[0] = 'X';
    {
        std::ofstream out(f.path, std::ios::binary);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    }
    CHECK_THROWS_WITH_AS(load_series_binary(f.path), doctest::Contains("magic"), Error);

    CHECK_THROWS_AS(load_series_binary("/tmp/tfmseg_iotest_does_not_exist"), Error);
}

TEST_CASE("csv series round-trips values exactly") {
    Rng rng(92, 0);
    TensorSeries s = random_series({3, 2}, 4, rng);
    s.values(2, 1) = 1.0 / 3.0;
    TempFile f("round.csv");
    save_series_csv(s, f.path);
    TensorSeries back = load_series_csv(f.path);
    CHECK(back.dims == s.dims);
    CHECK(back.values == s.values);
    CHECK(!back.has_mask());

    std::string text = read_all(f.path);
    CHECK(text.rfind("t,i_1,i_2,value", 0) == 0);
}

TEST_CASE("csv with an omitted cell loads masked") {
    Rng rng(93, 0);
    TensorSeries s = random_series({2, 2}, 3, rng);
    TempFile f("gap.csv");
    save_series_csv(s, f.path);

    // Drop one interior data row (keep the header).
    std::ifstream in(f.path);
    std::vector<std::string> lines;
    for (std::string line; std::getline(in, line);) lines.push_back(line);
    in.close();
    REQUIRE(lines.size() == 1 + 12);
    lines.erase(lines.begin() + 5);
    std::ofstream out(f.path);
    for (const auto& line : lines) out << line << "\n";
    out.close();

    TensorSeries back = load_series_csv(f.path);
    REQUIRE(back.has_mask());
    CHECK(!back.complete());
    Index missing = 0;
    for (Index t = 0; t < back.length(); ++t)
        for (Index i = 0; i < back.cell_count(); ++i)
            if (back.mask(i, t) == 0) {
                ++missing;
                CHECK(std::isnan(back.values(i, t)));
            }
    CHECK(missing == 1);
}

TEST_CASE("csv duplicate cells are named in the error") {
    TempFile f("dup.csv");
    std::ofstream out(f.path);
    out << "t,i_1,value\n";
    out << "1,1,0.5\n";
    out << "1,2,0.25\n";
    out << "1,1,0.75\n";
    out.close();
    CHECK_THROWS_WITH_AS(load_series_csv(f.path), doctest::Contains("duplicate"), Error);
}

TEST_CASE("csv header and field validation") {
    TempFile f("badhead.csv");
    {
        std::ofstream out(f.path);
        out << "time,i_1,value\n1,1,0.5\n";
    }
    CHECK_THROWS_AS(load_series_csv(f.path), Error);
    {
        std::ofstream out(f.path);
        out << "t,i_1,value\n1,one,0.5\n";
    }
    CHECK_THROWS_AS(load_series_csv(f.path), Error);
}

TEST_CASE("format dispatch matches the suffix convention") {
    CHECK(parse_series_format("binary") == SeriesFormat::binary);
    CHECK(parse_series_format("csv") == SeriesFormat::csv);
    CHECK_THROWS_AS(parse_series_format("parquet"), Error);

    Rng rng(94, 0);
    TensorSeries s = random_series({2, 3}, 2, rng);
    TempFile f("dispatch.bin");
    save_series(s, f.path, SeriesFormat::binary);
    CHECK(load_series(f.path, SeriesFormat::binary).values == s.values);
    save_series(s, f.path, SeriesFormat::csv);
    CHECK(load_series(f.path, SeriesFormat::csv).values == s.values);
}

TEST_CASE("threshold coefficients round-trip through their file format") {
    PiCoefficients c{1.25, -0.5, 0.125, 3.75, -2.0};
    TempFile f("coeffs.txt");
    save_pi_coefficients(c, f.path);
    PiCoefficients back = load_pi_coefficients(f.path);
    CHECK(back.intercept == c.intercept);
    CHECK(back.sqrt_d == c.sqrt_d);
    CHECK(back.sqrt_log_t == c.sqrt_log_t);
    CHECK(back.loglog_t_over_sqrt_log_t == c.loglog_t_over_sqrt_log_t);
    CHECK(back.inv_sqrt_log_t == c.inv_sqrt_log_t);

    std::ifstream in(f.path);
    Index lines = 0;
    for (std::string line; std::getline(in, line);)
        if (!line.empty()) ++lines;
    CHECK(lines == 5);
}

TEST_CASE("coefficient files must name every regressor") {
    TempFile f("partial.txt");
    {
        std::ofstream out(f.path);
        out << "intercept=1\nsqrt_d=2\n";
    }
    CHECK_THROWS_AS(load_pi_coefficients(f.path), Error);
    {
        std::ofstream out(f.path);
        out << "intercept=1\nsqrt_d=2\nsqrt_logT=3\nloglogT_over_sqrtlogT=4\ninv_sqrtlogT=5\n"
            << "extra=6\n";
    }
    CHECK_THROWS_AS(load_pi_coefficients(f.path), Error);
}

TEST_CASE("scenario files round-trip every field") {
    SimScenario sc;
    sc.scenario = Scenario::s2;
    sc.length = 640;
    sc.dims = {10, 20, 40};
    sc.ranks = {3, 3, 3};
    sc.rho = 0.7;
    sc.spacing = Spacing::unequal;
    sc.missing = true;
    sc.store_common = true;
    sc.seed = 987654321;
    sc.stream = 17;
    TempFile f("scenario.txt");
    save_scenario(sc, f.path);
    SimScenario back = load_scenario(f.path);
    CHECK(back.scenario == sc.scenario);
    CHECK(back.length == sc.length);
    CHECK(back.dims == sc.dims);
    CHECK(back.ranks == sc.ranks);
    CHECK(back.rho == sc.rho);
    CHECK(back.spacing == sc.spacing);
    CHECK(back.missing == sc.missing);
    CHECK(back.store_common == sc.store_common);
    CHECK(back.seed == sc.seed);
    CHECK(back.stream == sc.stream);
}

TEST_CASE("ground truth files round-trip the generator output") {
    SimScenario sc;
    sc.scenario = Scenario::s1;
    sc.length = 48;
    sc.dims = {6, 6, 6};
    sc.seed = 29;
    GroundTruth gt = generate(sc).truth;
    TempFile f("truth.json");
    save_ground_truth(gt, f.path);
    GroundTruth back = load_ground_truth(f.path);
    CHECK(back.locations == gt.locations);
    CHECK(back.mode_sets == gt.mode_sets);
    REQUIRE(back.base_loadings.size() == gt.base_loadings.size());
    for (size_t k = 0; k < gt.base_loadings.size(); ++k)
        CHECK(back.base_loadings[k] == gt.base_loadings[k]);
    REQUIRE(back.transforms.size() == gt.transforms.size());
    for (size_t j = 0; j < gt.transforms.size(); ++j)
        for (size_t k = 0; k < gt.transforms[j].size(); ++k)
            CHECK(back.transforms[j][k] == gt.transforms[j][k]);
    REQUIRE(back.segment_loadings.size() == gt.segment_loadings.size());
    for (size_t j = 0; j < gt.segment_loadings.size(); ++j)
        for (size_t k = 0; k < gt.segment_loadings[j].size(); ++k)
            CHECK(back.segment_loadings[j][k] == gt.segment_loadings[j][k]);
    CHECK(back.factors == gt.factors);
    REQUIRE(back.sizes.size() == gt.sizes.size());
    for (size_t j = 0; j < gt.sizes.size(); ++j) {
        CHECK(back.sizes[j].total == gt.sizes[j].total);
        CHECK(back.sizes[j].per_mode == gt.sizes[j].per_mode);
    }
}

TEST_CASE("report documents survive a save-load cycle unchanged") {
    ReportDocument doc;
    doc.detection.dims = {10, 10, 10};
    doc.detection.series_length = 400;
    doc.detection.ranks = {3, 3, 3};
    doc.detection.ranks_estimated = true;
    doc.detection.mu = 4.5830;
    doc.detection.depth = 4;
    doc.detection.trim = 17;
    doc.detection.bandwidth = 4;
    doc.detection.pi = 7.125;
    doc.detection.pi_coefficients = PiCoefficients{0.1, 0.2, 0.3, 0.4, 0.5};
    doc.detection.pi_source = "built-in";
    doc.detection.weight = Vector::LinSpaced(18, 0.5, 2.0);
    doc.detection.seconds = 1.75;
    ChangePointEstimate est;
    est.location = 100;
    est.detector_value = 9.875;
    est.source = {64, 160, 3};
    doc.detection.estimates.push_back(est);
    ChangePointEstimate manual;
    manual.location = 200;
    manual.detector_value = std::numeric_limits<double>::quiet_NaN();
    manual.source = {0, 0, 0};
    doc.detection.estimates.push_back(manual);

    doc.has_mode_id = true;
    doc.mode_id.zeta = 0.1785;
    doc.mode_id.scale = 0.051;
    doc.mode_id.zeta_multiplier = 3.5;
    doc.mode_id.practical_endpoints = true;
    ModeAttribution at;
    at.location = 100;
    at.endpoints = {100, 100, false, false};
    at.xi_norms = {0.5, 0.01, 0.02};
    at.modes = {0};
    doc.mode_id.attributions.push_back(at);
    ModeAttribution at2;
    at2.location = 200;
    at2.endpoints = {196, 204, false, true};
    at2.xi_norms = {0.01, 0.4, 0.3};
    at2.modes = {1, 2};
    doc.mode_id.attributions.push_back(at2);

    doc.has_mode_informed = true;
    doc.mode_informed.segment_ranks = {{3, 3, 3}, {3, 3, 3}, {2, 3, 3}};
    doc.mode_informed.truth_distances = {{0.01, 0.02, 0.03}, {0.04, 0.05, 0.06}};
    doc.total_seconds = 2.5;

    TempFile f("report.json");
    save_report(doc, f.path);
    ReportDocument back = load_report(f.path);

    CHECK(back.detection.dims == doc.detection.dims);
    CHECK(back.detection.series_length == doc.detection.series_length);
    CHECK(back.detection.ranks == doc.detection.ranks);
    CHECK(back.detection.ranks_estimated == doc.detection.ranks_estimated);
    CHECK(back.detection.mu == doc.detection.mu);
    CHECK(back.detection.depth == doc.detection.depth);
    CHECK(back.detection.trim == doc.detection.trim);
    CHECK(back.detection.bandwidth == doc.detection.bandwidth);
    CHECK(back.detection.pi == doc.detection.pi);
    CHECK(back.detection.pi_source == doc.detection.pi_source);
    CHECK(back.detection.pi_coefficients.sqrt_d == doc.detection.pi_coefficients.sqrt_d);
    CHECK(back.detection.weight == doc.detection.weight);
    CHECK(back.detection.seconds == doc.detection.seconds);
    REQUIRE(back.detection.estimates.size() == 2);
    CHECK(back.detection.estimates[0].location == 100);
    CHECK(back.detection.estimates[0].detector_value == 9.875);
    CHECK(back.detection.estimates[0].source.a == 64);
    CHECK(back.detection.estimates[0].source.b == 160);
    CHECK(std::isnan(back.detection.estimates[1].detector_value));
    CHECK(back.detection.estimates[1].source.b <= back.detection.estimates[1].source.a);

    REQUIRE(back.has_mode_id);
    CHECK(back.mode_id.zeta == doc.mode_id.zeta);
    CHECK(back.mode_id.scale == doc.mode_id.scale);
    CHECK(back.mode_id.practical_endpoints == doc.mode_id.practical_endpoints);
    REQUIRE(back.mode_id.attributions.size() == 2);
    CHECK(back.mode_id.attributions[0].modes == std::vector<Index>{0});
    CHECK(back.mode_id.attributions[1].modes == std::vector<Index>{1, 2});
    CHECK(back.mode_id.attributions[1].endpoints.upper_fallback);
    CHECK(back.mode_id.attributions[1].xi_norms == doc.mode_id.attributions[1].xi_norms);

    REQUIRE(back.has_mode_informed);
    CHECK(back.mode_informed.segment_ranks == doc.mode_informed.segment_ranks);
    CHECK(back.mode_informed.truth_distances == doc.mode_informed.truth_distances);
    CHECK(back.total_seconds == doc.total_seconds);

    // Serializing the reloaded document reproduces the same bytes.
    CHECK(report_to_json(back) == report_to_json(doc));
}

TEST_CASE("metric tables carry one row per replication") {
    GroundTruth gt;
    gt.locations = {100, 200};
    gt.mode_sets = {{0}, {1}};
    std::vector<ReplicationRecord> records;
    ReplicationRecord a;
    a.detection = evaluate_detection({100, 200}, gt, 400);
    a.mode_id = evaluate_mode_id({{0}, {1}}, gt, 3);
    a.has_mode_id = true;
    records.push_back(a);
    ReplicationRecord b;
    b.detection = evaluate_detection({90}, gt, 400);
    records.push_back(b);

    TempFile f("metrics.csv");
    save_metrics_csv(records, 2, f.path);
    std::ifstream in(f.path);
    std::vector<std::string> lines;
    for (std::string line; std::getline(in, line);) lines.push_back(line);
    REQUIRE(lines.size() == 3);
    CHECK(lines[0].rfind("replication,", 0) == 0);
    CHECK(lines[1].find("matched") == std::string::npos);
}
