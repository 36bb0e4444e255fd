#include <doctest.h>

#include <cmath>
#include <vector>

#include "tfmseg/modeid.hpp"
#include "tfmseg/rng.hpp"
#include "tfmseg/sim.hpp"

using namespace tfmseg;

namespace {

Matrix random_matrix(Index rows, Index cols, Rng& rng) {
    Matrix m(rows, cols);
    for (Index j = 0; j < cols; ++j)
        for (Index i = 0; i < rows; ++i) m(i, j) = rng.normal();
    return m;
}

Matrix random_orthogonal(Index n, Rng& rng) {
    Eigen::HouseholderQR<Matrix> qr(random_matrix(n, n, rng));
    return qr.householderQ() * Matrix::Identity(n, n);
}

std::vector<Interval> finer_for_16() {
    return generate_seeded_intervals(16, 2.0, 1).finer;
}

}  // namespace

TEST_CASE("adjusted endpoints bracket an estimate with finer intervals") {
    auto pairs = adjusted_endpoints({9}, finer_for_16(), 16, false);
    REQUIRE(pairs.size() == 1);
    CHECK(pairs[0].lower == 4);
    CHECK(pairs[0].upper == 14);
    CHECK(!pairs[0].lower_fallback);
    CHECK(!pairs[0].upper_fallback);
}

TEST_CASE("practical endpoints collapse to the estimate") {
    auto pairs = adjusted_endpoints({9}, finer_for_16(), 16, true);
    CHECK(pairs[0].lower == 9);
    CHECK(pairs[0].upper == 9);
}

TEST_CASE("endpoint conditions are inclusive below and strict above") {
    // 8 is itself an interval endpoint: (4,8] qualifies for the lower side
    // (b <= location), while (8,12] starts at a = 8 which is not > 8.
    auto pairs = adjusted_endpoints({8}, finer_for_16(), 16, false);
    CHECK(pairs[0].lower == 4);
    CHECK(pairs[0].upper == 14);
}

TEST_CASE("boundary estimates fall back to themselves") {
    auto pairs = adjusted_endpoints({1}, finer_for_16(), 16, false);
    CHECK(pairs[0].lower == 1);
    CHECK(pairs[0].lower_fallback);
    CHECK(pairs[0].upper == 6);
    auto last = adjusted_endpoints({15}, finer_for_16(), 16, false);
    CHECK(last[0].upper == 15);
    CHECK(last[0].upper_fallback);
    CHECK(last[0].lower == 10);
}

TEST_CASE("colliding brackets of close estimates degrade to the estimates") {
    auto pairs = adjusted_endpoints({5, 6}, finer_for_16(), 16, false);
    REQUIRE(pairs.size() == 2);
    // The bracket around 6 would reach below the bracket above 5; both sides
    // of the squeeze revert to the raw locations.
    CHECK(pairs[1].lower == 6);
    CHECK(pairs[1].lower_fallback);
    CHECK(pairs[0].upper == 5);
    CHECK(pairs[0].upper_fallback);
}

TEST_CASE("endpoints reject unsorted or out-of-range locations") {
    CHECK_THROWS_AS(adjusted_endpoints({0}, finer_for_16(), 16, true), Error);
    CHECK_THROWS_AS(adjusted_endpoints({16}, finer_for_16(), 16, true), Error);
    CHECK_THROWS_AS(adjusted_endpoints({7, 7}, finer_for_16(), 16, true), Error);
}

TEST_CASE("attribution threshold formula") {
    CHECK(threshold_zeta(400, 1000) == doctest::Approx(0.1785).epsilon(1e-12));
    CHECK(threshold_zeta(400, 1000, 2.0) == doctest::Approx(0.102).epsilon(1e-12));
    CHECK(threshold_zeta(1600, 1000) < threshold_zeta(400, 1000));
    CHECK_THROWS_AS(threshold_zeta(0, 10), Error);
}

TEST_CASE("covariance contrast of an anisotropic change") {
    Matrix prev = Matrix::Identity(2, 2);
    Matrix next(2, 2);
    next << 3, 0, 0, 1;
    Matrix xi = xi_from_covariances(prev, next);
    Matrix want(2, 2);
    want << 0.25, 0, 0, -0.25;
    CHECK(xi.isApprox(want, 1e-14));
    CHECK(operator_norm_sym(xi) == doctest::Approx(0.25));
}

TEST_CASE("covariance contrast vanishes for scalar-multiple changes") {
    Rng rng(70, 0);
    Matrix half = random_matrix(3, 3, rng);
    Matrix prev = half * half.transpose() + Matrix::Identity(3, 3);
    for (double c2 : {0.04, 1.0, 9.0, 1e6}) {
        Matrix xi = xi_from_covariances(prev, c2 * prev);
        CHECK(operator_norm_sym(xi) <= 1e-12);
    }
}

TEST_CASE("covariance contrast is trace-free and scale-invariant") {
    Rng rng(71, 0);
    for (int rep = 0; rep < 10; ++rep) {
        Matrix a = random_matrix(3, 3, rng), b = random_matrix(3, 3, rng);
        Matrix prev = a * a.transpose() + 0.1 * Matrix::Identity(3, 3);
        Matrix next = b * b.transpose() + 0.1 * Matrix::Identity(3, 3);
        Matrix xi = xi_from_covariances(prev, next);
        CHECK(std::abs(xi.trace()) <= 1e-13);
        Matrix scaled = xi_from_covariances(3.7 * prev, 0.2 * next);
        CHECK(xi.isApprox(scaled, 1e-10));
    }
}

TEST_CASE("covariance contrast rejects nonpositive traces") {
    CHECK_THROWS_AS(xi_from_covariances(Matrix::Zero(2, 2), Matrix::Identity(2, 2)), Error);
    CHECK_THROWS_AS(xi_from_covariances(Matrix::Identity(2, 2), -Matrix::Identity(2, 2)), Error);
}

TEST_CASE("segment contrast through the summary statistics") {
    // Second segment repeats the first scaled by 2: its mode covariances are
    // exactly four times the first segment's, so the trace-normalized
    // contrast is numerically zero.
    Rng rng(72, 0);
    const Index T = 8;
    Matrix g(4, T);
    for (Index t = 0; t < 4; ++t)
        for (Index i = 0; i < 4; ++i) g(i, t) = rng.normal();
    for (Index t = 4; t < T; ++t) g.col(t) = 2.0 * g.col(t - 4);
    PseudoFactorStats stats = pseudo_factor_stats(TensorSeries(Dims{2, 2}, g));
    for (Index k = 0; k < 2; ++k) {
        XiResult r = xi_statistic(stats, k, 0, 4, 4, 8);
        CHECK(r.norm <= 1e-12);
    }
}

TEST_CASE("identify_modes flags the changed mode of a synthetic factor series") {
    Rng rng(73, 0);
    const Index T = 400;
    Matrix g(4, T);
    for (Index t = 0; t < T; ++t) {
        // Mode-0 coordinate variances shift (1,1) -> (9,1) at mid-sample.
        const double s = t >= T / 2 ? 3.0 : 1.0;
        g(0, t) = s * rng.normal();
        g(1, t) = rng.normal();
        g(2, t) = s * rng.normal();
        g(3, t) = rng.normal();
    }
    PseudoFactorStats stats = pseudo_factor_stats(TensorSeries(Dims{2, 2}, g));
    SeededIntervalSet intervals = generate_seeded_intervals(T);
    ModeIdConfig cfg;
    ModeIdResult res = identify_modes(stats, {T / 2}, intervals, 1000, cfg);
    REQUIRE(res.attributions.size() == 1);
    CHECK(res.zeta == doctest::Approx(threshold_zeta(T, 1000, cfg.zeta_multiplier)));
    CHECK(res.attributions[0].modes == std::vector<Index>{0});
    REQUIRE(res.attributions[0].xi_norms.size() == 2);
    CHECK(res.attributions[0].xi_norms[0] > res.zeta);
    CHECK(res.attributions[0].xi_norms[1] <= res.zeta);
}

TEST_CASE("identify_modes with no locations returns thresholds only") {
    Rng rng(74, 0);
    Matrix g(1, 50);
    for (Index t = 0; t < 50; ++t) g(0, t) = rng.normal();
    PseudoFactorStats stats = pseudo_factor_stats(TensorSeries(Dims{1}, g));
    ModeIdResult res = identify_modes(stats, {}, generate_seeded_intervals(50), 64, ModeIdConfig{});
    CHECK(res.attributions.empty());
    CHECK(res.scale == doctest::Approx(1.0 / std::sqrt(50.0) + 1.0 / 64.0));
}

TEST_CASE("loading distance separates orthogonal spans and ignores rotations") {
    Matrix e1(2, 1), e2(2, 1);
    e1 << 1, 0;
    e2 << 0, 1;
    CHECK(loading_distance(e1, e2) == doctest::Approx(1.0));
    CHECK(loading_distance(e1, e1) == doctest::Approx(0.0));

    Rng rng(75, 0);
    Matrix a = random_matrix(8, 3, rng);
    Matrix q = random_orthogonal(3, rng);
    // Near zero the sine-based distance resolves only to sqrt(machine eps).
    CHECK(loading_distance(a, a * q) <= 1e-7);
}

TEST_CASE("loading distance matches the projector-difference norm") {
    Rng rng(76, 0);
    for (int rep = 0; rep < 10; ++rep) {
        Matrix a = random_matrix(7, 2, rng);
        Matrix b = random_matrix(7, 3, rng);
        Matrix pa = a * (a.transpose() * a).inverse() * a.transpose();
        Matrix pb = b * (b.transpose() * b).inverse() * b.transpose();
        Eigen::JacobiSVD<Matrix> svd(pa - pb);
        const double want = svd.singularValues()[0];
        CHECK(loading_distance(a, b) == doctest::Approx(want).epsilon(1e-9));
        CHECK(loading_distance(b, a) == doctest::Approx(want).epsilon(1e-9));
        CHECK(loading_distance(a, b) <= 1.0 + 1e-12);
    }
}

TEST_CASE("loading distance is invariant to invertible column mixes") {
    Rng rng(77, 0);
    Matrix a = random_matrix(9, 3, rng);
    Matrix b = random_matrix(9, 3, rng);
    Matrix mix = random_matrix(3, 3, rng) + 3.0 * Matrix::Identity(3, 3);
    CHECK(loading_distance(a * mix, b) == doctest::Approx(loading_distance(a, b)).epsilon(1e-9));
}

TEST_CASE("loading distance refuses rank-deficient arguments") {
    Matrix a(3, 2);
    a << 1, 2, 2, 4, 3, 6;
    CHECK_THROWS_AS(loading_distance(a, Matrix::Identity(3, 2)), Error);
}

TEST_CASE("column space basis compresses rank-deficient matrices") {
    Matrix a(3, 3);
    a << 1, 2, 3, 0, 1, 1, 1, 0, 1;  // third column = first + second
    Matrix basis = column_space_basis(a);
    CHECK(basis.cols() == 2);
    CHECK((basis.transpose() * basis).isApprox(Matrix::Identity(2, 2), 1e-12));
    CHECK(loading_distance(basis, a.leftCols(2)) <= 1e-7);
    CHECK_THROWS_AS(column_space_basis(Matrix::Zero(3, 2)), Error);
}

TEST_CASE("mode-informed estimation with no changes equals the global fit") {
    SimScenario sc;
    sc.scenario = Scenario::s0;
    sc.length = 120;
    sc.dims = {8, 8, 8};
    sc.ranks = {2, 2, 2};
    sc.seed = 7;
    Realisation real = generate(sc);
    std::vector<Index> ranks{2, 2, 2};
    auto pooled = mode_informed_loadings(real.series, {}, {}, ranks);
    REQUIRE(pooled.size() == 1);
    LoadingSet global = estimate_loadings(real.series, ranks);
    for (Index k = 0; k < 3; ++k) CHECK(pooled[0].loadings[k] == global.loadings[k]);
    CHECK(pooled[0].provenance == LoadingProvenance::mode_informed);
}

TEST_CASE("mode-informed estimation pools the unchanged modes across segments") {
    SimScenario sc;
    sc.scenario = Scenario::s3;
    sc.length = 240;
    sc.dims = {10, 10, 10};
    sc.seed = 11;
    Realisation real = generate(sc);
    const Index theta = real.truth.locations[0];
    auto sets = mode_informed_loadings(real.series, {theta}, {{0}}, {3, 3, 3});
    REQUIRE(sets.size() == 2);
    // Modes 1 and 2 share one pooled estimate; mode 0 is fit per segment.
    CHECK(sets[0].loadings[1] == sets[1].loadings[1]);
    CHECK(sets[0].loadings[2] == sets[1].loadings[2]);
    CHECK(sets[0].loadings[0] != sets[1].loadings[0]);
    for (const auto& L : sets) {
        CHECK(L.provenance == LoadingProvenance::mode_informed);
        for (Index k = 0; k < 3; ++k) {
            Matrix gram = L.loadings[k].transpose() * L.loadings[k];
            CHECK(gram.isApprox(10.0 * Matrix::Identity(gram.rows(), gram.cols()), 1e-9));
        }
    }
}

TEST_CASE("a mode-unidentifiable change does not break any pooling run") {
    SimScenario sc;
    sc.scenario = Scenario::s0;
    sc.length = 200;
    sc.dims = {8, 8, 8};
    sc.ranks = {2, 2, 2};
    sc.seed = 13;
    Realisation real = generate(sc);
    // A change attributed to no mode at all: every mode pools across it.
    auto sets = mode_informed_loadings(real.series, {100}, {{}}, {2, 2, 2});
    REQUIRE(sets.size() == 2);
    for (Index k = 0; k < 3; ++k) CHECK(sets[0].loadings[k] == sets[1].loadings[k]);
}

TEST_CASE("mode-informed estimation rejects segments too short to decompose") {
    SimScenario sc;
    sc.scenario = Scenario::s0;
    sc.length = 40;
    sc.dims = {6, 6, 6};
    sc.ranks = {2, 2, 2};
    sc.seed = 17;
    Realisation real = generate(sc);
    CHECK_THROWS_AS(mode_informed_loadings(real.series, {39}, {{0, 1, 2}}, {2, 2, 2}), Error);
}
