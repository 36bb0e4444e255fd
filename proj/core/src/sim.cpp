#include "tfmseg/sim.hpp"

#include <cmath>
#include <limits>
#include <utility>

#include "tfmseg/errors.hpp"
#include "tfmseg/rng.hpp"

namespace tfmseg {

const char* scenario_name(Scenario s) {
    switch (s) {
        case Scenario::s0: return "S0";
        case Scenario::s1: return "S1";
        case Scenario::s2: return "S2";
        case Scenario::s3: return "S3";
    }
    fail(ErrorCode::bad_argument, "unknown scenario id");
}

Scenario parse_scenario(const std::string& name) {
    if (name == "S0" || name == "s0") return Scenario::s0;
    if (name == "S1" || name == "s1") return Scenario::s1;
    if (name == "S2" || name == "s2") return Scenario::s2;
    if (name == "S3" || name == "s3") return Scenario::s3;
    fail(ErrorCode::config_error, "unknown scenario '" + name + "', expected S0..S3");
}

const char* spacing_name(Spacing s) {
    return s == Spacing::equal ? "equal" : "unequal";
}

Spacing parse_spacing(const std::string& name) {
    if (name == "equal") return Spacing::equal;
    if (name == "unequal") return Spacing::unequal;
    fail(ErrorCode::config_error, "unknown spacing '" + name + "', expected equal or unequal");
}

std::vector<Index> template_locations(Scenario scenario, Spacing spacing, Index length) {
    switch (scenario) {
        case Scenario::s0:
            return {};
        case Scenario::s3:
            return {length / 2};
        case Scenario::s1:
        case Scenario::s2:
            if (spacing == Spacing::equal) return {length / 4, length / 2, 3 * length / 4};
            return {length / 4, length / 2, 5 * length / 8};
    }
    fail(ErrorCode::bad_argument, "unknown scenario id");
}

namespace {

void validate_scenario(const SimScenario& sc) {
    if (sc.length < 2) fail(ErrorCode::config_error, "series length must be at least 2");
    if (sc.dims.empty()) fail(ErrorCode::config_error, "scenario needs at least one mode");
    if (sc.ranks.size() != sc.dims.size())
        fail(ErrorCode::config_error, "ranks and dims must have the same number of modes");
    for (std::size_t k = 0; k < sc.dims.size(); ++k) {
        if (sc.dims[k] < 1) fail(ErrorCode::config_error, "tensor dimensions must be positive");
        if (sc.ranks[k] < 1 || sc.ranks[k] > sc.dims[k])
            fail(ErrorCode::config_error, "ranks must lie in [1, p_k]");
    }
    if (!(sc.rho >= 0.0 && sc.rho < 1.0))
        fail(ErrorCode::config_error, "factor autocorrelation must lie in [0, 1)");
    if (sc.scenario != Scenario::s0) {
        if (sc.dims.size() != 3 || sc.ranks != Dims{3, 3, 3})
            fail(ErrorCode::config_error,
                 "scenarios S1-S3 are defined for order-3 tensors with ranks (3,3,3)");
    }
}

// Per-change transforms and the identifiable mode sets for each scenario.
// Identity transforms are left implicit until materialised below.
void build_transforms(const SimScenario& sc, Rng& rng, Index q,
                      std::vector<std::vector<Matrix>>& transforms,
                      std::vector<std::vector<Index>>& mode_sets) {
    const Index K = static_cast<Index>(sc.dims.size());
    transforms.assign(static_cast<std::size_t>(q), {});
    mode_sets.assign(static_cast<std::size_t>(q), {});
    for (Index j = 0; j < q; ++j) {
        transforms[j].resize(static_cast<std::size_t>(K));
        for (Index k = 0; k < K; ++k)
            transforms[j][k] = Matrix::Identity(sc.ranks[k], sc.ranks[k]);
    }
    if (sc.scenario == Scenario::s0) return;

    Matrix lower_tri(3, 3);
    lower_tri << 0.5, 0.0, 0.0,
                 0.0, 1.0, 0.0,
                 0.0, 0.0, 1.5;
    Matrix rank_two = Matrix::Zero(3, 3);
    rank_two(0, 0) = 1.0;
    rank_two(1, 1) = 1.0;

    if (sc.scenario == Scenario::s3) {
        transforms[0][0] = rank_two;
        mode_sets[0] = {0};
        return;
    }

    lower_tri(1, 0) = rng.normal();
    lower_tri(2, 0) = rng.normal();
    lower_tri(2, 1) = rng.normal();
    Matrix dense(3, 3);
    const double sd = std::sqrt(1.0 / 3.0);
    for (Index c = 0; c < 3; ++c)
        for (Index r = 0; r < 3; ++r) dense(r, c) = sd * rng.normal();

    transforms[0][0] = lower_tri;
    transforms[1][1] = rank_two;
    transforms[2][2] = dense;
    mode_sets[0] = {0};
    mode_sets[1] = {1};
    mode_sets[2] = {2};

    if (sc.scenario == Scenario::s2) {
        transforms[0][2] = 3.0 * Matrix::Identity(3, 3);
        Matrix shrink = Matrix::Zero(3, 3);
        shrink(0, 0) = 1.0;
        shrink(1, 1) = 0.6;
        shrink(2, 2) = 0.2;
        transforms[2][1] = shrink;
        mode_sets[2] = {1, 2};
    }
}

std::vector<Matrix> cumulative_transforms(const GroundTruth& gt, Index segment) {
    const Index K = static_cast<Index>(gt.base_loadings.size());
    std::vector<Matrix> cum(static_cast<std::size_t>(K));
    for (Index k = 0; k < K; ++k) {
        const Index rk = gt.base_loadings[k].cols();
        cum[k] = Matrix::Identity(rk, rk);
    }
    for (Index j = 0; j < segment; ++j)
        for (Index k = 0; k < K; ++k) cum[k] = cum[k] * gt.transforms[j][k];
    return cum;
}

}  // namespace

Realisation generate(const SimScenario& sc) {
    validate_scenario(sc);
    const Index K = static_cast<Index>(sc.dims.size());
    const Index T = sc.length;
    const Index p = dim_product(sc.dims);
    const Index r = dim_product(sc.ranks);

    std::vector<Index> locations = template_locations(sc.scenario, sc.spacing, T);
    for (std::size_t j = 0; j < locations.size(); ++j) {
        const Index prev = j == 0 ? 0 : locations[j - 1];
        if (locations[j] <= prev || locations[j] >= T)
            fail(ErrorCode::config_error, "series too short for the scenario's change locations");
    }
    const Index q = static_cast<Index>(locations.size());

    Rng rng(sc.seed, sc.stream);

    GroundTruth gt;
    gt.locations = locations;
    gt.base_loadings.resize(static_cast<std::size_t>(K));
    for (Index k = 0; k < K; ++k) {
        Matrix lam(sc.dims[k], sc.ranks[k]);
        for (Index c = 0; c < lam.cols(); ++c)
            for (Index i = 0; i < lam.rows(); ++i) lam(i, c) = rng.uniform(-1.0, 1.0);
        gt.base_loadings[k] = std::move(lam);
    }

    build_transforms(sc, rng, q, gt.transforms, gt.mode_sets);

    gt.segment_loadings.resize(static_cast<std::size_t>(q) + 1);
    gt.segment_loadings[0] = gt.base_loadings;
    for (Index j = 0; j < q; ++j) {
        gt.segment_loadings[j + 1].resize(static_cast<std::size_t>(K));
        for (Index k = 0; k < K; ++k)
            gt.segment_loadings[j + 1][k] = gt.segment_loadings[j][k] * gt.transforms[j][k];
    }

    gt.factors.resize(r, T);
    Vector f(r);
    for (Index i = 0; i < r; ++i) f(i) = rng.normal();
    const double innov = std::sqrt(1.0 - sc.rho * sc.rho);
    auto advance = [&] {
        for (Index i = 0; i < r; ++i) f(i) = sc.rho * f(i) + innov * rng.normal();
    };
    for (int s = 0; s < 100; ++s) advance();
    for (Index t = 0; t < T; ++t) {
        advance();
        gt.factors.col(t) = f;
    }

    Matrix values(p, T);
    std::vector<Index> bounds;
    bounds.push_back(0);
    bounds.insert(bounds.end(), locations.begin(), locations.end());
    bounds.push_back(T);
    for (Index j = 0; j <= q; ++j) {
        std::vector<Matrix> descending(static_cast<std::size_t>(K));
        for (Index k = 0; k < K; ++k)
            descending[k] = gt.segment_loadings[j][K - 1 - k];
        const Matrix big = kron(descending);
        const Index a = bounds[j];
        const Index len = bounds[j + 1] - a;
        values.middleCols(a, len).noalias() = big * gt.factors.middleCols(a, len);
    }
    if (sc.store_common) gt.common = values;

    for (Index t = 0; t < T; ++t)
        for (Index i = 0; i < p; ++i) values(i, t) += rng.normal();

    TensorSeries series;
    series.dims = sc.dims;
    series.values = std::move(values);
    if (sc.missing) {
        series.mask = MaskMatrix::Ones(p, T);
        const Index t_cut = T / 2;
        const double nan = std::numeric_limits<double>::quiet_NaN();
        for (Index i = 0; i < p; ++i) {
            bool tail_cell = true;
            Index rem = i;
            for (Index k = 0; k < K; ++k) {
                const Index ik = rem % sc.dims[k];
                rem /= sc.dims[k];
                if (ik < sc.dims[k] / 2) {
                    tail_cell = false;
                    break;
                }
            }
            if (!tail_cell) continue;
            for (Index t = t_cut; t < T; ++t) {
                series.mask(i, t) = 0;
                series.values(i, t) = nan;
            }
        }
    }

    gt.sizes.reserve(static_cast<std::size_t>(q));
    for (Index j = 0; j < q; ++j) gt.sizes.push_back(size_of_change(gt, j));

    return Realisation{std::move(series), std::move(gt)};
}

Matrix population_mode_covariance(const GroundTruth& gt, Index segment, Index k) {
    const Index K = static_cast<Index>(gt.base_loadings.size());
    if (segment < 0 || segment >= gt.segment_count())
        fail(ErrorCode::bad_argument, "segment index out of range");
    if (k < 0 || k >= K) fail(ErrorCode::bad_argument, "mode index out of range");
    const std::vector<Matrix> cum = cumulative_transforms(gt, segment);
    double scale = 1.0;
    for (Index l = 0; l < K; ++l)
        if (l != k) scale *= cum[l].squaredNorm();
    return scale * cum[k] * cum[k].transpose();
}

ChangeSize size_of_change(const GroundTruth& gt, Index j) {
    const Index K = static_cast<Index>(gt.base_loadings.size());
    if (j < 0 || j >= static_cast<Index>(gt.locations.size()))
        fail(ErrorCode::bad_argument, "change index out of range");
    ChangeSize out;
    out.per_mode.resize(static_cast<std::size_t>(K));
    double sum_sq = 0.0;
    for (Index k = 0; k < K; ++k) {
        const Matrix before = population_mode_covariance(gt, j, k);
        const Matrix after = population_mode_covariance(gt, j + 1, k);
        const double w = (after - before).norm();
        out.per_mode[static_cast<std::size_t>(k)] = w;
        sum_sq += w * w;
    }
    out.total = std::sqrt(sum_sq);
    return out;
}

std::vector<Index> identifiable_modes(const GroundTruth& gt, Index j, double tol) {
    const Index K = static_cast<Index>(gt.base_loadings.size());
    if (j < 0 || j >= static_cast<Index>(gt.locations.size()))
        fail(ErrorCode::bad_argument, "change index out of range");
    std::vector<Index> modes;
    for (Index k = 0; k < K; ++k) {
        const Matrix before = population_mode_covariance(gt, j, k);
        const Matrix after = population_mode_covariance(gt, j + 1, k);
        const double tb = before.trace();
        const double ta = after.trace();
        if (tb <= 0.0 || ta <= 0.0)
            fail(ErrorCode::degenerate_segment, "population covariance has nonpositive trace");
        const Matrix xi = after / ta - before / tb;
        Eigen::SelfAdjointEigenSolver<Matrix> es(xi, Eigen::EigenvaluesOnly);
        const double norm =
            std::max(std::abs(es.eigenvalues().minCoeff()), std::abs(es.eigenvalues().maxCoeff()));
        if (norm > tol) modes.push_back(k);
    }
    return modes;
}

}  // namespace tfmseg
