#include <doctest.h>

#include <cmath>
#include <vector>

#include "tfmseg/factor.hpp"
#include "tfmseg/rng.hpp"

using namespace tfmseg;

namespace {

TensorSeries random_series(const Dims& dims, Index T, Rng& rng) {
    Matrix values(dim_product(dims), T);
    for (Index t = 0; t < T; ++t)
        for (Index i = 0; i < values.rows(); ++i) values(i, t) = rng.normal();
    return TensorSeries(dims, std::move(values));
}

Matrix random_matrix(Index rows, Index cols, Rng& rng) {
    Matrix m(rows, cols);
    for (Index j = 0; j < cols; ++j)
        for (Index i = 0; i < rows; ++i) m(i, j) = rng.normal();
    return m;
}

Matrix random_orthogonal(Index n, Rng& rng) {
    Eigen::HouseholderQR<Matrix> qr(random_matrix(n, n, rng));
    Matrix q = qr.householderQ() * Matrix::Identity(n, n);
    return q;
}

Matrix projector(const Matrix& a) {
    return a * (a.transpose() * a).inverse() * a.transpose();
}

}  // namespace

TEST_CASE("mode covariance of a single identity observation") {
    Dims dims{2, 2};
    Vector v(4);
    v << 1, 0, 0, 1;  // I_2 flattened column-major
    TensorSeries s(dims, v);
    SymMatrix cov = mode_covariance(s, 0, 0, 1);
    Matrix dense = cov.dense();
    CHECK(dense.isApprox(0.25 * Matrix::Identity(2, 2), 1e-15));
}

TEST_CASE("mode covariance of an all-zero series vanishes") {
    Dims dims{3, 4};
    TensorSeries s(dims, Matrix::Zero(12, 5));
    for (Index k = 0; k < 2; ++k) {
        Matrix dense = mode_covariance(s, k, 0, 5).dense();
        CHECK(dense.norm() == 0.0);
    }
}

TEST_CASE("mode covariance matches the direct double loop") {
    Rng rng(41, 0);
    Dims dims{3, 2, 4};
    const Index T = 7;
    TensorSeries s = random_series(dims, T, rng);
    const Index a = 2, b = 6;
    const double p = static_cast<double>(dim_product(dims));
    for (Index k = 0; k < 3; ++k) {
        Matrix direct = Matrix::Zero(dims[k], dims[k]);
        for (Index t = a; t < b; ++t) {
            Matrix u = unfold(s.at(t), k);
            direct += u * u.transpose();
        }
        direct /= static_cast<double>(b - a) * p;
        CHECK(mode_covariance(s, k, a, b).dense().isApprox(direct, 1e-12));
    }
}

TEST_CASE("mode covariance refuses masked series and empty intervals") {
    Dims dims{2, 2};
    TensorSeries s(dims, Matrix::Ones(4, 3));
    CHECK_THROWS_AS(mode_covariance(s, 0, 2, 2), Error);
    s.mask = MaskMatrix::Ones(4, 3);
    s.mask(1, 1) = 0;
    CHECK_THROWS_WITH_AS(mode_covariance(s, 0, 0, 3),
                         doctest::Contains("missing"), Error);
}

TEST_CASE("estimated loadings satisfy the scaling convention") {
    Rng rng(42, 0);
    Dims dims{5, 4, 6};
    TensorSeries s = random_series(dims, 30, rng);
    LoadingSet L = estimate_loadings(s, {2, 2, 3});
    REQUIRE(L.order() == 3);
    for (Index k = 0; k < 3; ++k) {
        Matrix gram = L.loadings[k].transpose() * L.loadings[k];
        CHECK(gram.isApprox(static_cast<double>(dims[k]) * Matrix::Identity(L.ranks[k], L.ranks[k]),
                            1e-10));
    }
}

TEST_CASE("noiseless rank-one series recovers the loading direction") {
    Rng rng(43, 0);
    const Index p = 12, T = 20;
    Vector lambda(p);
    for (Index i = 0; i < p; ++i) lambda[i] = rng.normal();
    lambda.normalize();
    Matrix values(p, T);
    for (Index t = 0; t < T; ++t) values.col(t) = lambda * rng.normal();
    TensorSeries s(Dims{p}, values);
    LoadingSet L = estimate_loadings(s, {1});
    Matrix a = L.loadings[0];
    CHECK((projector(a) - lambda * lambda.transpose()).norm() == doctest::Approx(0.0).epsilon(1e-8));
}

TEST_CASE("loading column space survives an orthogonal rotation of the data") {
    Rng rng(44, 0);
    Dims dims{6, 5};
    TensorSeries s = random_series(dims, 40, rng);
    Matrix q = random_orthogonal(dims[0], rng);
    TensorSeries rotated = s;
    for (Index t = 0; t < s.length(); ++t) {
        Tensor r = mode_product(s.at(t), q, 0);
        rotated.values.col(t) = r.data;
    }
    LoadingSet base = estimate_loadings(s, {2, 2});
    LoadingSet rot = estimate_loadings(rotated, {2, 2});
    // Rotating mode 0 rotates its loading space accordingly and leaves mode 1 alone.
    Matrix p0 = projector(base.loadings[0]);
    Matrix p0r = projector(rot.loadings[0]);
    CHECK((q * p0 * q.transpose() - p0r).norm() == doctest::Approx(0.0).epsilon(1e-9));
    CHECK((projector(base.loadings[1]) - projector(rot.loadings[1])).norm() ==
          doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("estimation is deterministic") {
    Rng rng(45, 0);
    Dims dims{5, 5, 5};
    TensorSeries s = random_series(dims, 25, rng);
    LoadingSet a = estimate_loadings(s, {2, 3, 2});
    LoadingSet b = estimate_loadings(s, {2, 3, 2});
    for (Index k = 0; k < 3; ++k) CHECK(a.loadings[k] == b.loadings[k]);
}

TEST_CASE("eigenvector sign convention pins the largest entry positive") {
    Matrix sym(3, 3);
    sym << 4, 1, 0, 1, 3, 0, 0, 0, 1;
    Matrix vecs = top_eigenvectors(sym, 3);
    for (Index j = 0; j < 3; ++j) {
        Index arg = 0;
        vecs.col(j).cwiseAbs().maxCoeff(&arg);
        CHECK(vecs(arg, j) > 0.0);
    }
    Vector ev = eigenvalues_descending(sym);
    CHECK(ev[0] >= ev[1]);
    CHECK(ev[1] >= ev[2]);
}

TEST_CASE("rank caps are ceil of dimension over three") {
    CHECK(rank_caps({10, 12, 100}) == std::vector<Index>{4, 4, 34});
    CHECK(rank_caps({4}) == std::vector<Index>{2});
}

TEST_CASE("eigenvalue ratio rule picks the largest gap") {
    Vector ev(4);
    ev << 8, 4, 0.5, 0.25;
    CHECK(rank_from_eigenvalues(ev, 2) == 2);

    Vector one(6);
    one << 100, 1, 1, 1, 1, 1;
    CHECK(rank_from_eigenvalues(one, 3) == 1);
}

TEST_CASE("eigenvalue ratio rule treats a vanished eigenvalue as infinite gap") {
    Vector ev(5);
    ev << 10, 5, 1e-18, 1e-19, 1e-20;
    // First drop to machine-precision zero wins outright, before larger
    // ratios further down could.
    CHECK(rank_from_eigenvalues(ev, 4) == 2);
}

TEST_CASE("rank estimation needs at least two observations and four cells per mode") {
    Rng rng(46, 0);
    TensorSeries tiny = random_series({4, 4}, 1, rng);
    CHECK_THROWS_AS(estimate_ranks(tiny), Error);
    TensorSeries narrow = random_series({3, 6}, 10, rng);
    CHECK_THROWS_AS(estimate_ranks(narrow), Error);
}

TEST_CASE("pseudo-factor extraction inverts an orthogonal factor model") {
    Rng rng(47, 0);
    Dims dims{6, 4};
    Dims ranks{2, 2};
    LoadingSet L;
    L.ranks = {2, 2};
    for (Index k = 0; k < 2; ++k) {
        Matrix q = random_orthogonal(dims[k], rng).leftCols(ranks[k]);
        L.loadings.push_back(std::sqrt(static_cast<double>(dims[k])) * q);
    }
    const Index T = 9;
    Matrix g(4, T), x(24, T);
    for (Index t = 0; t < T; ++t) {
        for (Index i = 0; i < 4; ++i) g(i, t) = rng.normal();
        Tensor core(ranks, g.col(t));
        Tensor obs = mode_product(mode_product(core, L.loadings[0], 0), L.loadings[1], 1);
        x.col(t) = obs.data;
    }
    TensorSeries s(dims, x);
    TensorSeries ghat = estimate_pseudo_factors(s, L);
    CHECK(ghat.values.isApprox(g, 1e-12));
}

TEST_CASE("pseudo-factor of a zero observation is zero") {
    Rng rng(48, 0);
    Dims dims{5, 4};
    LoadingSet L = estimate_loadings(random_series(dims, 12, rng), {2, 2});
    TensorSeries zero(dims, Matrix::Zero(20, 3));
    TensorSeries g = estimate_pseudo_factors(zero, L);
    CHECK(g.values.norm() == 0.0);
}

TEST_CASE("pseudo-factor extraction matches the naive nested contraction") {
    Rng rng(49, 0);
    Dims dims{3, 4, 2};
    TensorSeries s = random_series(dims, 5, rng);
    LoadingSet L = estimate_loadings(s, {2, 2, 1});
    TensorSeries g = estimate_pseudo_factors(s, L);
    const double p = static_cast<double>(dim_product(dims));
    for (Index t = 0; t < s.length(); ++t) {
        Tensor cur = s.at(t);
        for (Index k = 0; k < 3; ++k)
            cur = mode_product(cur, Matrix(L.loadings[k].transpose()), k);
        CHECK((g.values.col(t) - cur.data / p).norm() == doctest::Approx(0.0).epsilon(1e-12));
    }
}

TEST_CASE("projected covariance agrees with its definition") {
    Rng rng(50, 0);
    Dims dims{4, 3, 2};
    TensorSeries s = random_series(dims, 8, rng);
    const Index k = 1;
    Matrix proj = random_matrix(codim(dims, k), 2, rng);
    Matrix got = projected_covariance(s, k, proj, 0, s.length());
    const double pmk = static_cast<double>(codim(dims, k));
    Matrix direct = Matrix::Zero(dims[k], dims[k]);
    for (Index t = 0; t < s.length(); ++t) {
        Matrix y = unfold(s.at(t), k) * proj / pmk;
        direct += y * y.transpose();
    }
    direct /= static_cast<double>(s.length()) * static_cast<double>(dims[k]);
    CHECK(got.isApprox(direct, 1e-12));
}
