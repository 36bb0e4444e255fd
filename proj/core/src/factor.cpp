#include "tfmseg/factor.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <limits>
#include <string>

namespace tfmseg {

namespace {

void fix_signs(Matrix& vecs) {
    for (Index j = 0; j < vecs.cols(); ++j) {
        Index pivot = 0;
        double best = -1.0;
        for (Index i = 0; i < vecs.rows(); ++i) {
            double a = std::abs(vecs(i, j));
            if (a > best) {
                best = a;
                pivot = i;
            }
        }
        if (vecs(pivot, j) < 0.0) vecs.col(j) = -vecs.col(j);
    }
}

void check_ranks(const Dims& dims, const std::vector<Index>& ranks) {
    if (ranks.size() != dims.size())
        fail(ErrorCode::dimension_mismatch, "one rank per mode required");
    for (size_t k = 0; k < dims.size(); ++k)
        if (ranks[k] < 1 || ranks[k] > dims[k])
            fail(ErrorCode::bad_argument, "rank for mode " + std::to_string(k + 1) +
                                              " outside [1, " + std::to_string(dims[k]) + "]");
}

}  // namespace

Matrix top_eigenvectors(const Matrix& sym, Index r) {
    if (sym.rows() != sym.cols()) fail(ErrorCode::dimension_mismatch, "matrix is not square");
    if (r < 1 || r > sym.rows()) fail(ErrorCode::bad_argument, "eigenvector count out of range");
    Eigen::SelfAdjointEigenSolver<Matrix> solver(sym);
    if (solver.info() != Eigen::Success)
        fail(ErrorCode::degenerate_segment, "eigendecomposition failed to converge");
    const Index n = sym.rows();
    Matrix out(n, r);
    // Eigen orders eigenvalues ascending; take the top r, largest first.
    for (Index j = 0; j < r; ++j) out.col(j) = solver.eigenvectors().col(n - 1 - j);
    fix_signs(out);
    return out;
}

Vector eigenvalues_descending(const Matrix& sym) {
    if (sym.rows() != sym.cols()) fail(ErrorCode::dimension_mismatch, "matrix is not square");
    Eigen::SelfAdjointEigenSolver<Matrix> solver(sym, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success)
        fail(ErrorCode::degenerate_segment, "eigendecomposition failed to converge");
    return solver.eigenvalues().reverse();
}

SymMatrix mode_covariance(const TensorSeries& s, Index k, Index a, Index b) {
    require_complete(s, "mode covariance");
    require_interval(s, a, b);
    if (k < 0 || k >= static_cast<Index>(s.dims.size()))
        fail(ErrorCode::bad_argument, "mode index out of range");
    const Index pk = s.dims[static_cast<size_t>(k)];
    const Index cols = codim(s.dims, k);
    Matrix acc = Matrix::Zero(pk, pk);
    if (k == 0) {
        // Mode-0 unfoldings of consecutive observations are contiguous, so
        // the whole interval is one rank update.
        auto block = Eigen::Map<const Matrix>(s.values.col(a).data(), pk, cols * (b - a));
        acc.selfadjointView<Eigen::Lower>().rankUpdate(block);
    } else {
        for (Index t = a; t < b; ++t) {
            Matrix m = unfold(s.dims, s.values.col(t), k);
            acc.selfadjointView<Eigen::Lower>().rankUpdate(m);
        }
    }
    const double scale = 1.0 / (static_cast<double>(b - a) * static_cast<double>(s.cell_count()));
    acc = scale * Matrix(acc.selfadjointView<Eigen::Lower>());
    return SymMatrix::from_dense(acc);
}

Matrix preliminary_loading(const TensorSeries& s, Index k, Index r, Index a, Index b) {
    SymMatrix cov = mode_covariance(s, k, a, b);
    const double pk = static_cast<double>(s.dims[static_cast<size_t>(k)]);
    return std::sqrt(pk) * top_eigenvectors(cov.dense(), r);
}

Matrix projected_covariance(const TensorSeries& s, Index k, const Matrix& projector, Index a,
                            Index b) {
    require_complete(s, "projected covariance");
    require_interval(s, a, b);
    const Index pk = s.dims[static_cast<size_t>(k)];
    const Index pmk = codim(s.dims, k);
    if (projector.rows() != pmk)
        fail(ErrorCode::dimension_mismatch, "projection target rows do not match codimension");
    Matrix acc = Matrix::Zero(pk, pk);
    for (Index t = a; t < b; ++t) {
        Matrix y = unfold(s.dims, s.values.col(t), k) * projector;
        acc.selfadjointView<Eigen::Lower>().rankUpdate(y);
    }
    const double pmk_d = static_cast<double>(pmk);
    const double scale =
        1.0 / (pmk_d * pmk_d * static_cast<double>(b - a) * static_cast<double>(pk));
    acc = scale * Matrix(acc.selfadjointView<Eigen::Lower>());
    return acc;
}

LoadingSet estimate_loadings(const TensorSeries& s, const std::vector<Index>& ranks, Index a,
                             Index b, LoadingProvenance provenance) {
    require_complete(s, "loading estimation");
    require_interval(s, a, b);
    check_ranks(s.dims, ranks);
    const Index K = static_cast<Index>(s.dims.size());

    std::vector<Matrix> prelim(static_cast<size_t>(K));
    for (Index k = 0; k < K; ++k)
        prelim[static_cast<size_t>(k)] =
            preliminary_loading(s, k, ranks[static_cast<size_t>(k)], a, b);

    LoadingSet out;
    out.ranks = ranks;
    out.provenance = provenance;
    out.loadings.resize(static_cast<size_t>(K));
    for (Index k = 0; k < K; ++k) {
        Matrix proj = kron_excluding(prelim, k);
        Matrix cov = projected_covariance(s, k, proj, a, b);
        const double pk = static_cast<double>(s.dims[static_cast<size_t>(k)]);
        out.loadings[static_cast<size_t>(k)] =
            std::sqrt(pk) * top_eigenvectors(cov, ranks[static_cast<size_t>(k)]);
    }
    return out;
}

LoadingSet estimate_loadings(const TensorSeries& s, const std::vector<Index>& ranks) {
    return estimate_loadings(s, ranks, 0, s.length());
}

std::vector<Index> rank_caps(const Dims& dims) {
    std::vector<Index> caps(dims.size());
    for (size_t k = 0; k < dims.size(); ++k) caps[k] = (dims[k] + 2) / 3;
    return caps;
}

Index rank_from_eigenvalues(const Vector& descending, Index cap) {
    if (cap < 1 || cap + 1 > descending.size())
        fail(ErrorCode::bad_argument, "rank cap needs cap + 1 eigenvalues");
    const double floor =
        std::numeric_limits<double>::epsilon() * std::max(descending[0], 0.0);
    Index best = 1;
    double best_ratio = -1.0;
    for (Index l = 1; l <= cap; ++l) {
        if (descending[l] <= floor) {
            // Ratio diverges at the first (relative) zero; nothing later can
            // beat it.
            return l;
        }
        double ratio = descending[l - 1] / descending[l];
        if (ratio > best_ratio) {
            best_ratio = ratio;
            best = l;
        }
    }
    return best;
}

std::vector<Index> estimate_ranks(const TensorSeries& s) {
    require_complete(s, "rank estimation");
    if (s.length() < 2) fail(ErrorCode::bad_argument, "rank estimation needs at least 2 observations");
    for (Index p : s.dims)
        if (p < 4)
            fail(ErrorCode::bad_argument,
                 "rank estimation needs every mode dimension at least 4");
    const Index K = static_cast<Index>(s.dims.size());
    const std::vector<Index> caps = rank_caps(s.dims);

    std::vector<Matrix> prelim(static_cast<size_t>(K));
    for (Index k = 0; k < K; ++k)
        prelim[static_cast<size_t>(k)] =
            preliminary_loading(s, k, caps[static_cast<size_t>(k)], 0, s.length());

    std::vector<Index> ranks(static_cast<size_t>(K));
    for (Index k = 0; k < K; ++k) {
        Matrix proj = kron_excluding(prelim, k);
        Vector lam = eigenvalues_descending(projected_covariance(s, k, proj, 0, s.length()));
        ranks[static_cast<size_t>(k)] = rank_from_eigenvalues(lam, caps[static_cast<size_t>(k)]);
    }
    return ranks;
}

TensorSeries estimate_pseudo_factors(const TensorSeries& s, const LoadingSet& L) {
    require_complete(s, "pseudo-factor estimation");
    if (L.order() != static_cast<Index>(s.dims.size()))
        fail(ErrorCode::dimension_mismatch, "loading set order does not match series");
    for (size_t k = 0; k < s.dims.size(); ++k)
        if (L.loadings[k].rows() != s.dims[k])
            fail(ErrorCode::dimension_mismatch, "loading rows do not match mode dimension");

    Dims gdims(L.ranks.begin(), L.ranks.end());
    const double inv_p = 1.0 / static_cast<double>(s.cell_count());
    TensorSeries g;
    g.dims = gdims;
    g.values.resize(dim_product(gdims), s.length());
    const Index K = static_cast<Index>(s.dims.size());
    for (Index t = 0; t < s.length(); ++t) {
        Tensor x(s.dims, s.values.col(t));
        for (Index k = 0; k < K; ++k)
            x = mode_product(x, L.loadings[static_cast<size_t>(k)].transpose(), k);
        g.values.col(t) = inv_p * x.data;
    }
    return g;
}

}  // namespace tfmseg
