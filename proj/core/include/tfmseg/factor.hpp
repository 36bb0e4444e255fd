#pragma once

#include "tfmseg/series.hpp"

namespace tfmseg {

enum class LoadingProvenance { global, segment, mode_informed };

// Per-mode loading matrices with their ranks. Columns are scaled
// eigenvectors, so loadings[k].transpose() * loadings[k] = p_k * I exactly.
// Column spaces, not individual columns, are the identified objects;
// comparisons should go through projection matrices (see loading_distance).
struct LoadingSet {
    std::vector<Matrix> loadings;  // loadings[k]: p_k x ranks[k]
    std::vector<Index> ranks;
    LoadingProvenance provenance = LoadingProvenance::global;
    Index segment = -1;  // 0-based segment index when provenance == segment

    Index order() const { return static_cast<Index>(loadings.size()); }
};

// Eigenvectors of a symmetric matrix by descending eigenvalue, with a
// deterministic sign: each column is flipped so that its entry of largest
// absolute value (lowest index on ties) is positive.
Matrix top_eigenvectors(const Matrix& sym, Index r);

// All eigenvalues of a symmetric matrix, descending.
Vector eigenvalues_descending(const Matrix& sym);

// Scaled mode-k sample covariance over times (a, b]:
//   (1 / ((b - a) p)) sum_t mat_k(X_t) mat_k(X_t)^T,  p = prod of all dims.
SymMatrix mode_covariance(const TensorSeries& s, Index k, Index a, Index b);

// First-step loading estimate on (a, b]: sqrt(p_k) times the top-r
// eigenvectors of the mode-k sample covariance.
Matrix preliminary_loading(const TensorSeries& s, Index k, Index r, Index a, Index b);

// Covariance of the projected series Y_{k,t} = p_{-k}^{-1} mat_k(X_t) P_k,
// scaled by 1 / ((b - a) p_k). P_k plays the role of a p_{-k} x c projection
// target (typically the Kronecker product of the other modes' first-step
// loadings, in descending mode order).
Matrix projected_covariance(const TensorSeries& s, Index k, const Matrix& projector, Index a,
                            Index b);

// Two-step loading estimator on (a, b] (full sample by default): first-step
// eigenvectors per mode, then eigenvectors of the projected covariance.
LoadingSet estimate_loadings(const TensorSeries& s, const std::vector<Index>& ranks, Index a,
                             Index b, LoadingProvenance provenance = LoadingProvenance::global);
LoadingSet estimate_loadings(const TensorSeries& s, const std::vector<Index>& ranks);

// Upper bound on the candidate factor numbers: ceil(p_k / 3) per mode.
std::vector<Index> rank_caps(const Dims& dims);

// Ratio rule behind estimate_ranks: argmax_{1<=l<=cap} lambda_l /
// lambda_{l+1} over eigenvalues sorted descending, first maximizer on ties.
// An eigenvalue at machine precision relative to lambda_1 makes the ratio
// infinite, so the first such position wins outright.
Index rank_from_eigenvalues(const Vector& descending, Index cap);

// Eigenvalue-ratio estimate of the factor numbers: runs the two-step
// estimator with every rank capped at ceil(p_k / 3) and applies
// rank_from_eigenvalues to the projected covariance spectrum of each mode.
std::vector<Index> estimate_ranks(const TensorSeries& s);

// Pseudo-factor series: G_t = p^{-1} X_t x_1 L_1^T ... x_K L_K^T.
TensorSeries estimate_pseudo_factors(const TensorSeries& s, const LoadingSet& L);

}  // namespace tfmseg
