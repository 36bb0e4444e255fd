#pragma once

#include <Eigen/Dense>
#include <vector>

#include "tfmseg/errors.hpp"

namespace tfmseg {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;
using Dims = std::vector<Index>;

// Dense order-K tensor. Entries are stored with the first mode varying
// fastest (column-major over the multi-index), which fixes the unfolding
// column order: the columns of the mode-k unfolding enumerate the remaining
// indices with the lowest remaining mode fastest. That ordering is the one
// compatible with Kronecker products taken in descending mode order, i.e.
// mat_k(X x_1 A_1 ... x_K A_K) = A_k mat_k(X) (A_K (x) ... (x) A_{k+1} (x)
// A_{k-1} (x) ... (x) A_1)^T.
//
// Mode indices are 0-based throughout the C++ API; file formats and reports
// use 1-based modes to match the usual mathematical convention.
//
// Tensors (and every other value type in this library) are treated as
// immutable once constructed; all operations return new values, so sharing
// across threads is safe.
struct Tensor {
    Dims dims;
    Vector data;  // length prod(dims), mode-0 index fastest

    Tensor() = default;
    Tensor(Dims d, Vector v);

    static Tensor zeros(const Dims& d);

    Index order() const { return static_cast<Index>(dims.size()); }
    Index size() const { return data.size(); }
};

Index dim_product(const Dims& dims);

// Product of all dims except mode k (1 when K = 1).
Index codim(const Dims& dims, Index k);

// Mode-k unfolding: p_k x p_{-k}.
Matrix unfold(const Tensor& t, Index k);
Matrix unfold(const Dims& dims, const Vector& data, Index k);

// Inverse of unfold: rebuilds the tensor with the given dims from its mode-k
// unfolding.
Tensor fold(const Matrix& m, Index k, const Dims& dims);

// Mode-k product: replaces dims[k] by m.rows(); unfold(result, k) = m *
// unfold(t, k).
Tensor mode_product(const Tensor& t, const Matrix& m, Index k);

// Kronecker product of the matrices in the order given (first argument is
// the leftmost factor).
Matrix kron(const std::vector<Matrix>& ms);

// Kronecker product of all matrices except index k, in descending index
// order: ms[K-1] (x) ... (x) ms[k+1] (x) ms[k-1] (x) ... (x) ms[0]. Returns
// the 1x1 identity when nothing remains (K = 1).
Matrix kron_excluding(const std::vector<Matrix>& ms, Index k);

// Symmetric matrix in packed form: the lower triangle, including the
// diagonal, stored column by column. The packed vector is exactly vech of
// the matrix.
struct SymMatrix {
    Index n = 0;
    Vector packed;  // length n(n+1)/2

    SymMatrix() = default;
    SymMatrix(Index order, Vector p);

    // Packs the lower triangle of a square matrix (entries above the
    // diagonal are ignored).
    static SymMatrix from_dense(const Matrix& m);

    Matrix dense() const;

    double operator()(Index i, Index j) const;
};

// Half-vectorization; for a SymMatrix this is its packed storage.
Vector vech(const SymMatrix& s);
Vector vech(const Matrix& m);

// Packs the lower triangle of the symmetric matrix g * g^T style products
// directly into out[0 .. n(n+1)/2).
void pack_lower(const Matrix& m, double* out);

}  // namespace tfmseg
