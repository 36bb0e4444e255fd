#include "tfmseg/tensor.hpp"

#include <numeric>
#include <string>

namespace tfmseg {

Tensor::Tensor(Dims d, Vector v) : dims(std::move(d)), data(std::move(v)) {
    if (dims.empty()) fail(ErrorCode::bad_argument, "tensor must have at least one mode");
    for (Index p : dims)
        if (p <= 0) fail(ErrorCode::bad_argument, "tensor dimensions must be positive");
    if (data.size() != dim_product(dims))
        fail(ErrorCode::dimension_mismatch,
             "tensor data length " + std::to_string(data.size()) + " does not match dims product " +
                 std::to_string(dim_product(dims)));
}

Tensor Tensor::zeros(const Dims& d) {
    return Tensor(d, Vector::Zero(dim_product(d)));
}

Index dim_product(const Dims& dims) {
    Index n = 1;
    for (Index p : dims) n *= p;
    return n;
}

Index codim(const Dims& dims, Index k) {
    Index n = 1;
    for (Index l = 0; l < static_cast<Index>(dims.size()); ++l)
        if (l != k) n *= dims[l];
    return n;
}

namespace {

Index mode_stride(const Dims& dims, Index k) {
    Index s = 1;
    for (Index l = 0; l < k; ++l) s *= dims[l];
    return s;
}

void check_mode(const Dims& dims, Index k) {
    if (k < 0 || k >= static_cast<Index>(dims.size()))
        fail(ErrorCode::bad_argument, "mode index " + std::to_string(k) + " out of range for order " +
                                          std::to_string(dims.size()) + " tensor");
}

}  // namespace

Matrix unfold(const Dims& dims, const Vector& data, Index k) {
    check_mode(dims, k);
    if (data.size() != dim_product(dims))
        fail(ErrorCode::dimension_mismatch, "data length does not match dims");
    const Index pk = dims[k];
    const Index cols = codim(dims, k);
    if (k == 0) {
        // Mode 0 varies fastest, so the storage already is the unfolding.
        return Eigen::Map<const Matrix>(data.data(), pk, cols);
    }
    const Index stride = mode_stride(dims, k);
    const Index outer = data.size() / (stride * pk);
    Matrix m(pk, cols);
    for (Index o = 0; o < outer; ++o)
        for (Index r = 0; r < pk; ++r)
            m.block(r, o * stride, 1, stride) =
                data.segment(o * stride * pk + r * stride, stride).transpose();
    return m;
}

Matrix unfold(const Tensor& t, Index k) {
    return unfold(t.dims, t.data, k);
}

Tensor fold(const Matrix& m, Index k, const Dims& dims) {
    check_mode(dims, k);
    if (m.rows() != dims[k] || m.cols() != codim(dims, k))
        fail(ErrorCode::dimension_mismatch, "unfolding shape does not match target dims");
    if (k == 0) {
        Vector v = Eigen::Map<const Vector>(m.data(), m.size());
        return Tensor(dims, std::move(v));
    }
    const Index pk = dims[k];
    const Index stride = mode_stride(dims, k);
    const Index outer = m.size() / (stride * pk);
    Vector v(m.size());
    for (Index o = 0; o < outer; ++o)
        for (Index r = 0; r < pk; ++r)
            v.segment(o * stride * pk + r * stride, stride) =
                m.block(r, o * stride, 1, stride).transpose();
    return Tensor(dims, std::move(v));
}

Tensor mode_product(const Tensor& t, const Matrix& m, Index k) {
    check_mode(t.dims, k);
    if (m.cols() != t.dims[k])
        fail(ErrorCode::dimension_mismatch, "matrix columns do not match mode dimension");
    Dims out_dims = t.dims;
    out_dims[k] = m.rows();
    Matrix prod = m * unfold(t, k);
    return fold(prod, k, out_dims);
}

namespace {

Matrix kron_pair(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Index j = 0; j < a.cols(); ++j)
        for (Index i = 0; i < a.rows(); ++i)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

}  // namespace

Matrix kron(const std::vector<Matrix>& ms) {
    Matrix out = Matrix::Ones(1, 1);
    for (const Matrix& m : ms) out = kron_pair(out, m);
    return out;
}

Matrix kron_excluding(const std::vector<Matrix>& ms, Index k) {
    std::vector<Matrix> rest;
    for (Index l = static_cast<Index>(ms.size()) - 1; l >= 0; --l)
        if (l != k) rest.push_back(ms[static_cast<size_t>(l)]);
    return kron(rest);
}

SymMatrix::SymMatrix(Index order, Vector p) : n(order), packed(std::move(p)) {
    if (n < 0 || packed.size() != n * (n + 1) / 2)
        fail(ErrorCode::dimension_mismatch, "packed length does not match matrix order");
}

SymMatrix SymMatrix::from_dense(const Matrix& m) {
    if (m.rows() != m.cols()) fail(ErrorCode::dimension_mismatch, "matrix is not square");
    SymMatrix s;
    s.n = m.rows();
    s.packed.resize(s.n * (s.n + 1) / 2);
    pack_lower(m, s.packed.data());
    return s;
}

Matrix SymMatrix::dense() const {
    Matrix m(n, n);
    Index idx = 0;
    for (Index j = 0; j < n; ++j)
        for (Index i = j; i < n; ++i) {
            m(i, j) = packed[idx];
            m(j, i) = packed[idx];
            ++idx;
        }
    return m;
}

double SymMatrix::operator()(Index i, Index j) const {
    if (i < 0 || j < 0 || i >= n || j >= n) fail(ErrorCode::bad_argument, "index out of range");
    if (i < j) std::swap(i, j);
    return packed[j * n - j * (j - 1) / 2 + (i - j)];
}

Vector vech(const SymMatrix& s) {
    return s.packed;
}

Vector vech(const Matrix& m) {
    return SymMatrix::from_dense(m).packed;
}

void pack_lower(const Matrix& m, double* out) {
    Index idx = 0;
    for (Index j = 0; j < m.cols(); ++j)
        for (Index i = j; i < m.rows(); ++i) out[idx++] = m(i, j);
}

}  // namespace tfmseg
