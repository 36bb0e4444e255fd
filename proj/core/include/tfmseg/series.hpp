#pragma once

#include <cstdint>

#include "tfmseg/tensor.hpp"

namespace tfmseg {

using MaskMatrix = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;

// A length-T sequence of equally shaped order-K tensors. Column t of
// `values` is the flattened tensor at time t (mode-0 fastest, matching
// Tensor). An optional mask of the same shape marks observed cells with 1;
// masked cells carry NaN in `values`. Covariance and loading estimation do
// not support masked data and refuse it with an unsupported-missing error,
// so callers must check `complete()` or let those operations throw.
struct TensorSeries {
    Dims dims;
    Matrix values;
    MaskMatrix mask;  // empty when fully observed

    TensorSeries() = default;
    TensorSeries(Dims d, Matrix v) : dims(std::move(d)), values(std::move(v)) {
        if (values.rows() != dim_product(dims))
            fail(ErrorCode::dimension_mismatch, "series rows do not match dims product");
    }

    Index length() const { return values.cols(); }
    Index cell_count() const { return values.rows(); }

    bool has_mask() const { return mask.size() != 0; }
    bool complete() const {
        return !has_mask() || mask.minCoeff() == static_cast<std::uint8_t>(1);
    }

    Tensor at(Index t) const {
        if (t < 0 || t >= length()) fail(ErrorCode::bad_argument, "time index out of range");
        return Tensor(dims, values.col(t));
    }
};

// Copy of the observations in (a, b], mask included.
inline TensorSeries slice(const TensorSeries& s, Index a, Index b) {
    if (a < 0 || b > s.length() || a >= b) fail(ErrorCode::bad_argument, "invalid time interval");
    TensorSeries out;
    out.dims = s.dims;
    out.values = s.values.middleCols(a, b - a);
    if (s.has_mask()) out.mask = s.mask.middleCols(a, b - a);
    return out;
}

// Throws unsupported-missing when the series carries masked cells; `what`
// names the operation for the error message.
inline void require_complete(const TensorSeries& series, const char* what) {
    if (!series.complete())
        fail(ErrorCode::unsupported_missing,
             std::string(what) + " does not support series with missing entries");
}

// Throws unless 0 <= a < b <= T. Intervals are half-open on the left: (a, b]
// covers times a+1 .. b in 1-based counting, i.e. columns a .. b-1.
inline void require_interval(const TensorSeries& series, Index a, Index b) {
    if (a < 0 || b > series.length() || a >= b)
        fail(ErrorCode::bad_argument, "invalid time interval");
}

}  // namespace tfmseg
