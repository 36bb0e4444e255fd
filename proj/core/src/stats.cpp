#include "tfmseg/stats.hpp"

#include <cmath>

namespace tfmseg {

Index stacked_dim(const std::vector<Index>& ranks) {
    Index d = 0;
    for (Index r : ranks) d += r * (r + 1) / 2;
    return d;
}

Vector PseudoFactorStats::interval_mean(Index a, Index b) const {
    if (a < 0 || b > length() || a >= b) fail(ErrorCode::bad_argument, "invalid time interval");
    return (prefix.col(b) - prefix.col(a)) / static_cast<double>(b - a);
}

Matrix PseudoFactorStats::interval_covariance(Index k, Index a, Index b) const {
    if (k < 0 || k >= static_cast<Index>(ranks.size()))
        fail(ErrorCode::bad_argument, "mode index out of range");
    Vector mean = interval_mean(a, b);
    const Index off = offsets[static_cast<size_t>(k)];
    const Index len = offsets[static_cast<size_t>(k) + 1] - off;
    return SymMatrix(ranks[static_cast<size_t>(k)], mean.segment(off, len)).dense();
}

PseudoFactorStats pseudo_factor_stats(const TensorSeries& g) {
    const Index K = static_cast<Index>(g.dims.size());
    const Index T = g.length();

    PseudoFactorStats out;
    out.ranks = std::vector<Index>(g.dims.begin(), g.dims.end());
    out.offsets.resize(static_cast<size_t>(K) + 1);
    out.offsets[0] = 0;
    for (Index k = 0; k < K; ++k) {
        const Index r = g.dims[static_cast<size_t>(k)];
        out.offsets[static_cast<size_t>(k) + 1] = out.offsets[static_cast<size_t>(k)] + r * (r + 1) / 2;
    }
    const Index d = out.offsets[static_cast<size_t>(K)];

    out.v.resize(d, T);
    for (Index t = 0; t < T; ++t) {
        for (Index k = 0; k < K; ++k) {
            Matrix m = unfold(g.dims, g.values.col(t), k);
            Matrix s = m * m.transpose();
            pack_lower(s, out.v.col(t).data() + out.offsets[static_cast<size_t>(k)]);
        }
    }

    out.prefix.resize(d, T + 1);
    out.prefix.col(0).setZero();
    for (Index t = 0; t < T; ++t) out.prefix.col(t + 1) = out.prefix.col(t) + out.v.col(t);
    return out;
}

Vector cusum(const PseudoFactorStats& stats, Index a, Index tau, Index b) {
    if (!(a < tau && tau < b)) fail(ErrorCode::bad_argument, "cusum needs a < tau < b");
    Vector diff = stats.interval_mean(tau, b) - stats.interval_mean(a, tau);
    const double na = static_cast<double>(tau - a);
    const double nb = static_cast<double>(b - tau);
    return std::sqrt(na * nb / static_cast<double>(b - a)) * diff;
}

Index bartlett_bandwidth(Index T) {
    Index w = 0;
    while ((w + 1) * (w + 1) * (w + 1) * (w + 1) <= T) ++w;
    return w;
}

Vector weight_matrix(const PseudoFactorStats& stats) {
    const Index T = stats.length();
    if (T < 2) fail(ErrorCode::bad_argument, "weight estimation needs at least 2 observations");
    const Index d = stats.dim();
    const Index w = bartlett_bandwidth(T);

    Matrix centered = stats.v.colwise() - Vector(stats.prefix.col(T) / static_cast<double>(T));

    Vector diag = Vector::Zero(d);
    for (Index t = 0; t < T; ++t) diag += centered.col(t).cwiseAbs2();
    for (Index l = 1; l <= w; ++l) {
        Vector c = Vector::Zero(d);
        for (Index t = l; t < T; ++t) c += centered.col(t).cwiseProduct(centered.col(t - l));
        diag += 2.0 * (1.0 - static_cast<double>(l) / static_cast<double>(w + 1)) * c;
    }
    diag /= static_cast<double>(T);

    const double top = diag.maxCoeff();
    const double eps = top > 0.0 ? top * 1e-10 : 1e-300;
    return diag.cwiseMax(eps);
}

}  // namespace tfmseg
