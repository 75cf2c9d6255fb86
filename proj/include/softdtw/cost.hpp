#pragma once

#include <cstddef>

#include "softdtw/parallel.hpp"
#include "softdtw/types.hpp"

namespace softdtw {

/// Precomputed squared norms ||x_i||^2 (B x N) and ||y_j||^2 (B x M),
/// shared by the materialized and on-the-fly cost paths.
template <class T>
struct NormCache {
    TrackedBuffer<T> x_sqnorms;  // B x N
    TrackedBuffer<T> y_sqnorms;  // B x M
    std::size_t batch = 0, n = 0, m = 0;

    T x_sq(std::size_t b, std::size_t i) const { return x_sqnorms[b * n + i]; }
    T y_sq(std::size_t b, std::size_t j) const { return y_sqnorms[b * m + j]; }
};

template <class T>
NormCache<T> compute_norm_cache(const SeriesBatch<T> &x,
                                const SeriesBatch<T> &y,
                                AllocationLedger *ledger = nullptr)
{
    if (x.batch_size() != y.batch_size())
        throw ValidationError("norm cache: batch size mismatch");
    if (x.feature_dim() != y.feature_dim())
        throw ValidationError("norm cache: feature dim mismatch");

    const std::size_t b = x.batch_size(), n = x.length(), m = y.length(),
                      d = x.feature_dim();
    NormCache<T> cache;
    cache.batch = b;
    cache.n = n;
    cache.m = m;
    cache.x_sqnorms = TrackedBuffer<T>(b * n, T(0), ledger);
    cache.y_sqnorms = TrackedBuffer<T>(b * m, T(0), ledger);

    for (std::size_t bi = 0; bi < b; ++bi) {
        for (std::size_t i = 0; i < n; ++i) {
            const T *e = x.element(bi, i);
            T s = 0;
            for (std::size_t k = 0; k < d; ++k) s += e[k] * e[k];
            cache.x_sqnorms[bi * n + i] = s;
        }
        for (std::size_t j = 0; j < m; ++j) {
            const T *e = y.element(bi, j);
            T s = 0;
            for (std::size_t k = 0; k < d; ++k) s += e[k] * e[k];
            cache.y_sqnorms[bi * m + j] = s;
        }
    }
    return cache;
}

/// Squared-Euclidean cost between x element i-1 and y element j-1 via the
/// norm expansion ||x||^2 - 2<x,y> + ||y||^2, clamped at 0 against
/// cancellation. Indices are 1-based over the DP interior. The feature loop
/// runs in the same order here and in materialize_costs, so the two modes
/// are bit-identical.
template <class T>
T cost_at(const SeriesBatch<T> &x, const SeriesBatch<T> &y,
          const NormCache<T> &cache, std::size_t b, std::size_t i,
          std::size_t j)
{
    if (b >= x.batch_size() || i < 1 || i > x.length() || j < 1 ||
        j > y.length())
        throw ValidationError("cost_at: index out of range");
    const std::size_t d = x.feature_dim();
    const T *xe = x.element(b, i - 1);
    const T *ye = y.element(b, j - 1);
    T dot = 0;
    for (std::size_t k = 0; k < d; ++k) dot += xe[k] * ye[k];
    T v = cache.x_sq(b, i - 1) - 2 * dot + cache.y_sq(b, j - 1);
    return v < T(0) ? T(0) : v;
}

/// Materializes the full B x N x M cost tensor (unfused mode). Parallel over
/// (b, i) rows; each cell uses the identical scalar path as cost_at.
template <class T>
CostMatrixBatch<T> materialize_costs(const SeriesBatch<T> &x,
                                     const SeriesBatch<T> &y,
                                     const NormCache<T> &cache,
                                     AllocationLedger *ledger = nullptr,
                                     unsigned threads = 1)
{
    const std::size_t b = x.batch_size(), n = x.length(), m = y.length();
    CostMatrixBatch<T> costs(b, n, m, ledger);
    parallel_for(b * n, threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t row = begin; row < end; ++row) {
            const std::size_t bi = row / n, i = row % n + 1;
            for (std::size_t j = 1; j <= m; ++j)
                costs.at(bi, i, j) = cost_at(x, y, cache, bi, i, j);
        }
    });
    return costs;
}

/// Cost accessor over a materialized tensor.
template <class T>
struct MaterializedCosts {
    const CostMatrixBatch<T> *d;
    T operator()(std::size_t b, std::size_t i, std::size_t j) const
    {
        return d->at(b, i, j);
    }
};

/// Cost accessor recomputing each cell on demand (fused mode).
template <class T>
struct FusedCosts {
    const SeriesBatch<T> *x;
    const SeriesBatch<T> *y;
    const NormCache<T> *cache;
    T operator()(std::size_t b, std::size_t i, std::size_t j) const
    {
        return cost_at(*x, *y, *cache, b, i, j);
    }
};

}  // namespace softdtw
