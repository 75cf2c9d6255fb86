#pragma once

#include <optional>
#include <vector>

#include "softdtw/cost.hpp"
#include "softdtw/softmin.hpp"
#include "softdtw/types.hpp"
#include "softdtw/wavefront.hpp"

namespace softdtw {

/// Everything the backward pass needs alongside the per-batch losses: the
/// filled R table, the norm cache, and (unfused mode) the cost tensor.
template <class T>
struct ForwardResult {
    std::vector<T> loss;  // length B
    DpTableBatch<T> table;
    NormCache<T> cache;
    std::optional<CostMatrixBatch<T>> costs;  // present in unfused mode
};

namespace detail {

template <class T, class Cost>
void fill_table(DpTableBatch<T> &r, const Cost &cost,
                const WavefrontPlan &plan, T gamma, unsigned threads)
{
    sweep_forward(plan, r.batch_size(), threads,
                  [&](std::size_t b, std::size_t ci, std::size_t cj) {
                      const std::size_t i = ci + 1, j = cj + 1;
                      const T sm = softmin(r.at(b, i - 1, j - 1),
                                           r.at(b, i - 1, j),
                                           r.at(b, i, j - 1), gamma);
                      r.at(b, i, j) = cost(b, i, j) + sm;
                  });
}

}  // namespace detail

/// Soft-DTW forward pass: fills R by the softmin recurrence over the
/// wavefront schedule and returns loss[b] = R[b, N, M].
template <class T>
ForwardResult<T> forward(const SeriesBatch<T> &x, const SeriesBatch<T> &y,
                         const SdtwConfig &cfg, unsigned threads = 0,
                         AllocationLedger *ledger = nullptr)
{
    if (x.batch_size() != y.batch_size())
        throw ValidationError("forward: batch size mismatch");
    if (x.feature_dim() != y.feature_dim())
        throw ValidationError("forward: feature dim mismatch");
    const std::size_t b = x.batch_size(), n = x.length(), m = y.length();
    validate_config(cfg, n, m);

    ForwardResult<T> out;
    out.cache = compute_norm_cache(x, y, ledger);
    if (cfg.cost_mode == CostMode::unfused)
        out.costs = materialize_costs(x, y, out.cache, ledger, threads);

    out.table = DpTableBatch<T>(b, n, m, ledger);
    const WavefrontPlan plan = build_wavefront_plan(n, m, cfg.bandwidth);
    const T gamma = static_cast<T>(cfg.gamma);

    if (out.costs) {
        detail::fill_table(out.table, MaterializedCosts<T>{&*out.costs}, plan,
                           gamma, threads);
    } else {
        detail::fill_table(out.table, FusedCosts<T>{&x, &y, &out.cache}, plan,
                           gamma, threads);
    }

    out.loss.resize(b);
    for (std::size_t bi = 0; bi < b; ++bi) {
        const T v = out.table.at(bi, n, m);
        if (!std::isfinite(v))
            throw UnreachableEndError(
                "forward: R[N,M] is not finite (end cell unreachable)");
        out.loss[bi] = v;
    }
    return out;
}

/// Normalized variant sdtw(x,y) - (sdtw(x,x) + sdtw(y,y)) / 2; requires
/// N == M and zeroes out the self-alignment bias (exactly 0 when x == y).
template <class T>
std::vector<T> forward_normalized(const SeriesBatch<T> &x,
                                  const SeriesBatch<T> &y,
                                  const SdtwConfig &cfg, unsigned threads = 0,
                                  AllocationLedger *ledger = nullptr)
{
    if (x.length() != y.length())
        throw ValidationError("normalized sdtw requires N == M");
    SdtwConfig plain = cfg;
    plain.normalized = false;
    const auto xy = forward(x, y, plain, threads, ledger);
    const auto xx = forward(x, x, plain, threads, ledger);
    const auto yy = forward(y, y, plain, threads, ledger);
    std::vector<T> out(xy.loss.size());
    for (std::size_t b = 0; b < out.size(); ++b)
        out[b] = xy.loss[b] - (xx.loss[b] + yy.loss[b]) / T(2);
    return out;
}

}  // namespace softdtw
