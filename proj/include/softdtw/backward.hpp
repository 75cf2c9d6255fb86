#pragma once

#include <atomic>
#include <cstdint>
#include <vector>

#include "softdtw/cost.hpp"
#include "softdtw/forward.hpp"
#include "softdtw/softmin.hpp"
#include "softdtw/types.hpp"
#include "softdtw/wavefront.hpp"

namespace softdtw {

namespace detail {

/// Reverse wavefront over the forward table, writing the gradient table into
/// the same slab. R values for the three diagonals still needed are staged
/// in a rotating ring (3 x B x N) before their slab cells are overwritten,
/// so the sweep costs O(B * min-band) extra storage instead of a second
/// table. CellUpdate computes one gradient cell from (r_self, three
/// successor terms); successors whose R is +inf (out-of-band, padding) are
/// dead transitions.
///
/// Log space:    Ebar(i,j) = logsumexp(Ebar_down + alpha, Ebar_right + beta,
///                                     Ebar_diag + delta)
/// Linear space: E(i,j) = e^alpha * E_down + e^beta * E_right +
///                        e^delta * E_diag
template <class T, class Cost, bool kLogSpace>
GradTableBatch<T> backward_sweep(DpTableBatch<T> &&r, const Cost &cost,
                                 const SdtwConfig &cfg, unsigned threads,
                                 AllocationLedger *ledger)
{
    const std::size_t batch = r.batch_size(), n = r.n(), m = r.m();
    validate_config(cfg, n, m);
    const WavefrontPlan plan = build_wavefront_plan(n, m, cfg.bandwidth);
    const T gamma = static_cast<T>(cfg.gamma);

    TrackedBuffer<T> slab = std::move(r).take_buffer();
    TrackedBuffer<T> ring(3 * batch * n, kInf<T>, ledger);
    std::atomic<bool> incomplete{false};

    const std::size_t row_stride = m + 2;
    const std::size_t slice = (n + 2) * row_stride;
    auto slab_at = [&](std::size_t b, std::size_t i,
                       std::size_t j) -> T & {
        return slab[b * slice + i * row_stride + j];
    };
    auto ring_at = [&](std::size_t p, std::size_t b,
                       std::size_t i) -> T & {
        return ring[(p % 3) * batch * n + b * n + i];
    };

    // The backward never reads the forward boundary; blank it to +inf so the
    // epilogue can treat every unwritten cell uniformly.
    for (std::size_t b = 0; b < batch; ++b) slab_at(b, 0, 0) = kInf<T>;

    unsigned w = resolve_threads(threads);
    if (plan.max_diag_len <= kSerialDiagonalThreshold) w = 1;

    WorkerTeam::run(w, [&](unsigned id, unsigned workers, auto &&wait) {
        for (std::size_t di = plan.diagonals.size(); di-- > 0;) {
            const DiagonalSpan &d = plan.diagonals[di];
            const std::size_t p = d.p;

            // Phase A: stage R of diagonal p before it is overwritten.
            {
                const std::size_t items = batch * n;
                const std::size_t chunk = (items + workers - 1) / workers;
                const std::size_t begin = std::min(items, id * chunk);
                const std::size_t end = std::min(items, begin + chunk);
                for (std::size_t t = begin; t < end; ++t) {
                    const std::size_t b = t / n, i = t % n;
                    T v = kInf<T>;
                    if (i <= p && p - i < m && in_band(i, p - i, cfg.bandwidth))
                        v = slab_at(b, i + 1, p - i + 1);
                    ring_at(p, b, i) = v;
                }
            }
            wait();

            // Phase B: gradient cells of diagonal p.
            {
                const std::size_t len = d.length();
                const std::size_t items = batch * len;
                const std::size_t chunk = (items + workers - 1) / workers;
                const std::size_t begin = std::min(items, id * chunk);
                const std::size_t end = std::min(items, begin + chunk);
                for (std::size_t t = begin; t < end; ++t) {
                    const std::size_t b = t / len;
                    const std::size_t ci = d.i_min + t % len;
                    const std::size_t cj = p - ci;
                    const std::size_t i = ci + 1, j = cj + 1;

                    if (ci == n - 1 && cj == m - 1) {
                        slab_at(b, i, j) = kLogSpace ? T(0) : T(1);
                        continue;
                    }
                    const T r_self = ring_at(p, b, ci);
                    if (std::isinf(r_self)) {
                        incomplete.store(true, std::memory_order_relaxed);
                        continue;
                    }

                    T down = -kInf<T>, right = -kInf<T>, diag = -kInf<T>;
                    if (ci + 1 < n) {
                        const T rs = ring_at(p + 1, b, ci + 1);
                        if (!std::isinf(rs))
                            down = (rs - r_self - cost(b, i + 1, j)) / gamma;
                    }
                    if (cj + 1 < m) {
                        const T rs = ring_at(p + 1, b, ci);
                        if (!std::isinf(rs))
                            right = (rs - r_self - cost(b, i, j + 1)) / gamma;
                    }
                    if (ci + 1 < n && cj + 1 < m) {
                        const T rs = ring_at(p + 2, b, ci + 1);
                        if (!std::isinf(rs))
                            diag = (rs - r_self - cost(b, i + 1, j + 1)) /
                                   gamma;
                    }

                    if constexpr (kLogSpace) {
                        const T td = std::isinf(down)
                                         ? -kInf<T>
                                         : slab_at(b, i + 1, j) + down;
                        const T tr = std::isinf(right)
                                         ? -kInf<T>
                                         : slab_at(b, i, j + 1) + right;
                        const T tg = std::isinf(diag)
                                         ? -kInf<T>
                                         : slab_at(b, i + 1, j + 1) + diag;
                        // E = dR_{N,M}/dd is a transition-mass marginal and
                        // cannot exceed 1; capping Ebar at 0 enforces that
                        // bound against rounding amplified by 1/gamma.
                        slab_at(b, i, j) =
                            std::min(T(0), logsumexp3(td, tr, tg));
                    } else {
                        T acc = 0;
                        if (!std::isinf(down))
                            acc += std::exp(down) * slab_at(b, i + 1, j);
                        if (!std::isinf(right))
                            acc += std::exp(right) * slab_at(b, i, j + 1);
                        if (!std::isinf(diag))
                            acc += std::exp(diag) * slab_at(b, i + 1, j + 1);
                        slab_at(b, i, j) = acc;
                    }
                }
            }
            wait();
        }
    });

    if (incomplete.load())
        throw IncompleteTableError(
            "backward: forward table has +inf at a reachable in-band cell");

    // Epilogue: one pass over the slab. In-band interior cells become
    // exp(Ebar) (log space) or keep their raw value (linear space, where a
    // non-finite entry is the observable overflow); everything else is 0.
    parallel_for(batch * (n + 2), w, [&](std::size_t begin, std::size_t end) {
        for (std::size_t row = begin; row < end; ++row) {
            const std::size_t b = row / (n + 2), i = row % (n + 2);
            for (std::size_t j = 0; j < m + 2; ++j) {
                T &v = slab[b * slice + i * row_stride + j];
                const bool interior = i >= 1 && i <= n && j >= 1 && j <= m &&
                                      in_band(i - 1, j - 1, cfg.bandwidth);
                if (!interior)
                    v = T(0);
                else if (kLogSpace)
                    v = std::exp(v);
            }
        }
    });

    return GradTableBatch<T>(std::move(slab), batch, n, m, GradSpace::linear);
}

}  // namespace detail

/// Log-space backward pass (stable default). Consumes the forward table and
/// returns E = exp(Ebar), finite in [0, 1] for finite inputs and any gamma.
template <class T, class Cost>
GradTableBatch<T> backward_log(DpTableBatch<T> &&r, const Cost &cost,
                               const SdtwConfig &cfg, unsigned threads = 0,
                               AllocationLedger *ledger = nullptr)
{
    return detail::backward_sweep<T, Cost, true>(std::move(r), cost, cfg,
                                                 threads, ledger);
}

/// Linear-space reference recurrence. Fragile by construction: for small
/// gamma the transition exponents overflow and non-finite values propagate
/// through the output. Kept as the instability witness; agrees with
/// backward_log when nothing overflows.
template <class T, class Cost>
GradTableBatch<T> backward_linear(DpTableBatch<T> &&r, const Cost &cost,
                                  const SdtwConfig &cfg, unsigned threads = 0,
                                  AllocationLedger *ledger = nullptr)
{
    return detail::backward_sweep<T, Cost, false>(std::move(r), cost, cfg,
                                                  threads, ledger);
}

/// Gradients of the loss with respect to both inputs via marginal
/// reductions: grad_x[i] = 2 (x_i * sum_j E_ij - sum_j E_ij y_j) and the
/// column-wise mirror for y. Never touches the cost tensor.
template <class T>
InputGradients<T> input_gradients(const GradTableBatch<T> &e,
                                  const SeriesBatch<T> &x,
                                  const SeriesBatch<T> &y,
                                  unsigned threads = 0)
{
    if (e.space() != GradSpace::linear)
        throw ValidationError("input_gradients: gradient table must be in "
                              "linear space");
    if (e.batch_size() != x.batch_size() || e.n() != x.length() ||
        e.m() != y.length() || x.feature_dim() != y.feature_dim())
        throw ValidationError("input_gradients: shape mismatch");

    const std::size_t batch = e.batch_size(), n = e.n(), m = e.m(),
                      d = x.feature_dim();
    InputGradients<T> out;
    out.grad_x.assign(batch * n * d, T(0));
    out.grad_y.assign(batch * m * d, T(0));

    parallel_for(batch * n, threads, [&](std::size_t begin, std::size_t end) {
        std::vector<T> acc(d);
        for (std::size_t row = begin; row < end; ++row) {
            const std::size_t b = row / n, i = row % n;
            T marginal = 0;
            std::fill(acc.begin(), acc.end(), T(0));
            for (std::size_t j = 0; j < m; ++j) {
                const T w = e.at(b, i + 1, j + 1);
                marginal += w;
                const T *ye = y.element(b, j);
                for (std::size_t k = 0; k < d; ++k) acc[k] += w * ye[k];
            }
            const T *xe = x.element(b, i);
            T *g = out.grad_x.data() + row * d;
            for (std::size_t k = 0; k < d; ++k)
                g[k] = 2 * (xe[k] * marginal - acc[k]);
        }
    });

    parallel_for(batch * m, threads, [&](std::size_t begin, std::size_t end) {
        std::vector<T> acc(d);
        for (std::size_t col = begin; col < end; ++col) {
            const std::size_t b = col / m, j = col % m;
            T marginal = 0;
            std::fill(acc.begin(), acc.end(), T(0));
            for (std::size_t i = 0; i < n; ++i) {
                const T w = e.at(b, i + 1, j + 1);
                marginal += w;
                const T *xe = x.element(b, i);
                for (std::size_t k = 0; k < d; ++k) acc[k] += w * xe[k];
            }
            const T *ye = y.element(b, j);
            T *g = out.grad_y.data() + col * d;
            for (std::size_t k = 0; k < d; ++k)
                g[k] = 2 * (ye[k] * marginal - acc[k]);
        }
    });

    return out;
}

/// End-to-end loss + input gradients in one call, dispatching on the
/// configured cost mode and backward space.
template <class T>
struct SdtwOutput {
    std::vector<T> loss;
    InputGradients<T> grads;
};

template <class T>
SdtwOutput<T> sdtw_with_gradients(const SeriesBatch<T> &x,
                                  const SeriesBatch<T> &y,
                                  const SdtwConfig &cfg, unsigned threads = 0,
                                  AllocationLedger *ledger = nullptr)
{
    ForwardResult<T> fwd = forward(x, y, cfg, threads, ledger);
    GradTableBatch<T> e;
    if (fwd.costs) {
        MaterializedCosts<T> cost{&*fwd.costs};
        e = cfg.backward_space == BackwardSpace::log_space
                ? backward_log(std::move(fwd.table), cost, cfg, threads,
                               ledger)
                : backward_linear(std::move(fwd.table), cost, cfg, threads,
                                  ledger);
        fwd.costs.reset();
    } else {
        FusedCosts<T> cost{&x, &y, &fwd.cache};
        e = cfg.backward_space == BackwardSpace::log_space
                ? backward_log(std::move(fwd.table), cost, cfg, threads,
                               ledger)
                : backward_linear(std::move(fwd.table), cost, cfg, threads,
                                  ledger);
    }
    SdtwOutput<T> out;
    out.loss = std::move(fwd.loss);
    out.grads = input_gradients(e, x, y, threads);
    return out;
}

}  // namespace softdtw
