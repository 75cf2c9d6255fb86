#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "softdtw/parallel.hpp"
#include "softdtw/types.hpp"

namespace softdtw {

/// One anti-diagonal p = i + j with its contiguous in-band row range
/// [i_min, i_max] (0-based cell coordinates).
struct DiagonalSpan {
    std::size_t p;
    std::size_t i_min;
    std::size_t i_max;

    std::size_t length() const { return i_max - i_min + 1; }
};

/// Dependency-ordered enumeration of every in-band interior cell, grouped by
/// anti-diagonal. Cells on diagonal p depend only on diagonals p-1 and p-2.
struct WavefrontPlan {
    std::size_t n = 0, m = 0, bandwidth = 0;
    std::vector<DiagonalSpan> diagonals;
    std::size_t max_diag_len = 0;
    std::size_t cell_count = 0;
};

inline bool in_band(std::size_t i, std::size_t j, std::size_t bandwidth)
{
    if (bandwidth == 0) return true;
    const std::size_t diff = i > j ? i - j : j - i;
    return diff <= bandwidth;
}

inline WavefrontPlan build_wavefront_plan(std::size_t n, std::size_t m,
                                          std::size_t bandwidth)
{
    if (n == 0 || m == 0)
        throw ValidationError("wavefront plan: dimensions must be >= 1");
    const std::size_t gap = n > m ? n - m : m - n;
    if (bandwidth != 0 && bandwidth < gap)
        throw ValidationError("wavefront plan: bandwidth disconnects the end "
                              "cell from the origin");

    WavefrontPlan plan;
    plan.n = n;
    plan.m = m;
    plan.bandwidth = bandwidth;
    plan.diagonals.reserve(n + m - 1);
    for (std::size_t p = 0; p + 1 <= n + m - 1; ++p) {
        std::int64_t lo = p + 1 > m ? static_cast<std::int64_t>(p - m + 1) : 0;
        std::int64_t hi = std::min<std::int64_t>(n - 1, p);
        if (bandwidth != 0) {
            // |i - (p - i)| <= bandwidth  <=>  (p - bw)/2 <= i <= (p + bw)/2
            const std::int64_t sp = static_cast<std::int64_t>(p);
            const std::int64_t bw = static_cast<std::int64_t>(bandwidth);
            lo = std::max(lo, (sp - bw + 1) / 2);
            hi = std::min(hi, (sp + bw) / 2);
        }
        if (lo > hi) continue;
        DiagonalSpan span{p, static_cast<std::size_t>(lo),
                          static_cast<std::size_t>(hi)};
        plan.max_diag_len = std::max(plan.max_diag_len, span.length());
        plan.cell_count += span.length();
        plan.diagonals.push_back(span);
    }
    return plan;
}

/// Diagonal lengths below this run without parallel dispatch; scheduling
/// overhead dominates at this scale.
inline constexpr std::size_t kSerialDiagonalThreshold = 64;

/// Runs cell(b, i, j) over every plan cell of every batch element, diagonal
/// by diagonal, with a barrier between diagonals. Cells within a diagonal
/// are write-disjoint, so any worker count yields bit-identical results.
/// cell must not throw.
template <class CellFn>
void sweep_forward(const WavefrontPlan &plan, std::size_t batch,
                   unsigned threads, CellFn &&cell)
{
    const unsigned w = resolve_threads(threads);
    if (w <= 1 || plan.max_diag_len <= kSerialDiagonalThreshold) {
        // Plain row-major nested loops respect the dependency order.
        for (std::size_t b = 0; b < batch; ++b)
            for (std::size_t i = 0; i < plan.n; ++i)
                for (std::size_t j = 0; j < plan.m; ++j)
                    if (in_band(i, j, plan.bandwidth)) cell(b, i, j);
        return;
    }

    WorkerTeam::run(w, [&](unsigned id, unsigned workers, auto &&wait) {
        for (const DiagonalSpan &d : plan.diagonals) {
            const std::size_t len = d.length();
            const std::size_t items = batch * len;
            const std::size_t chunk = (items + workers - 1) / workers;
            const std::size_t begin = std::min(items, id * chunk);
            const std::size_t end = std::min(items, begin + chunk);
            for (std::size_t t = begin; t < end; ++t) {
                const std::size_t b = t / len;
                const std::size_t i = d.i_min + t % len;
                cell(b, i, d.p - i);
            }
            wait();
        }
    });
}

}  // namespace softdtw
