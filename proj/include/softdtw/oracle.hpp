#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <utility>
#include <vector>

#include "softdtw/types.hpp"

// Reference implementations used by tests and the gradcheck CLI. Deliberately
// written as plain row-major nested loops with no wavefront, no fusion and no
// bandwidth, sharing nothing with the main kernels beyond scalar softmin
// algebra, so they constitute independent evidence.

namespace softdtw::oracle {

inline double sq_dist(const SeriesBatch<double> &x,
                      const SeriesBatch<double> &y, std::size_t i,
                      std::size_t j)
{
    const double *a = x.element(0, i);
    const double *b = y.element(0, j);
    double s = 0;
    for (std::size_t k = 0; k < x.feature_dim(); ++k) {
        const double diff = a[k] - b[k];
        s += diff * diff;
    }
    return s;
}

struct DtwResult {
    double distance = 0;
    std::vector<std::pair<std::size_t, std::size_t>> path;  // (0,0)..(N-1,M-1)
    bool unique = true;  // false if any argmin was tied
};

/// Classical DTW with squared-Euclidean cost and backtracked path.
/// Tie-break order when backtracking: diagonal, then up (i-1,j), then left.
inline DtwResult hard_dtw(const SeriesBatch<double> &x,
                          const SeriesBatch<double> &y)
{
    const std::size_t n = x.length(), m = y.length();
    const double inf = kInf<double>;
    std::vector<double> r((n + 1) * (m + 1), inf);
    auto R = [&](std::size_t i, std::size_t j) -> double & {
        return r[i * (m + 1) + j];
    };
    R(0, 0) = 0;

    DtwResult out;
    for (std::size_t i = 1; i <= n; ++i)
        for (std::size_t j = 1; j <= m; ++j) {
            const double diag = R(i - 1, j - 1), up = R(i - 1, j),
                         left = R(i, j - 1);
            const double best = std::min(diag, std::min(up, left));
            int ties = (diag == best) + (up == best) + (left == best);
            if (ties > 1 && std::isfinite(best)) out.unique = false;
            R(i, j) = sq_dist(x, y, i - 1, j - 1) + best;
        }
    out.distance = R(n, m);

    std::size_t i = n, j = m;
    out.path.emplace_back(i - 1, j - 1);
    while (i > 1 || j > 1) {
        const double diag = (i > 1 && j > 1) ? R(i - 1, j - 1) : inf;
        const double up = i > 1 ? R(i - 1, j) : inf;
        const double left = j > 1 ? R(i, j - 1) : inf;
        if (diag <= up && diag <= left) {
            --i;
            --j;
        } else if (up <= left) {
            --i;
        } else {
            --j;
        }
        out.path.emplace_back(i - 1, j - 1);
    }
    std::reverse(out.path.begin(), out.path.end());
    return out;
}

struct NaiveResult {
    double loss = 0;
    std::size_t n = 0, m = 0;
    std::vector<double> r;  // (n+2) x (m+2), padded like the main table
    std::vector<double> e;  // (n+2) x (m+2), linear space

    double r_at(std::size_t i, std::size_t j) const
    {
        return r[i * (m + 2) + j];
    }
    double e_at(std::size_t i, std::size_t j) const
    {
        return e[i * (m + 2) + j];
    }
};

inline double softmin3_ref(double a, double b, double c, double gamma)
{
    const double mn = std::min(a, std::min(b, c));
    if (std::isinf(mn)) return mn;
    return mn - gamma * std::log(std::exp(-(a - mn) / gamma) +
                                 std::exp(-(b - mn) / gamma) +
                                 std::exp(-(c - mn) / gamma));
}

/// Forward recurrence over an explicit cost matrix (n x m, row-major).
/// Used directly by finite-difference checks of E = dR_{N,M}/dd.
inline double naive_forward_from_costs(const std::vector<double> &costs,
                                       std::size_t n, std::size_t m,
                                       double gamma)
{
    const double inf = kInf<double>;
    std::vector<double> r((n + 1) * (m + 1), inf);
    auto R = [&](std::size_t i, std::size_t j) -> double & {
        return r[i * (m + 1) + j];
    };
    R(0, 0) = 0;
    for (std::size_t i = 1; i <= n; ++i)
        for (std::size_t j = 1; j <= m; ++j)
            R(i, j) = costs[(i - 1) * m + (j - 1)] +
                      softmin3_ref(R(i - 1, j - 1), R(i - 1, j), R(i, j - 1),
                                   gamma);
    return R(n, m);
}

/// Single-pair SoftDTW ground truth: forward table, loss, and the alignment
/// gradient E by reverse row-major DP in log space.
inline NaiveResult naive_softdtw(const SeriesBatch<double> &x,
                                 const SeriesBatch<double> &y, double gamma)
{
    const std::size_t n = x.length(), m = y.length();
    const double inf = kInf<double>;
    NaiveResult out;
    out.n = n;
    out.m = m;
    out.r.assign((n + 2) * (m + 2), inf);
    auto R = [&](std::size_t i, std::size_t j) -> double & {
        return out.r[i * (m + 2) + j];
    };
    R(0, 0) = 0;
    for (std::size_t i = 1; i <= n; ++i)
        for (std::size_t j = 1; j <= m; ++j)
            R(i, j) = sq_dist(x, y, i - 1, j - 1) +
                      softmin3_ref(R(i - 1, j - 1), R(i - 1, j), R(i, j - 1),
                                   gamma);
    out.loss = R(n, m);

    std::vector<double> ebar((n + 2) * (m + 2), -inf);
    auto Eb = [&](std::size_t i, std::size_t j) -> double & {
        return ebar[i * (m + 2) + j];
    };
    Eb(n, m) = 0;
    auto lse = [](double a, double b, double c) {
        const double mx = std::max(a, std::max(b, c));
        if (std::isinf(mx)) return mx;
        return mx + std::log(std::exp(a - mx) + std::exp(b - mx) +
                             std::exp(c - mx));
    };
    for (std::size_t i = n; i >= 1; --i)
        for (std::size_t j = m; j >= 1; --j) {
            if (i == n && j == m) continue;
            double td = -inf, tr = -inf, tg = -inf;
            if (i + 1 <= n)
                td = Eb(i + 1, j) +
                     (R(i + 1, j) - R(i, j) - sq_dist(x, y, i, j - 1)) / gamma;
            if (j + 1 <= m)
                tr = Eb(i, j + 1) +
                     (R(i, j + 1) - R(i, j) - sq_dist(x, y, i - 1, j)) / gamma;
            if (i + 1 <= n && j + 1 <= m)
                tg = Eb(i + 1, j + 1) +
                     (R(i + 1, j + 1) - R(i, j) - sq_dist(x, y, i, j)) / gamma;
            Eb(i, j) = lse(td, tr, tg);
        }

    out.e.assign((n + 2) * (m + 2), 0.0);
    for (std::size_t i = 1; i <= n; ++i)
        for (std::size_t j = 1; j <= m; ++j)
            out.e[i * (m + 2) + j] = std::exp(ebar[i * (m + 2) + j]);
    return out;
}

/// Central finite differences of a scalar function of one series, one
/// coordinate at a time.
inline std::vector<double>
fd_gradient(const std::function<double(const SeriesBatch<double> &)> &f,
            const SeriesBatch<double> &x, double step)
{
    if (!(step > 0)) throw ValidationError("fd_gradient: step must be > 0");
    std::vector<double> grad(x.raw().size());
    for (std::size_t i = 0; i < grad.size(); ++i) {
        SeriesBatch<double> hi = x, lo = x;
        hi.raw()[i] += step;
        lo.raw()[i] -= step;
        grad[i] = (f(hi) - f(lo)) / (2 * step);
    }
    return grad;
}

}  // namespace softdtw::oracle
