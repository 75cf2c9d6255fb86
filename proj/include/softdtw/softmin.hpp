#pragma once

#include <algorithm>
#include <cmath>

#include "softdtw/types.hpp"

namespace softdtw {

/// Three candidate values plus their maximum, the shift used by the stable
/// combining operations.
template <class T>
struct SmoothTriple {
    T a, b, c;
    T max_shift() const { return std::max(a, std::max(b, c)); }
    T min_value() const { return std::min(a, std::min(b, c)); }
};

/// softmin_gamma(a, b, c) = -gamma * log(e^{-a/g} + e^{-b/g} + e^{-c/g}),
/// evaluated with a min-shift so large costs never overflow exp. Total on
/// extended reals: +inf iff all three inputs are +inf, never NaN.
template <class T>
T softmin(T a, T b, T c, T gamma)
{
    const T mn = std::min(a, std::min(b, c));
    if (std::isinf(mn)) return mn;  // all +inf, or any -inf
    const T g = gamma;
    const T s = std::exp(-(a - mn) / g) + std::exp(-(b - mn) / g) +
                std::exp(-(c - mn) / g);
    return mn - g * std::log(s);
}

template <class T>
T softmin(const SmoothTriple<T> &t, T gamma)
{
    return softmin(t.a, t.b, t.c, gamma);
}

/// Max-shifted three-way logsumexp; -inf arguments contribute zero mass,
/// the result is -inf iff all three are -inf.
template <class T>
T logsumexp3(T a, T b, T c)
{
    const T m = std::max(a, std::max(b, c));
    if (std::isinf(m)) return m;  // all -inf, or any +inf
    return m + std::log(std::exp(a - m) + std::exp(b - m) + std::exp(c - m));
}

template <class T>
T logsumexp3(const SmoothTriple<T> &t)
{
    return logsumexp3(t.a, t.b, t.c);
}

}  // namespace softdtw
