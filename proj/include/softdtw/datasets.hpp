#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

#include "softdtw/types.hpp"

namespace softdtw {

enum class DatasetKind { blockwave, sine_mix, random_walk };

/// Synthetic generators for demos and tests. Deterministic under the seed.
///
/// blockwave: zero series with one contiguous block of height 1 whose start
/// is uniform in [0.1 L, 0.6 L] and width uniform in [0.2 L, 0.3 L], plus
/// Gaussian noise of the given standard deviation.
inline std::vector<SeriesBatch<double>>
generate_dataset(DatasetKind kind, std::size_t count, std::size_t length,
                 std::size_t dim, double noise, std::uint64_t seed)
{
    if (count == 0 || length == 0 || dim == 0)
        throw ValidationError("dataset: count, length, dim must be >= 1");
    std::mt19937_64 rng(seed);
    std::vector<SeriesBatch<double>> out;
    out.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
        std::vector<double> data(length * dim, 0.0);
        switch (kind) {
            case DatasetKind::blockwave: {
                std::uniform_real_distribution<double> start_dist(
                    0.1 * double(length), 0.6 * double(length));
                std::uniform_real_distribution<double> width_dist(
                    0.2 * double(length), 0.3 * double(length));
                const auto start = static_cast<std::size_t>(start_dist(rng));
                const auto width = static_cast<std::size_t>(width_dist(rng));
                for (std::size_t t = start;
                     t < std::min(length, start + width); ++t)
                    for (std::size_t f = 0; f < dim; ++f)
                        data[t * dim + f] = 1.0;
                break;
            }
            case DatasetKind::sine_mix: {
                std::uniform_real_distribution<double> freq(1.0, 4.0);
                std::uniform_real_distribution<double> phase(0.0, 6.2831853);
                for (std::size_t f = 0; f < dim; ++f) {
                    const double w1 = freq(rng), w2 = freq(rng);
                    const double p1 = phase(rng), p2 = phase(rng);
                    for (std::size_t t = 0; t < length; ++t) {
                        const double u =
                            double(t) / double(length) * 6.2831853;
                        data[t * dim + f] =
                            std::sin(w1 * u + p1) + 0.5 * std::sin(w2 * u + p2);
                    }
                }
                break;
            }
            case DatasetKind::random_walk: {
                std::normal_distribution<double> step(0.0, 1.0);
                for (std::size_t f = 0; f < dim; ++f) {
                    double v = 0.0;
                    for (std::size_t t = 0; t < length; ++t) {
                        v += step(rng);
                        data[t * dim + f] = v;
                    }
                }
                break;
            }
        }
        if (noise > 0) {
            std::normal_distribution<double> jitter(0.0, noise);
            for (auto &v : data) v += jitter(rng);
        }
        out.emplace_back(std::move(data), 1, length, dim);
    }
    return out;
}

}  // namespace softdtw
