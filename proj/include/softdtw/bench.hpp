#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "softdtw/backward.hpp"
#include "softdtw/forward.hpp"
#include "softdtw/types.hpp"

namespace softdtw {

/// One benchmark configuration: square grids (N = M = L), timed end-to-end
/// forward+backward, averaged over `repeats` iterations after `warmup`
/// untimed passes.
struct BenchConfigRow {
    std::size_t batch = 16;
    std::size_t length = 128;
    std::size_t feature_dim = 64;
    double gamma = 1.0;
    CostMode cost_mode = CostMode::unfused;
    BackwardSpace backward_space = BackwardSpace::log_space;
    std::size_t repeats = 5;
    std::size_t warmup = 1;
};

struct BenchResultRow {
    BenchConfigRow config;
    double mean_runtime_ms = 0;
    double std_runtime_ms = 0;
    std::size_t peak_ledger_bytes = 0;
    float loss0 = 0;  // loss of batch element 0, for cross-mode agreement
    bool ok = false;
    std::string error;
};

inline void validate_bench_row(const BenchConfigRow &row)
{
    if (row.repeats < 1)
        throw ValidationError("bench: repeats must be >= 1");
    if (row.batch == 0 || row.length == 0 || row.feature_dim == 0)
        throw ValidationError("bench: dimensions must be >= 1");
}

/// Runs one row in 32-bit with seeded random-walk inputs. Timing wraps the
/// complete forward+backward of the batch on a monotonic clock, excluding
/// input generation. The ledger resets between runs; peak is taken from the
/// last timed run. Failures are recorded in the row, not thrown.
inline BenchResultRow run_bench_row(const BenchConfigRow &row,
                                    unsigned threads = 0,
                                    std::uint64_t seed = 42,
                                    std::size_t mem_limit_bytes = 0)
{
    validate_bench_row(row);
    BenchResultRow out;
    out.config = row;
    try {
        std::mt19937_64 rng(seed);
        std::normal_distribution<float> dist(0.0f, 1.0f);
        const std::size_t count = row.batch * row.length * row.feature_dim;
        std::vector<float> xs(count), ys(count);
        for (auto &v : xs) v = dist(rng);
        for (auto &v : ys) v = dist(rng);
        SeriesBatch<float> x(std::move(xs), row.batch, row.length,
                             row.feature_dim);
        SeriesBatch<float> y(std::move(ys), row.batch, row.length,
                             row.feature_dim);

        SdtwConfig cfg;
        cfg.gamma = row.gamma;
        cfg.cost_mode = row.cost_mode;
        cfg.backward_space = row.backward_space;

        AllocationLedger ledger;
        ledger.limit_bytes = mem_limit_bytes;

        std::vector<double> times_ms;
        for (std::size_t it = 0; it < row.warmup + row.repeats; ++it) {
            ledger.reset();
            const auto t0 = std::chrono::steady_clock::now();
            auto result = sdtw_with_gradients(x, y, cfg, threads, &ledger);
            const auto t1 = std::chrono::steady_clock::now();
            out.loss0 = result.loss[0];
            if (it >= row.warmup)
                times_ms.push_back(
                    std::chrono::duration<double, std::milli>(t1 - t0)
                        .count());
            out.peak_ledger_bytes = ledger.peak_bytes;
        }

        double mean = 0;
        for (double t : times_ms) mean += t;
        mean /= double(times_ms.size());
        double var = 0;
        for (double t : times_ms) var += (t - mean) * (t - mean);
        out.mean_runtime_ms = mean;
        out.std_runtime_ms = std::sqrt(var / double(times_ms.size()));
        out.ok = true;
    } catch (const std::exception &ex) {
        out.ok = false;
        out.error = ex.what();
    }
    return out;
}

inline std::string bench_csv_header()
{
    return "B,L,D,gamma,cost_mode,backward_space,repeats,warmup,"
           "mean_runtime_ms,std_runtime_ms,peak_ledger_bytes,status";
}

inline std::string bench_csv_row(const BenchResultRow &r)
{
    const auto &c = r.config;
    std::string s = std::to_string(c.batch) + "," + std::to_string(c.length) +
                    "," + std::to_string(c.feature_dim) + "," +
                    std::to_string(c.gamma) + "," +
                    (c.cost_mode == CostMode::fused ? "fused" : "unfused") +
                    "," +
                    (c.backward_space == BackwardSpace::log_space ? "log"
                                                                  : "linear") +
                    "," + std::to_string(c.repeats) + "," +
                    std::to_string(c.warmup) + ",";
    if (r.ok) {
        s += std::to_string(r.mean_runtime_ms) + "," +
             std::to_string(r.std_runtime_ms) + "," +
             std::to_string(r.peak_ledger_bytes) + ",ok";
    } else {
        std::string msg = r.error;
        for (auto &ch : msg)
            if (ch == ',' || ch == '\n') ch = ';';
        s += ",,,error(" + msg + ")";
    }
    return s;
}

}  // namespace softdtw
