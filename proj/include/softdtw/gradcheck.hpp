#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "softdtw/backward.hpp"
#include "softdtw/forward.hpp"
#include "softdtw/oracle.hpp"
#include "softdtw/types.hpp"

namespace softdtw {

struct GradCheckOptions {
    std::vector<std::size_t> sizes = {2, 3, 4, 5, 6};
    std::vector<double> gammas = {0.1, 1.0, 10.0};
    std::vector<std::size_t> dims = {1, 3};
    double scale = 1.0;  // input magnitude multiplier
    double step = 1e-5;
    double tolerance = 1e-5;
    std::uint64_t seed = 7;
    BackwardSpace backward_space = BackwardSpace::log_space;
    unsigned threads = 0;
};

struct GradCheckCase {
    std::size_t n, m, d;
    double gamma;
    CostMode cost_mode;
    double worst_rel_error;
    bool nonfinite;
};

struct GradCheckReport {
    std::vector<GradCheckCase> cases;
    double worst_rel_error = 0;
    bool any_nonfinite = false;
    bool passed = false;

    std::string summary() const
    {
        std::ostringstream os;
        for (const auto &c : cases) {
            os << "n=" << c.n << " m=" << c.m << " d=" << c.d
               << " gamma=" << c.gamma << " mode="
               << (c.cost_mode == CostMode::fused ? "fused" : "unfused")
               << " worst_rel=" << c.worst_rel_error
               << (c.nonfinite ? " NON-FINITE" : "") << "\n";
        }
        os << "worst overall: " << worst_rel_error
           << (any_nonfinite ? " (non-finite gradients present)" : "")
           << " -> " << (passed ? "PASS" : "FAIL") << "\n";
        return os.str();
    }
};

/// Compares input_gradients against central finite differences of the
/// forward loss, coordinate by coordinate, over a grid of sizes, gammas and
/// both cost modes. Relative error is normalized by max(1, |analytic|).
/// The analytic pass runs in T (float exposes the fp32 overflow regimes);
/// finite differences always run in double on the T-rounded inputs.
template <class T = double>
GradCheckReport run_gradcheck(const GradCheckOptions &opts)
{
    GradCheckReport report;
    std::mt19937_64 rng(opts.seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);

    for (std::size_t n : opts.sizes)
        for (std::size_t d : opts.dims)
            for (double gamma : opts.gammas)
                for (CostMode mode : {CostMode::unfused, CostMode::fused}) {
                    const std::size_t m = n;  // square grid per suite config
                    std::vector<T> xs(n * d), ys(m * d);
                    for (auto &v : xs)
                        v = static_cast<T>(opts.scale * dist(rng));
                    for (auto &v : ys)
                        v = static_cast<T>(opts.scale * dist(rng));
                    SeriesBatch<T> x(xs, 1, n, d), y(ys, 1, m, d);
                    std::vector<double> xs64(xs.begin(), xs.end()),
                        ys64(ys.begin(), ys.end());
                    SeriesBatch<double> x64(xs64, 1, n, d),
                        y64(ys64, 1, m, d);

                    SdtwConfig cfg;
                    cfg.gamma = gamma;
                    cfg.cost_mode = mode;
                    cfg.backward_space = opts.backward_space;

                    auto out =
                        sdtw_with_gradients(x, y, cfg, opts.threads);

                    auto loss_fn = [&](const SeriesBatch<double> &xv) {
                        return forward(xv, y64, cfg, opts.threads).loss[0];
                    };
                    const auto fd =
                        oracle::fd_gradient(loss_fn, x64, opts.step);

                    GradCheckCase c{n, m, d, gamma, mode, 0.0, false};
                    for (std::size_t i = 0; i < fd.size(); ++i) {
                        const double a =
                            static_cast<double>(out.grads.grad_x[i]);
                        if (!std::isfinite(a)) {
                            c.nonfinite = true;
                            continue;
                        }
                        const double rel = std::abs(a - fd[i]) /
                                           std::max(1.0, std::abs(a));
                        c.worst_rel_error = std::max(c.worst_rel_error, rel);
                    }
                    report.cases.push_back(c);
                    report.worst_rel_error =
                        std::max(report.worst_rel_error, c.worst_rel_error);
                    report.any_nonfinite |= c.nonfinite;
                }

    report.passed =
        !report.any_nonfinite && report.worst_rel_error <= opts.tolerance;
    return report;
}

}  // namespace softdtw
