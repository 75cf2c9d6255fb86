#pragma once

#include <cmath>
#include <cstddef>
#include <numeric>
#include <tuple>
#include <utility>
#include <vector>

#include "softdtw/backward.hpp"
#include "softdtw/forward.hpp"
#include "softdtw/types.hpp"

namespace softdtw {

/// A collection of K single-series members (B = 1 each, common feature dim;
/// lengths may differ) plus the smoothing and band parameters of the
/// objective sum_k w_k * sdtw_gamma(z, x^(k)).
template <class T>
struct BarycenterProblem {
    std::vector<SeriesBatch<T>> members;
    std::size_t target_length = 0;
    double gamma = 1.0;
    std::size_t bandwidth = 0;
    std::vector<double> weights;  // empty = all ones
    unsigned threads = 0;
};

template <class T>
void validate_problem(const BarycenterProblem<T> &prob)
{
    if (prob.members.empty())
        throw ValidationError("barycenter: need at least one member series");
    if (prob.target_length == 0)
        throw ValidationError("barycenter: target length must be >= 1");
    const std::size_t d = prob.members.front().feature_dim();
    for (const auto &s : prob.members) {
        if (s.batch_size() != 1)
            throw ValidationError("barycenter: members must have batch 1");
        if (s.feature_dim() != d)
            throw ValidationError("barycenter: members disagree on feature "
                                  "dim");
    }
    if (!prob.weights.empty()) {
        if (prob.weights.size() != prob.members.size())
            throw ValidationError("barycenter: weight count != member count");
        double sum = 0;
        for (double w : prob.weights) {
            if (w < 0)
                throw ValidationError("barycenter: negative weight");
            sum += w;
        }
        if (sum == 0)
            throw ValidationError("barycenter: all weights are zero");
    }
}

/// Objective value and gradient with respect to z at the current iterate.
/// The per-member forward/backward pairs are independent problems.
template <class T>
std::pair<double, std::vector<T>>
barycenter_objective(const SeriesBatch<T> &z, const BarycenterProblem<T> &prob)
{
    validate_problem(prob);
    if (z.batch_size() != 1 ||
        z.feature_dim() != prob.members.front().feature_dim())
        throw ValidationError("barycenter: z shape mismatch");

    SdtwConfig cfg;
    cfg.gamma = prob.gamma;
    cfg.bandwidth = prob.bandwidth;
    cfg.cost_mode = CostMode::unfused;
    cfg.backward_space = BackwardSpace::log_space;

    double value = 0;
    std::vector<T> grad(z.raw().size(), T(0));
    for (std::size_t k = 0; k < prob.members.size(); ++k) {
        const double w = prob.weights.empty() ? 1.0 : prob.weights[k];
        if (w == 0) continue;
        auto out = sdtw_with_gradients(z, prob.members[k], cfg, prob.threads);
        value += w * static_cast<double>(out.loss[0]);
        for (std::size_t i = 0; i < grad.size(); ++i)
            grad[i] += static_cast<T>(w) * out.grads.grad_x[i];
    }
    return {value, std::move(grad)};
}

struct AdamOptions {
    double lr = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::size_t max_iters = 200;
    double tol = 1e-6;
};

enum class BarycenterInit { euclidean_mean, member_copy, user_supplied };

template <class T>
struct BarycenterTrace {
    std::vector<double> objective_per_iteration;  // iterations_run + 1 values
    SeriesBatch<T> final_z;                       // best objective seen
    std::size_t iterations_run = 0;
    bool converged = false;
};

namespace detail {

template <class T>
SeriesBatch<T> initial_z(const BarycenterProblem<T> &prob, BarycenterInit init,
                         std::size_t member_index,
                         const SeriesBatch<T> *user_z)
{
    const std::size_t d = prob.members.front().feature_dim();
    switch (init) {
        case BarycenterInit::euclidean_mean: {
            for (const auto &s : prob.members)
                if (s.length() != prob.target_length)
                    throw ValidationError(
                        "barycenter: euclidean_mean init needs all member "
                        "lengths equal to the target length");
            std::vector<T> mean(prob.target_length * d, T(0));
            for (const auto &s : prob.members)
                for (std::size_t i = 0; i < mean.size(); ++i)
                    mean[i] += s.raw()[i];
            const T inv = T(1) / static_cast<T>(prob.members.size());
            for (auto &v : mean) v *= inv;
            return SeriesBatch<T>(std::move(mean), 1, prob.target_length, d);
        }
        case BarycenterInit::member_copy: {
            if (member_index >= prob.members.size())
                throw ValidationError("barycenter: member_copy index out of "
                                      "range");
            const auto &s = prob.members[member_index];
            if (s.length() != prob.target_length)
                throw ValidationError("barycenter: member_copy length != "
                                      "target length");
            return s;
        }
        case BarycenterInit::user_supplied:
            if (!user_z)
                throw ValidationError("barycenter: user_supplied init "
                                      "without a series");
            if (user_z->length() != prob.target_length ||
                user_z->feature_dim() != d)
                throw ValidationError("barycenter: user z shape mismatch");
            return *user_z;
    }
    throw ValidationError("barycenter: unknown init");
}

}  // namespace detail

/// Adam descent on the barycenter objective. Records the objective at every
/// iterate and returns the best-objective z encountered, not necessarily the
/// last. Convergence: relative objective change below tol for 5 consecutive
/// iterations. The objective is non-convex; restart from the trace if
/// needed.
template <class T>
BarycenterTrace<T> solve_barycenter(const BarycenterProblem<T> &prob,
                                    BarycenterInit init = BarycenterInit::
                                        euclidean_mean,
                                    const AdamOptions &opts = {},
                                    std::size_t member_index = 0,
                                    const SeriesBatch<T> *user_z = nullptr)
{
    validate_problem(prob);
    SeriesBatch<T> z =
        detail::initial_z(prob, init, member_index, user_z);

    BarycenterTrace<T> trace;
    auto [value, grad] = barycenter_objective(z, prob);
    trace.objective_per_iteration.push_back(value);
    trace.final_z = z;
    double best = value;

    std::vector<double> m1(grad.size(), 0.0), m2(grad.size(), 0.0);
    double prev = value;
    std::size_t calm = 0;

    for (std::size_t t = 1; t <= opts.max_iters; ++t) {
        const double bc1 = 1.0 - std::pow(opts.beta1, double(t));
        const double bc2 = 1.0 - std::pow(opts.beta2, double(t));
        for (std::size_t i = 0; i < grad.size(); ++i) {
            const double g = static_cast<double>(grad[i]);
            m1[i] = opts.beta1 * m1[i] + (1.0 - opts.beta1) * g;
            m2[i] = opts.beta2 * m2[i] + (1.0 - opts.beta2) * g * g;
            const double step =
                opts.lr * (m1[i] / bc1) / (std::sqrt(m2[i] / bc2) + opts.eps);
            z.raw()[i] -= static_cast<T>(step);
        }

        std::tie(value, grad) = barycenter_objective(z, prob);
        trace.objective_per_iteration.push_back(value);
        trace.iterations_run = t;
        if (value < best) {
            best = value;
            trace.final_z = z;
        }

        const double delta =
            std::abs(value - prev) / std::max(1.0, std::abs(value));
        calm = delta < opts.tol ? calm + 1 : 0;
        prev = value;
        if (calm >= 5) {
            trace.converged = true;
            break;
        }
    }
    return trace;
}

}  // namespace softdtw
