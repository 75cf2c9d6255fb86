#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "softdtw/barycenter.hpp"
#include "softdtw/datasets.hpp"
#include "softdtw/oracle.hpp"

using namespace softdtw;

namespace {

BarycenterProblem<double> two_member_problem()
{
    BarycenterProblem<double> prob;
    prob.members.push_back(SeriesBatch<double>({0.0, 0.0, 1.0, 1.0}, 1, 4, 1));
    prob.members.push_back(SeriesBatch<double>({0.0, 1.0, 1.0, 0.0}, 1, 4, 1));
    prob.target_length = 4;
    return prob;
}

}  // namespace

TEST_CASE("problem validation")
{
    BarycenterProblem<double> empty;
    empty.target_length = 4;
    CHECK_THROWS_AS(validate_problem(empty), ValidationError);

    auto prob = two_member_problem();
    CHECK_NOTHROW(validate_problem(prob));

    auto zero_len = prob;
    zero_len.target_length = 0;
    CHECK_THROWS_AS(validate_problem(zero_len), ValidationError);

    auto mismatched = prob;
    mismatched.members.push_back(
        SeriesBatch<double>({0.0, 1.0, 0.0, 1.0, 0.0, 1.0}, 1, 3, 2));
    CHECK_THROWS_AS(validate_problem(mismatched), ValidationError);

    auto batched = prob;
    batched.members.push_back(
        SeriesBatch<double>({0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0}, 2, 4,
                            1));
    CHECK_THROWS_AS(validate_problem(batched), ValidationError);

    auto bad_weights = prob;
    bad_weights.weights = {1.0};
    CHECK_THROWS_AS(validate_problem(bad_weights), ValidationError);
    bad_weights.weights = {1.0, -0.5};
    CHECK_THROWS_AS(validate_problem(bad_weights), ValidationError);
    bad_weights.weights = {0.0, 0.0};
    CHECK_THROWS_AS(validate_problem(bad_weights), ValidationError);
    bad_weights.weights = {2.0, 1.0};
    CHECK_NOTHROW(validate_problem(bad_weights));
}

TEST_CASE("objective equals the weighted sum of member losses")
{
    auto prob = two_member_problem();
    prob.weights = {2.0, 0.5};
    SeriesBatch<double> z({0.1, 0.4, 0.9, 0.6}, 1, 4, 1);
    auto [value, grad] = barycenter_objective(z, prob);

    double expect = 0;
    const double ws[] = {2.0, 0.5};
    for (std::size_t k = 0; k < 2; ++k)
        expect += ws[k] *
                  oracle::naive_softdtw(z, prob.members[k], prob.gamma).loss;
    CHECK(value == doctest::Approx(expect).epsilon(1e-12));
    CHECK(grad.size() == 4);
}

TEST_CASE("objective gradient matches finite differences")
{
    auto prob = two_member_problem();
    prob.gamma = 0.5;
    SeriesBatch<double> z({0.3, 0.1, 0.8, 0.4}, 1, 4, 1);
    auto [value, grad] = barycenter_objective(z, prob);
    (void)value;
    auto fd = oracle::fd_gradient(
        [&](const SeriesBatch<double> &zv) {
            return barycenter_objective(zv, prob).first;
        },
        z, 1e-6);
    for (std::size_t i = 0; i < fd.size(); ++i)
        CHECK(grad[i] == doctest::Approx(fd[i]).epsilon(1e-5));
}

TEST_CASE("zero-weight members do not influence the objective")
{
    auto prob = two_member_problem();
    SeriesBatch<double> z({0.1, 0.2, 0.3, 0.4}, 1, 4, 1);
    prob.weights = {1.0, 0.0};
    auto [v_masked, g_masked] = barycenter_objective(z, prob);

    BarycenterProblem<double> solo;
    solo.members.push_back(prob.members[0]);
    solo.target_length = 4;
    auto [v_solo, g_solo] = barycenter_objective(z, solo);
    CHECK(v_masked == v_solo);
    for (std::size_t i = 0; i < g_solo.size(); ++i)
        CHECK(g_masked[i] == g_solo[i]);
}

TEST_CASE("initializers")
{
    auto prob = two_member_problem();
    auto mean = detail::initial_z<double>(prob, BarycenterInit::euclidean_mean, 0,
                                  nullptr);
    CHECK(mean.at(0, 0, 0) == 0.0);
    CHECK(mean.at(0, 1, 0) == 0.5);
    CHECK(mean.at(0, 2, 0) == 1.0);
    CHECK(mean.at(0, 3, 0) == 0.5);

    auto copy =
        detail::initial_z<double>(prob, BarycenterInit::member_copy, 1, nullptr);
    CHECK(copy.at(0, 1, 0) == 1.0);
    CHECK_THROWS_AS(
        detail::initial_z<double>(prob, BarycenterInit::member_copy, 7, nullptr),
        ValidationError);

    SeriesBatch<double> user({1.0, 2.0, 3.0, 4.0}, 1, 4, 1);
    auto z = detail::initial_z<double>(prob, BarycenterInit::user_supplied, 0, &user);
    CHECK(z.at(0, 3, 0) == 4.0);
    CHECK_THROWS_AS(
        detail::initial_z<double>(prob, BarycenterInit::user_supplied, 0, nullptr),
        ValidationError);

    // Mean init requires all members to match the target length.
    auto ragged = prob;
    ragged.members.push_back(SeriesBatch<double>({0.5, 0.5}, 1, 2, 1));
    CHECK_THROWS_AS(
        detail::initial_z<double>(ragged, BarycenterInit::euclidean_mean, 0, nullptr),
        ValidationError);
}

TEST_CASE("barycenter of one member converges toward that member")
{
    BarycenterProblem<double> prob;
    prob.members.push_back(
        SeriesBatch<double>({0.0, 0.5, 1.0, 0.5, 0.0}, 1, 5, 1));
    prob.target_length = 5;
    prob.gamma = 0.1;

    SeriesBatch<double> z0({0.2, 0.2, 0.2, 0.2, 0.2}, 1, 5, 1);
    AdamOptions opts;
    opts.lr = 0.05;
    opts.max_iters = 300;
    auto trace = solve_barycenter(prob, BarycenterInit::user_supplied, opts, 0,
                                  &z0);
    // sdtw(z, x) is minimized near z = x; the final objective should drop
    // close to the self-alignment floor sdtw(x, x).
    const double floor =
        oracle::naive_softdtw(prob.members[0], prob.members[0], prob.gamma)
            .loss;
    CHECK(trace.objective_per_iteration.back() <
          0.25 * trace.objective_per_iteration.front());
    const double best = *std::min_element(
        trace.objective_per_iteration.begin(),
        trace.objective_per_iteration.end());
    CHECK(best < floor + 0.05);
}

TEST_CASE("trace bookkeeping: best-so-far and per-iteration record")
{
    auto prob = two_member_problem();
    AdamOptions opts;
    opts.max_iters = 25;
    auto trace = solve_barycenter(prob, BarycenterInit::euclidean_mean, opts);
    CHECK(trace.objective_per_iteration.size() == trace.iterations_run + 1);
    // final_z carries the best objective seen anywhere in the trace.
    auto [refreshed, g] = barycenter_objective(trace.final_z, prob);
    (void)g;
    const double best = *std::min_element(
        trace.objective_per_iteration.begin(),
        trace.objective_per_iteration.end());
    CHECK(refreshed == doctest::Approx(best).epsilon(1e-12));
    CHECK(best <= trace.objective_per_iteration.front());
}

TEST_CASE("blockwave barycenter descends substantially")
{
    auto members = generate_dataset(DatasetKind::blockwave, 6, 48, 1, 0.05,
                                    123);
    BarycenterProblem<double> prob;
    prob.members = std::move(members);
    prob.target_length = 48;
    prob.gamma = 1.0;

    AdamOptions opts;
    opts.lr = 0.01;
    opts.max_iters = 60;
    auto trace = solve_barycenter(prob, BarycenterInit::euclidean_mean, opts);
    const double first = trace.objective_per_iteration.front();
    const double last = trace.objective_per_iteration.back();
    CHECK(last < first);
    // Best-so-far sequence is nonincreasing by construction.
    double best = first;
    for (double v : trace.objective_per_iteration) {
        best = std::min(best, v);
        CHECK(best <= first);
    }
}

TEST_CASE("convergence flag fires on a flat objective")
{
    BarycenterProblem<double> prob;
    prob.members.push_back(SeriesBatch<double>({1.0, 1.0, 1.0}, 1, 3, 1));
    prob.target_length = 3;
    AdamOptions opts;
    opts.max_iters = 200;
    opts.tol = 1e-4;
    SeriesBatch<double> z0({1.0, 1.0, 1.0}, 1, 3, 1);
    auto trace = solve_barycenter(prob, BarycenterInit::user_supplied, opts, 0,
                                  &z0);
    CHECK(trace.converged);
    CHECK(trace.iterations_run < opts.max_iters);
}
