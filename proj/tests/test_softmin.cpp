#include <cmath>
#include <random>

#include "doctest.h"
#include "softdtw/softmin.hpp"

using namespace softdtw;

static constexpr double inf = kInf<double>;

TEST_CASE("softmin basics")
{
    CHECK(softmin(0.0, inf, inf, 1.0) == 0.0);
    CHECK(softmin(1.0, 1.0, 1.0, 1.0) ==
          doctest::Approx(1.0 - std::log(3.0)).epsilon(1e-12));
    // -log(1 + 2 e^{-1})
    CHECK(softmin(0.0, 1.0, 1.0, 1.0) ==
          doctest::Approx(-std::log(1.0 + 2.0 * std::exp(-1.0)))
              .epsilon(1e-12));
    CHECK(std::isinf(softmin(inf, inf, inf, 1.0)));
    CHECK(softmin(inf, inf, inf, 1.0) > 0);
}

TEST_CASE("softmin absorbs huge values without overflow")
{
    CHECK(std::isfinite(softmin(1e8, 1e8, 1e8, 1e-3)));
    CHECK(softmin(0.0, 1e8, inf, 1e-3) == doctest::Approx(0.0));
}

TEST_CASE("softmin bounds and monotonicity")
{
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> val(-50.0, 50.0);
    std::uniform_real_distribution<double> gam(0.01, 10.0);
    for (int trial = 0; trial < 500; ++trial) {
        const double a = val(rng), b = val(rng), c = val(rng);
        const double g = gam(rng);
        const double mn = std::min(a, std::min(b, c));
        const double s = softmin(a, b, c, g);
        CHECK(s <= mn + 1e-12);
        CHECK(s >= mn - g * std::log(3.0) - 1e-12);
        // monotone in each argument
        CHECK(softmin(a + 0.5, b, c, g) >= s);
        // decreasing gamma tightens upward toward the hard min
        CHECK(softmin(a, b, c, g * 0.5) >= s - 1e-12);
    }
}

TEST_CASE("logsumexp3 basics")
{
    CHECK(logsumexp3(0.0, 0.0, 0.0) ==
          doctest::Approx(std::log(3.0)).epsilon(1e-12));
    CHECK(logsumexp3(2.5, -inf, -inf) == 2.5);
    CHECK(logsumexp3(700.0, 700.0, 700.0) ==
          doctest::Approx(700.0 + std::log(3.0)).epsilon(1e-12));
    CHECK(logsumexp3(-inf, -inf, -inf) == -inf);
}

TEST_CASE("smooth triple max shift")
{
    SmoothTriple<double> t{1.0, -2.0, 0.5};
    CHECK(t.max_shift() == 1.0);
    CHECK(t.min_value() == -2.0);
    CHECK(softmin(t, 1.0) == softmin(1.0, -2.0, 0.5, 1.0));
    CHECK(logsumexp3(t) == logsumexp3(1.0, -2.0, 0.5));
}
