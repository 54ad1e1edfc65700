#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include <doctest.h>

#include "oracles.hpp"
#include "repconf/bayes.hpp"

using repconf::bayes::BetaParams;
using repconf::bayes::beta_hdi;
using repconf::bayes::beta_mean;
using repconf::bayes::beta_quantile;
using repconf::bayes::posterior_update;
using repconf::bayes::reg_inc_beta;

namespace {

// Dyadic shape draws (multiples of 0.5) keep double addition associative, so
// exact-equality checks on sequential vs pooled updates are meaningful.
double dyadic_shape(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> halves(1, 2000);
  return 0.5 * halves(rng);
}

}  // namespace

TEST_CASE("posterior_update adds evidence to the shape parameters") {
  const BetaParams post = posterior_update({5.0, 5.0}, 10, 10);
  CHECK(post == BetaParams{15.0, 5.0});

  const BetaParams near_half = posterior_update({200.0, 200.0}, 7, 10);
  CHECK(near_half == BetaParams{207.0, 203.0});
}

TEST_CASE("posterior mean of Beta(207,203)") {
  CHECK(std::abs(beta_mean({207.0, 203.0}) - 0.50488) < 1e-5);
  CHECK(beta_mean({15.0, 5.0}) == 0.75);
}

TEST_CASE("posterior_update rejects inconsistent evidence") {
  CHECK_THROWS_AS(posterior_update({1.0, 1.0}, 5, 4), std::invalid_argument);
  CHECK_THROWS_AS(posterior_update({1.0, 1.0}, -1, 4), std::invalid_argument);
  CHECK_THROWS_AS(posterior_update({0.0, 1.0}, 1, 4), std::invalid_argument);
}

TEST_CASE("sequential and pooled updates agree bit-exactly") {
  std::mt19937_64 rng(20240811);
  std::uniform_int_distribution<std::int64_t> trials_dist(0, 1000);
  for (int i = 0; i < 1000; ++i) {
    const BetaParams prior{dyadic_shape(rng), dyadic_shape(rng)};
    const std::int64_t n1 = trials_dist(rng);
    const std::int64_t n2 = trials_dist(rng);
    const std::int64_t y1 = std::uniform_int_distribution<std::int64_t>(0, n1)(rng);
    const std::int64_t y2 = std::uniform_int_distribution<std::int64_t>(0, n2)(rng);
    const BetaParams sequential = posterior_update(posterior_update(prior, y1, n1), y2, n2);
    const BetaParams pooled = posterior_update(prior, y1 + y2, n1 + n2);
    REQUIRE(sequential == pooled);
  }
}

TEST_CASE("reg_inc_beta matches the integration oracle") {
  // Binomial identity: I_0.75(15,5) = P(Bin(19, 0.75) >= 15) = 0.465424...
  CHECK(std::abs(reg_inc_beta(0.75, 15.0, 5.0) - 0.46542) < 1e-4);

  const oracle::BetaCdfTable table(15.0, 5.0);
  for (double x : {0.1, 0.3, 0.5, 0.6, 0.75, 0.9, 0.99}) {
    CHECK(std::abs(reg_inc_beta(x, 15.0, 5.0) - table.cdf(x)) < 1e-8);
  }
}

TEST_CASE("reg_inc_beta domain checks") {
  CHECK_THROWS_AS(reg_inc_beta(-0.1, 2.0, 2.0), std::invalid_argument);
  CHECK_THROWS_AS(reg_inc_beta(1.1, 2.0, 2.0), std::invalid_argument);
  CHECK_THROWS_AS(reg_inc_beta(0.5, 0.0, 2.0), std::invalid_argument);
  CHECK(reg_inc_beta(0.0, 2.0, 2.0) == 0.0);
  CHECK(reg_inc_beta(1.0, 2.0, 2.0) == 1.0);
}

TEST_CASE("reg_inc_beta is nondecreasing and symmetric") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> log_shape(0.0, 3.0);
  for (int trial = 0; trial < 50; ++trial) {
    const double a = std::pow(10.0, log_shape(rng));
    const double b = std::pow(10.0, log_shape(rng));
    double prev = 0.0;
    for (int i = 1; i < 100; ++i) {
      const double x = i / 100.0;
      const double cur = reg_inc_beta(x, a, b);
      CHECK(cur + 1e-12 >= prev);
      CHECK(std::abs(cur + reg_inc_beta(1.0 - x, b, a) - 1.0) < 1e-9);
      prev = cur;
    }
  }
}

TEST_CASE("beta_quantile example and round trip") {
  CHECK(std::abs(beta_quantile({15.0, 5.0}, 0.025) - 0.544) < 1e-2);

  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> log_shape(0.0, 3.0);
  for (int trial = 0; trial < 30; ++trial) {
    const BetaParams p{std::pow(10.0, log_shape(rng)), std::pow(10.0, log_shape(rng))};
    for (int i = 1; i < 100; ++i) {
      const double q = i / 100.0;
      CHECK(std::abs(reg_inc_beta(beta_quantile(p, q), p.a, p.b) - q) < 1e-6);
    }
    // Other direction, restricted to x whose probability lies in (0.01, 0.99)
    // so the flat tails stay out of the comparison.
    for (int i = 1; i < 40; ++i) {
      const double x = i / 40.0;
      const double q = reg_inc_beta(x, p.a, p.b);
      if (q <= 0.01 || q >= 0.99) continue;
      CHECK(std::abs(beta_quantile(p, q) - x) < 1e-6);
    }
  }
}

TEST_CASE("beta_quantile rejects out-of-range targets") {
  CHECK_THROWS_AS(beta_quantile({2.0, 2.0}, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(beta_quantile({2.0, 2.0}, 1.0), std::invalid_argument);
}

TEST_CASE("hdi of a symmetric weak posterior") {
  const auto hdi = beta_hdi({5.0, 5.0});
  CHECK(std::abs(hdi.lo - 0.212) < 5e-3);
  CHECK(std::abs(hdi.hi - 0.788) < 5e-3);
  CHECK(hdi.mass == 0.95);
}

TEST_CASE("hdi holds the requested mass and is narrowest under perturbation") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> log_shape(0.05, 3.0);
  for (int trial = 0; trial < 40; ++trial) {
    const BetaParams p{std::pow(10.0, log_shape(rng)), std::pow(10.0, log_shape(rng))};
    const auto hdi = beta_hdi(p);
    const double mass = reg_inc_beta(hdi.hi, p.a, p.b) - reg_inc_beta(hdi.lo, p.a, p.b);
    CHECK(std::abs(mass - 0.95) < 1e-6);

    const double t0 = reg_inc_beta(hdi.lo, p.a, p.b);
    for (double delta : {-1e-2, -1e-3, -1e-4, 1e-4, 1e-3, 1e-2}) {
      const double t = t0 + delta;
      if (t <= 0.0 || t + 0.95 >= 1.0) continue;
      const double width = beta_quantile(p, t + 0.95) - beta_quantile(p, t);
      CHECK(width >= hdi.width() - 1e-5);
    }
  }
}

TEST_CASE("hdi equal-tailed fallback for non-unimodal shapes") {
  const BetaParams p{1.0, 5.0};
  const auto hdi = beta_hdi(p);
  CHECK(hdi.lo == doctest::Approx(beta_quantile(p, 0.025)).epsilon(1e-12));
  CHECK(hdi.hi == doctest::Approx(beta_quantile(p, 0.975)).epsilon(1e-12));
}

TEST_CASE("hdi mass parameter validation") {
  CHECK_THROWS_AS(beta_hdi({2.0, 2.0}, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(beta_hdi({2.0, 2.0}, 1.0), std::invalid_argument);
}
