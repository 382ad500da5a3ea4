#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "oracles.hpp"
#include "rlab/gauss.hpp"

using namespace rlab;

TEST_CASE("cdf basics") {
  CHECK(std_normal_cdf(0.0) == doctest::Approx(0.5).epsilon(1e-15));
  // frozen from the erf series oracle
  const double ref = testing::phi_series(-3.09);
  CHECK(ref == doctest::Approx(0.0010008).epsilon(1e-4));
  CHECK(std_normal_cdf(-3.09) == doctest::Approx(ref).epsilon(1e-13));
  CHECK(std_normal_cdf(1.6448536) == doctest::Approx(0.95).epsilon(1e-7));
  CHECK(std_normal_quantile(0.95) == doctest::Approx(1.6448536269514722).epsilon(1e-12));
  CHECK(std_normal_cdf(38.5) == 1.0);
  CHECK(std_normal_cdf(-38.5) == 0.0);
}

TEST_CASE("cdf against quadrature on [-8, 8]") {
  for (double x = -8.0; x <= 8.0001; x += 0.25) {
    CHECK(std::fabs(std_normal_cdf(x) - testing::phi_quadrature(x)) < 1e-12);
  }
}

TEST_CASE("cdf symmetry and monotonicity") {
  double prev = -1.0;
  for (double x = -8.0; x <= 8.0001; x += 0.1) {
    const double f = std_normal_cdf(x);
    CHECK(std::fabs(f + std_normal_cdf(-x) - 1.0) < 1e-15);
    CHECK(f >= prev);
    prev = f;
  }
}

TEST_CASE("quantile inverts cdf") {
  for (double p = 0.001; p < 0.9995; p += 0.01) {
    CHECK(std_normal_cdf(std_normal_quantile(p)) == doctest::Approx(p).epsilon(1e-12));
  }
}

TEST_CASE("signal_prob basics") {
  CHECK(signal_prob(0.0, 0.7) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(signal_prob(2.0, 0.0) == doctest::Approx(2.0 * std_normal_cdf(-2.0)).epsilon(1e-14));
  const double p = signal_prob(3.09, 1.0);
  CHECK(p == doctest::Approx(1.0 - std_normal_cdf(2.09) + std_normal_cdf(-4.09)).epsilon(1e-13));
  CHECK(p == doctest::Approx(0.018326).epsilon(3e-4));
  CHECK(1.0 / p == doctest::Approx(54.6).epsilon(2e-3));
  CHECK_THROWS_AS(signal_prob(-0.5, 0.0), std::invalid_argument);
}

TEST_CASE("signal_prob symmetry and monotonicity") {
  for (double k : {0.5, 1.5, 2.5}) {
    for (double d : {0.0, 0.3, 1.0, 2.7}) {
      CHECK(signal_prob(k, d) == signal_prob(k, -d));
      CHECK(signal_prob(k, d) >= signal_prob(k, 0.0));
    }
  }
  for (double d : {0.0, 1.0}) {
    double prev = 2.0;
    for (double k = 0.0; k < 4.0; k += 0.2) {
      const double p = signal_prob(k, d);
      CHECK(p <= prev);
      prev = p;
    }
  }
}

TEST_CASE("event_probs") {
  SUBCASE("no combo, symmetric") {
    const EventProbs e = event_probs(2.0, std::nullopt, 0.0);
    CHECK(e.p_up == doctest::Approx(std_normal_cdf(-2.0)).epsilon(1e-14));
    CHECK(e.p_down == doctest::Approx(std_normal_cdf(-2.0)).epsilon(1e-14));
    CHECK(e.p_alarm == 0.0);
    CHECK(e.p_center + e.p_up + e.p_down + e.p_alarm == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("k2 = k1 rejected") { CHECK_THROWS_AS(event_probs(2.0, 2.0, 0.0), std::invalid_argument); }
  SUBCASE("combo components sum to one") {
    const EventProbs e = event_probs(2.0, 3.0, 1.0);
    CHECK(e.p_center + e.p_up + e.p_down + e.p_alarm == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(e.p_alarm > 0.0);
  }
  SUBCASE("tail sides recompose the signal probability") {
    for (double k : {0.8, 2.0, 3.1}) {
      for (double d : {0.0, 0.5, 1.5, 3.0}) {
        const EventProbs e = event_probs(k, std::nullopt, d);
        CHECK(e.p_up + e.p_down == doctest::Approx(signal_prob(k, d)).epsilon(1e-12));
      }
    }
  }
}
