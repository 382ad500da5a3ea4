#include <doctest.h>

#include <cmath>

#include "rlab/calib.hpp"
#include "rlab/errors.hpp"
#include "rlab/gauss.hpp"

using namespace rlab;

namespace {

SyntheticSpec synth(int variant, bool hs, int H) {
  SyntheticSpec s;
  s.variant = variant;
  s.head_start = hs;
  s.H = H;
  return s;
}

}  // namespace

TEST_CASE("find_root on a cubic") {
  const auto f = [](double x) { return x * x * x - 2.0; };
  const double r = find_root(f, 0.0, 2.0);
  CHECK(r == doctest::Approx(std::cbrt(2.0)).epsilon(1e-8));
  RootOptions tight;
  tight.f_tol = 1e-13;
  const double r2 = find_root(f, 0.0, 2.0, tight);
  CHECK(std::fabs(f(r2)) <= 1e-13);
}

TEST_CASE("find_root bracket failure") {
  CHECK_THROWS_AS(find_root([](double x) { return x * x + 1.0; }, -1.0, 1.0), BracketError);
}

TEST_CASE("find_root midpoint monotonicity check") {
  RootOptions opts;
  opts.check_midpoint_monotone = true;
  // sign change, but the midpoint value overshoots both bracket values
  const auto f = [](double x) { return -1.0 + 2.0 * x + 6.0 * x * (1.0 - x); };
  CHECK_THROWS_AS(find_root(f, 0.0, 1.0, opts), NumericError);
  opts.check_midpoint_monotone = false;
  CHECK_NOTHROW(find_root(f, 0.0, 1.0, opts));
}

TEST_CASE("shewhart calibration hits the quantile") {
  ShewhartSpec tmpl;
  const double k = calibrate(tmpl, CalibrationTarget{500.0});
  CHECK(k == doctest::Approx(-std_normal_quantile(1.0 / 1000.0)).epsilon(1e-6));
  CHECK(k == doctest::Approx(3.0902).epsilon(3e-4));
}

TEST_CASE("synthetic calibrations reproduce the published limits") {
  const double expected[] = {2.2087, 2.0760, 2.0723, 1.9642};
  for (int v = 1; v <= 4; ++v) {
    const double k = calibrate(synth(v, false, 3), CalibrationTarget{500.0});
    CHECK(std::fabs(k - expected[v - 1]) < 5e-4);
  }
  const double k_hs = calibrate(synth(1, true, 3), CalibrationTarget{500.0});
  CHECK(std::fabs(k_hs - 2.2238) < 5e-4);
  // head-start limits sit above the plain ones
  for (int v = 1; v <= 4; ++v) {
    CHECK(calibrate(synth(v, true, 3), CalibrationTarget{500.0}) >
          calibrate(synth(v, false, 3), CalibrationTarget{500.0}));
  }
}

TEST_CASE("calibration is reproducible and verifiable") {
  const CalibrationTarget target{500.0};
  const double k_a = calibrate(synth(2, false, 4), target);
  const double k_b = calibrate(synth(2, false, 4), target);
  CHECK(std::fabs(k_a - k_b) < 1e-6);
  SyntheticSpec check = synth(2, false, 4);
  check.k1 = k_a;
  CHECK(chart_zero_state_arl(check, 0.0) == doctest::Approx(500.0).epsilon(1e-8));
}

TEST_CASE("in-control ARL is monotone in the free parameter") {
  for (int v = 1; v <= 4; ++v) {
    double prev = 0.0;
    for (double k1 = 1.6; k1 <= 2.8; k1 += 0.3) {
      SyntheticSpec s = synth(v, false, 4);
      s.k1 = k1;
      const double a = chart_zero_state_arl(s, 0.0);
      CHECK(a > prev);
      prev = a;
    }
  }
}

TEST_CASE("steady-state calibration measure is supported") {
  const CalibrationTarget target{500.0, ArlMeasure::steady_state_conditional};
  const double k = calibrate(synth(1, true, 3), target);
  SyntheticSpec s = synth(1, true, 3);
  s.k1 = k;
  CHECK(chart_steady_state_arl(s, 0.0) == doctest::Approx(500.0).epsilon(1e-8));
  // differs from the zero-state calibration of the head-start chart
  CHECK(std::fabs(k - 2.2238) > 1e-3);
}

TEST_CASE("combo inner calibration") {
  SUBCASE("wide k2 recovers the standalone limit") {
    const double k_plain = calibrate(synth(4, false, 6), CalibrationTarget{500.0});
    const double k_combo = calibrate_combo_inner(4, false, 6, 40.0, 500.0);
    CHECK(k_combo == doctest::Approx(k_plain).epsilon(1e-7));
  }
  SUBCASE("tight k2 forces a wider inner limit") {
    const double k_plain = calibrate(synth(4, false, 6), CalibrationTarget{500.0});
    const double k_combo = calibrate_combo_inner(4, false, 6, 3.1, 500.0);
    CHECK(k_combo > k_plain);
    SyntheticSpec s = synth(4, false, 6);
    s.k1 = k_combo;
    s.k2 = 3.1;
    CHECK(chart_zero_state_arl(s, 0.0) == doctest::Approx(500.0).epsilon(1e-8));
  }
  SUBCASE("infeasible when the Shewhart limit alone is too tight") {
    CHECK_THROWS_AS(calibrate_combo_inner(4, false, 6, 3.05, 500.0), InfeasibleComboError);
  }
}
