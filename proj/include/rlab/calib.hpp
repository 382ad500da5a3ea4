#pragma once

#include <functional>
#include <utility>

#include "rlab/charts.hpp"

namespace rlab {

/// What the calibrated chart must achieve at delta = 0.
struct CalibrationTarget {
  double arl0 = 500.0;
  ArlMeasure measure = ArlMeasure::zero_state;
  // {0,0} selects the per-chart default bracket (k,c in [0.5,6], h in [0.1,20]).
  std::pair<double, double> bracket{0.0, 0.0};
  double param_tol = 1e-9;
  double rel_tol = 1e-10;
};

struct RootOptions {
  double param_tol = 1e-9;
  double f_tol = 0.0;  // absolute tolerance on f
  int max_iterations = 200;
  bool check_midpoint_monotone = false;
};

/// Root of a continuous monotone f on [lo, hi] by bisection safeguarded
/// secant steps. Throws BracketError when f(lo), f(hi) share a sign.
double find_root(const std::function<double(double)>& f, double lo, double hi,
                 const RootOptions& opts = {});

/// Solves in-control ARL(free parameter) = target for the chart's free
/// parameter: k1 (synthetic), c (EWMA), h (CUSUM), k (Shewhart). The bracket
/// is widened once if the default fails.
double calibrate(const ChartSpec& spec_template, const CalibrationTarget& target);

/// Inner warning limit of a Shewhart-synthetic combo at fixed k2 so that the
/// combined in-control zero-state ARL hits `arl0`. Throws
/// InfeasibleComboError when the Shewhart limit alone already signals too
/// often (ARL below target even as k1 approaches k2).
double calibrate_combo_inner(int variant, bool head_start, int H, double k2, double arl0);

}  // namespace rlab
