#include "rlab/calib.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "rlab/errors.hpp"

namespace rlab {

double find_root(const std::function<double(double)>& f, double lo, double hi,
                 const RootOptions& opts) {
  if (!(lo < hi)) throw std::invalid_argument("find_root: bracket must satisfy lo < hi");
  double flo = f(lo);
  double fhi = f(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if ((flo > 0.0) == (fhi > 0.0)) throw BracketError("find_root: no sign change over the bracket");
  if (opts.check_midpoint_monotone) {
    const double fm = f(0.5 * (lo + hi));
    const bool between = (flo < fm && fm < fhi) || (fhi < fm && fm < flo);
    if (!between) throw NumericError("find_root: response not monotone across the bracket");
  }
  double x0 = lo, f0 = flo;
  double x1 = hi, f1 = fhi;
  double checkpoint_width = hi - lo;  // bracket width two iterations ago
  for (int it = 0; it < opts.max_iterations; ++it) {
    double cand;
    if (f1 != f0) {
      cand = x1 - f1 * (x1 - x0) / (f1 - f0);
    } else {
      cand = 0.5 * (lo + hi);
    }
    if (!(cand > lo && cand < hi)) cand = 0.5 * (lo + hi);
    // secant can creep in from one side only; force a bisection whenever
    // the bracket failed to halve over two iterations
    if (it % 2 == 1 && (hi - lo) > 0.5 * checkpoint_width) cand = 0.5 * (lo + hi);
    if (it % 2 == 1) checkpoint_width = hi - lo;
    const double fc = f(cand);
    if (fc == 0.0 || std::fabs(fc) <= opts.f_tol) return cand;
    if ((fc > 0.0) == (fhi > 0.0)) {
      hi = cand;
      fhi = fc;
    } else {
      lo = cand;
      flo = fc;
    }
    x0 = x1;
    f0 = f1;
    x1 = cand;
    f1 = fc;
    if (hi - lo < opts.param_tol) break;
  }
  // the bracket is tighter than param_tol; its midpoint is the answer
  return 0.5 * (lo + hi);
}

namespace {

// A wide-open chart may never absorb; for calibration purposes that is an
// infinite ARL, not an error.
double arl_or_infinity(const std::function<double()>& eval) {
  try {
    return eval();
  } catch (const NonAbsorbingChainError&) {
    return std::numeric_limits<double>::infinity();
  }
}

struct FreeParam {
  double lo, hi;
  ChartSpec (*apply)(const ChartSpec&, double);
};

ChartSpec with_k1(const ChartSpec& t, double v) {
  auto s = std::get<SyntheticSpec>(t);
  s.k1 = v;
  return s;
}
ChartSpec with_c(const ChartSpec& t, double v) {
  auto s = std::get<EwmaSpec>(t);
  s.c = v;
  return s;
}
ChartSpec with_h(const ChartSpec& t, double v) {
  auto s = std::get<CusumSpec>(t);
  s.h = v;
  return s;
}
ChartSpec with_k(const ChartSpec& t, double v) {
  auto s = std::get<ShewhartSpec>(t);
  s.k = v;
  return s;
}

FreeParam free_param_of(const ChartSpec& spec) {
  if (const auto* s = std::get_if<SyntheticSpec>(&spec)) {
    double hi = 6.0;
    if (s->k2) hi = std::min(hi, *s->k2 * (1.0 - 1e-9));
    return {0.5, hi, &with_k1};
  }
  if (std::holds_alternative<EwmaSpec>(spec)) return {0.5, 6.0, &with_c};
  if (std::holds_alternative<CusumSpec>(spec)) return {0.1, 20.0, &with_h};
  return {0.5, 6.0, &with_k};
}

}  // namespace

double calibrate(const ChartSpec& spec_template, const CalibrationTarget& target) {
  if (!(target.arl0 > 1.0)) throw std::invalid_argument("calibrate: target ARL must exceed 1");
  FreeParam fp = free_param_of(spec_template);
  if (target.bracket.first != 0.0 || target.bracket.second != 0.0) {
    fp.lo = target.bracket.first;
    fp.hi = target.bracket.second;
  } else if (const auto* cs = std::get_if<CusumSpec>(&spec_template)) {
    // Product-chain evaluations are costly; seed the bracket from the
    // one-sided counter through 1/A_two ~ 2/A_one (good to about 1%).
    try {
      CusumSpec probe = *cs;
      RootOptions seed_opts;
      seed_opts.param_tol = 1e-6;
      const double h0 = find_root(
          [&](double h) {
            probe.h = h;
            return arl_or_infinity([&] { return cusum_one_sided_arl(probe, 0.0, true); }) -
                   2.0 * target.arl0;
          },
          0.02, 30.0, seed_opts);
      fp.lo = 0.85 * h0;
      fp.hi = 1.2 * h0;
    } catch (const NumericError&) {
      // fall back to the wide default bracket
    }
  }
  auto g = [&](double x) {
    return arl_or_infinity([&] { return chart_arl(fp.apply(spec_template, x), 0.0, target.measure); }) -
           target.arl0;
  };
  RootOptions opts;
  opts.param_tol = target.param_tol;
  opts.f_tol = target.rel_tol * target.arl0;
  for (int attempt = 0; attempt < 2; ++attempt) {
    try {
      return find_root(g, fp.lo, fp.hi, opts);
    } catch (const BracketError&) {
      if (attempt == 1) throw;
      fp.lo = std::max(fp.lo * 0.5, 1e-4);  // widen once, then give up
      if (!std::holds_alternative<SyntheticSpec>(spec_template)) fp.hi *= 2.0;
    }
  }
  throw BracketError("calibrate: unreachable");
}

double calibrate_combo_inner(int variant, bool head_start, int H, double k2, double arl0) {
  SyntheticSpec tmpl;
  tmpl.variant = variant;
  tmpl.head_start = head_start;
  tmpl.H = H;
  tmpl.k2 = k2;
  tmpl.k1 = std::min(2.0, 0.5 * k2);
  tmpl.validate();

  const double hi = k2 * (1.0 - 1e-9);
  auto arl_at = [&](double k1) {
    return arl_or_infinity([&] {
      SyntheticSpec s = tmpl;
      s.k1 = k1;
      const MarkovModel m = build_chain(s, 0.0);
      return zero_state_arl(m, arl_vector(m.q));
    });
  };
  if (arl_at(hi) < arl0) {
    throw InfeasibleComboError(
        "calibrate_combo_inner: Shewhart limit alone keeps the in-control ARL below target");
  }
  const double lo = 0.05;
  RootOptions opts;
  opts.f_tol = 1e-10 * arl0;
  return find_root([&](double x) { return arl_at(x) - arl0; }, lo, hi, opts);
}

}  // namespace rlab
