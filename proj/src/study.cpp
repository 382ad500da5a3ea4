#include "rlab/study.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <map>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "rlab/errors.hpp"
#include "rlab/parallel.hpp"

namespace rlab {

int worker_count() {
  if (const char* env = std::getenv("RL_LAB_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) return static_cast<int>(v);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

void parallel_for(int n, const std::function<void(int)>& fn) {
  const int workers = std::min(worker_count(), n);
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr first_error;
  std::mutex err_mu;
  auto body = [&]() {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mu);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int i = 0; i < workers; ++i) pool.emplace_back(body);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

namespace {

std::int64_t key_bits(std::optional<double> v) {
  return v ? static_cast<std::int64_t>(std::bit_cast<std::uint64_t>(*v)) : -1;
}

}  // namespace

struct StudyContext::Impl {
  std::mutex mu;
  // (variant, head_start, H, k2 bits) -> k1
  std::map<std::tuple<int, int, int, std::int64_t>, double> k1;
  // same key -> in-control psi1
  std::map<std::tuple<int, int, int, std::int64_t>, std::vector<double>> psi1;
  // (variant, head_start, H, k2 bits, delta bits) -> arls
  std::map<std::tuple<int, int, int, std::int64_t, std::int64_t>, ZeroSteady> evals;
  // (lambda bits, style, k2 bits, n_grid) -> c
  std::map<std::tuple<std::int64_t, int, std::int64_t, int>, double> ewma_c;
  // (lambda bits, style, k2 bits, n_grid) -> in-control psi1 of the
  // asymptotic chain
  std::map<std::tuple<std::int64_t, int, std::int64_t, int>, std::vector<double>> ewma_psi1;
};

std::shared_ptr<StudyContext::Impl> StudyContext::make_impl() { return std::make_shared<Impl>(); }

double StudyContext::synthetic_k1(int variant, bool head_start, int H, std::optional<double> k2) {
  const auto key = std::make_tuple(variant, head_start ? 1 : 0, H, key_bits(k2));
  {
    std::lock_guard<std::mutex> lock(impl_->mu);
    auto it = impl_->k1.find(key);
    if (it != impl_->k1.end()) return it->second;
  }
  double value;
  if (k2) {
    value = calibrate_combo_inner(variant, head_start, H, *k2, arl0_);
  } else {
    SyntheticSpec tmpl;
    tmpl.variant = variant;
    tmpl.head_start = head_start;
    tmpl.H = H;
    value = calibrate(tmpl, CalibrationTarget{arl0_});
  }
  std::lock_guard<std::mutex> lock(impl_->mu);
  impl_->k1.emplace(key, value);
  return value;
}

double StudyContext::ewma_c(double lambda, EwmaLimits style, std::optional<double> k2) {
  EwmaSpec tmpl;
  tmpl.lambda = lambda;
  tmpl.limit_style = style;
  tmpl.k2 = k2;
  const auto key = std::make_tuple(key_bits(lambda), static_cast<int>(style), key_bits(k2), tmpl.n_grid);
  {
    std::lock_guard<std::mutex> lock(impl_->mu);
    auto it = impl_->ewma_c.find(key);
    if (it != impl_->ewma_c.end()) return it->second;
  }
  const double value = calibrate(tmpl, CalibrationTarget{arl0_});
  std::lock_guard<std::mutex> lock(impl_->mu);
  impl_->ewma_c.emplace(key, value);
  return value;
}

ZeroSteady StudyContext::synthetic_arls(int variant, bool head_start, int H, double delta,
                                        std::optional<double> k2) {
  const auto ekey = std::make_tuple(variant, head_start ? 1 : 0, H, key_bits(k2), key_bits(delta));
  {
    std::lock_guard<std::mutex> lock(impl_->mu);
    auto it = impl_->evals.find(ekey);
    if (it != impl_->evals.end()) return it->second;
  }
  const double k1 = synthetic_k1(variant, head_start, H, k2);
  SyntheticSpec spec;
  spec.variant = variant;
  spec.head_start = head_start;
  spec.H = H;
  spec.k1 = k1;
  spec.k2 = k2;

  const auto pkey = std::make_tuple(variant, head_start ? 1 : 0, H, key_bits(k2));
  std::vector<double> psi;
  {
    std::lock_guard<std::mutex> lock(impl_->mu);
    auto it = impl_->psi1.find(pkey);
    if (it != impl_->psi1.end()) psi = it->second;
  }
  if (psi.empty()) {
    psi = dominant_left_eigen(build_chain(spec, 0.0).q).psi;
    std::lock_guard<std::mutex> lock(impl_->mu);
    impl_->psi1.emplace(pkey, psi);
  }

  const MarkovModel oc = build_chain(spec, delta);
  const std::vector<double> ell = arl_vector(oc.q);
  ZeroSteady zs;
  zs.zero = zero_state_arl(oc, ell);
  zs.steady = steady_state_arl(psi, ell);
  std::lock_guard<std::mutex> lock(impl_->mu);
  impl_->evals.emplace(ekey, zs);
  return zs;
}

std::vector<ZeroSteady> StudyContext::sweep_H(int variant, bool head_start, double delta, int H_max) {
  if (H_max < 1) throw std::invalid_argument("sweep_H: H_max must be >= 1");
  std::vector<ZeroSteady> out(static_cast<std::size_t>(H_max));
  parallel_for(H_max, [&](int i) {
    out[static_cast<std::size_t>(i)] = synthetic_arls(variant, head_start, i + 1, delta);
  });
  return out;
}

double StudyContext::ewma_arl_of(double lambda, EwmaLimits style, double delta, ArlMeasure measure,
                                 std::optional<double> k2) {
  EwmaSpec spec;
  spec.lambda = lambda;
  spec.limit_style = style;
  spec.k2 = k2;
  spec.c = ewma_c(lambda, style, k2);
  if (measure == ArlMeasure::zero_state) return ewma_arl(spec, delta);

  // Steady state: in-control occupancy of the asymptotic chain is shift
  // independent, cache it.
  const auto key = std::make_tuple(key_bits(lambda), static_cast<int>(style), key_bits(k2), spec.n_grid);
  std::vector<double> psi;
  {
    std::lock_guard<std::mutex> lock(impl_->mu);
    auto it = impl_->ewma_psi1.find(key);
    if (it != impl_->ewma_psi1.end()) psi = it->second;
  }
  EwmaSpec hom = spec;
  hom.limit_style = EwmaLimits::fixed_asymptotic;
  if (psi.empty()) {
    psi = dominant_left_eigen(ewma_model(hom, 0.0).q).psi;
    std::lock_guard<std::mutex> lock(impl_->mu);
    impl_->ewma_psi1.emplace(key, psi);
  }
  return steady_state_arl(psi, arl_vector(ewma_model(hom, delta).q));
}

int optimal_H(StudyContext& ctx, int variant, bool head_start, double delta, ArlMeasure measure,
              int H_max, double slack, int plateau_start) {
  const std::vector<ZeroSteady> sweep = ctx.sweep_H(variant, head_start, delta, H_max);
  auto value = [&](int i) {
    return measure == ArlMeasure::zero_state ? sweep[static_cast<std::size_t>(i)].zero
                                             : sweep[static_cast<std::size_t>(i)].steady;
  };
  int h_star = 1;
  double best = value(0);
  for (int i = 1; i < H_max; ++i) {
    if (value(i) < best) {
      best = value(i);
      h_star = i + 1;
    }
  }
  if (h_star <= plateau_start) return h_star;
  for (int i = 0; i < H_max; ++i) {
    if (value(i) <= (1.0 + slack) * best) return i + 1;
  }
  return h_star;
}

EnvelopeResult envelope(StudyContext& ctx, int variant, bool head_start,
                        const std::vector<double>& delta_grid, ArlMeasure measure, int H_max) {
  EnvelopeResult result;
  result.measure = measure;
  result.delta_grid = delta_grid;
  const std::size_t nd = delta_grid.size();
  result.best_H.resize(nd);
  result.best_arl.resize(nd);
  result.ewma_exact.resize(nd);
  result.ewma_fixed.resize(nd);
  for (std::size_t di = 0; di < nd; ++di) {
    const double delta = delta_grid[di];
    const std::vector<ZeroSteady> sweep = ctx.sweep_H(variant, head_start, delta, H_max);
    int best_h = 1;
    double best = measure == ArlMeasure::zero_state ? sweep[0].zero : sweep[0].steady;
    for (int i = 1; i < H_max; ++i) {
      const double v = measure == ArlMeasure::zero_state ? sweep[static_cast<std::size_t>(i)].zero
                                                         : sweep[static_cast<std::size_t>(i)].steady;
      if (v < best) {
        best = v;
        best_h = i + 1;
      }
    }
    result.best_H[di] = best_h;
    result.best_arl[di] = best;
    result.ewma_exact[di] = ctx.ewma_arl_of(0.25, EwmaLimits::exact_varying, delta, measure);
    result.ewma_fixed[di] = ctx.ewma_arl_of(0.25, EwmaLimits::fixed_asymptotic, delta, measure);
  }
  return result;
}

CedBattery ced_battery(StudyContext& ctx, int variant, bool head_start,
                       const std::vector<int>& H_set, double delta, int tau_max,
                       const std::vector<double>& ewma_lambdas) {
  if (H_set.empty()) throw std::invalid_argument("ced_battery: H_set must not be empty");
  CedBattery battery;
  battery.profiles.resize(H_set.size() + ewma_lambdas.size());
  parallel_for(static_cast<int>(H_set.size()), [&](int i) {
    const int H = H_set[static_cast<std::size_t>(i)];
    SyntheticSpec spec;
    spec.variant = variant;
    spec.head_start = head_start;
    spec.H = H;
    spec.k1 = ctx.synthetic_k1(variant, head_start, H);
    CedBatteryProfile p;
    p.chart = chart_label(ChartSpec{spec});
    p.H = H;
    p.param = spec.k1;
    const MarkovModel ic = build_chain(spec, 0.0);
    const MarkovModel oc = build_chain(spec, delta);
    p.profile = ced_profile(ic.q, oc.q, ic.init, tau_max);
    battery.profiles[static_cast<std::size_t>(i)] = std::move(p);
  });
  for (std::size_t li = 0; li < ewma_lambdas.size(); ++li) {
    EwmaSpec spec;
    spec.lambda = ewma_lambdas[li];
    spec.limit_style = EwmaLimits::exact_varying;
    spec.c = ctx.ewma_c(spec.lambda, spec.limit_style);
    CedBatteryProfile p;
    p.chart = chart_label(ChartSpec{spec});
    p.lambda = spec.lambda;
    p.param = spec.c;
    p.profile = ewma_ced(spec, delta, tau_max);
    battery.profiles[H_set.size() + li] = std::move(p);
  }

  if (variant == 4) {
    battery.best_zero_H = optimal_H(ctx, variant, head_start, delta, ArlMeasure::zero_state);
    battery.best_steady_H = optimal_H(ctx, variant, head_start, delta, ArlMeasure::steady_state_conditional);
  } else {
    double best_zero = 0.0, best_steady = 0.0;
    for (std::size_t i = 0; i < H_set.size(); ++i) {
      const auto& prof = battery.profiles[i].profile;
      const double d1 = prof.values.front();
      const double lim = prof.limit;
      if (i == 0 || d1 < best_zero) {
        best_zero = d1;
        battery.best_zero_H = H_set[i];
      }
      if (i == 0 || lim < best_steady) {
        best_steady = lim;
        battery.best_steady_H = H_set[i];
      }
    }
  }
  return battery;
}

EqlScore eql(const ChartSpec& spec, ArlMeasure measure, double delta_max, double step) {
  if (!(delta_max > 0.0) || !(step > 0.0)) throw std::invalid_argument("eql: bad grid");
  validate(spec);
  const int n = static_cast<int>(std::llround(delta_max / step));

  // Hoist the shift-independent in-control pieces.
  std::vector<double> psi;
  const auto* synth = std::get_if<SyntheticSpec>(&spec);
  const auto* ew = std::get_if<EwmaSpec>(&spec);
  if (measure == ArlMeasure::steady_state_conditional) {
    if (synth) psi = dominant_left_eigen(build_chain(*synth, 0.0).q).psi;
    if (ew) {
      EwmaSpec hom = *ew;
      hom.limit_style = EwmaLimits::fixed_asymptotic;
      psi = dominant_left_eigen(ewma_model(hom, 0.0).q).psi;
    }
  }

  double acc = 0.0;
  for (int i = 1; i <= n; ++i) {
    const double d = step * i;
    double arl;
    if (!psi.empty() && synth) {
      const MarkovModel oc = build_chain(*synth, d);
      const std::vector<double> ell = arl_vector(oc.q);
      arl = steady_state_arl(psi, ell);
    } else if (!psi.empty() && ew) {
      EwmaSpec hom = *ew;
      hom.limit_style = EwmaLimits::fixed_asymptotic;
      arl = steady_state_arl(psi, arl_vector(ewma_model(hom, d).q));
    } else {
      arl = chart_arl(spec, d, measure);
    }
    acc += d * d * arl;
  }
  EqlScore score;
  score.value = acc / delta_max;
  score.delta_max = delta_max;
  score.step = step;
  return score;
}

std::vector<ComboEqlPoint> combo_eql_scan(StudyContext& ctx, int variant, bool head_start, int H,
                                          const std::vector<double>& k2_grid, ArlMeasure measure,
                                          double delta_max, double step) {
  std::vector<ComboEqlPoint> points(k2_grid.size());
  std::vector<char> feasible(k2_grid.size(), 0);
  parallel_for(static_cast<int>(k2_grid.size()), [&](int i) {
    const double k2 = k2_grid[static_cast<std::size_t>(i)];
    ComboEqlPoint pt;
    pt.k2 = k2;
    try {
      pt.k1 = ctx.synthetic_k1(variant, head_start, H, k2);
    } catch (const InfeasibleComboError&) {
      return;
    }
    SyntheticSpec spec;
    spec.variant = variant;
    spec.head_start = head_start;
    spec.H = H;
    spec.k1 = pt.k1;
    spec.k2 = k2;
    pt.eql = eql(ChartSpec{spec}, measure, delta_max, step).value;
    points[static_cast<std::size_t>(i)] = pt;
    feasible[static_cast<std::size_t>(i)] = 1;
  });
  std::vector<ComboEqlPoint> out;
  out.reserve(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (feasible[i]) out.push_back(points[i]);
  }
  return out;
}

std::vector<WorstCaseEntry> worst_case_study(StudyContext& ctx, int variant,
                                             const std::vector<int>& H_set, double arl0, int n) {
  if (std::fabs(arl0 - ctx.arl0()) > 1e-9)
    throw std::invalid_argument("worst_case_study: target differs from the context's");
  std::vector<WorstCaseEntry> out(H_set.size());
  parallel_for(static_cast<int>(H_set.size()), [&](int i) {
    const int H = H_set[static_cast<std::size_t>(i)];
    WorstCaseEntry entry;
    entry.H = H;
    entry.k1 = ctx.synthetic_k1(variant, true, H);
    SyntheticSpec spec;
    spec.variant = variant;
    spec.head_start = true;
    spec.H = H;
    spec.k1 = entry.k1;
    const MarkovModel ic = build_chain(spec, 0.0);
    entry.profile = worst_state_profile(ic.q, ic.init, ic.worst_idx, n);
    out[static_cast<std::size_t>(i)] = std::move(entry);
  });
  return out;
}

}  // namespace rlab
