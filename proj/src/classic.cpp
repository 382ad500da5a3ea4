#include "rlab/classic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

#include "rlab/errors.hpp"
#include "rlab/gauss.hpp"
#include "rlab/parallel.hpp"

namespace rlab {

namespace {

double clamp_to(double x, double lo, double hi) { return std::min(hi, std::max(lo, x)); }

}  // namespace

void EwmaSpec::validate() const {
  if (!(lambda > 0.0 && lambda <= 1.0)) throw std::invalid_argument("EwmaSpec: lambda must be in (0,1]");
  if (!(c > 0.0)) throw std::invalid_argument("EwmaSpec: c must be positive");
  if (n_grid < 101 || n_grid % 2 == 0) throw std::invalid_argument("EwmaSpec: n_grid must be odd and >= 101");
  if (k2) {
    if (!(*k2 > 0.0)) throw std::invalid_argument("EwmaSpec: k2 must be positive");
    if (limit_style != EwmaLimits::fixed_asymptotic)
      throw std::invalid_argument("EwmaSpec: Shewhart combo requires fixed limits");
  }
}

void CusumSpec::validate() const {
  if (!(k_ref >= 0.0)) throw std::invalid_argument("CusumSpec: k_ref must be >= 0");
  if (!(h > 0.0)) throw std::invalid_argument("CusumSpec: h must be positive");
  if (n_grid < 20) throw std::invalid_argument("CusumSpec: n_grid must be >= 20");
  if (k2 && !(*k2 > 0.0)) throw std::invalid_argument("CusumSpec: k2 must be positive");
}

void ShewhartSpec::validate() const {
  if (!(k > 0.0)) throw std::invalid_argument("ShewhartSpec: k must be positive");
}

double shewhart_arl(const ShewhartSpec& spec, double delta) {
  spec.validate();
  const double p = signal_prob(spec.k, delta);
  if (p <= 0.0) return std::numeric_limits<double>::infinity();
  return 1.0 / p;
}

MarkovModel shewhart_model(const ShewhartSpec& spec, double delta) {
  spec.validate();
  MarkovModel m;
  m.q = Matrix(1, 1);
  m.q(0, 0) = 1.0 - signal_prob(spec.k, delta);
  m.labels = {"in"};
  m.init = {1.0};
  m.worst_idx = 0;
  m.restart_idx = 0;
  return m;
}

// ---- EWMA --------------------------------------------------------------

namespace {

double ewma_asymptotic_halfwidth(const EwmaSpec& s) {
  return s.c * std::sqrt(s.lambda / (2.0 - s.lambda));
}

// P(next statistic lands in [zlo, zhi)) from continuation value z, the
// observation optionally truncated to |x| <= k2 (combo charts absorb the
// remainder directly).
double ewma_cell_prob(double z, double zlo, double zhi, double lambda, double delta,
                      const std::optional<double>& k2) {
  double xlo = (zlo - (1.0 - lambda) * z) / lambda;
  double xhi = (zhi - (1.0 - lambda) * z) / lambda;
  if (k2) {
    xlo = clamp_to(xlo, -*k2, *k2);
    xhi = clamp_to(xhi, -*k2, *k2);
  }
  const double p = std_normal_cdf(xhi - delta) - std_normal_cdf(xlo - delta);
  return p > 0.0 ? p : 0.0;
}

// Transition matrix between two symmetric midpoint grids of equal node
// count but possibly different halfwidths. Adjacent cells share an edge,
// so the cdf is evaluated once per edge.
Matrix ewma_step_matrix(int n, double b_src, double b_tgt, double lambda, double delta,
                        const std::optional<double>& k2) {
  Matrix t(static_cast<std::size_t>(n), static_cast<std::size_t>(n));
  const double w_src = 2.0 * b_src / n;
  const double w_tgt = 2.0 * b_tgt / n;
  std::vector<double> edge_cdf(static_cast<std::size_t>(n) + 1);
  for (int i = 0; i < n; ++i) {
    const double z = -b_src + (i + 0.5) * w_src;
    const double base = (1.0 - lambda) * z;
    for (int e = 0; e <= n; ++e) {
      double x = (-b_tgt + e * w_tgt - base) / lambda;
      if (k2) x = clamp_to(x, -*k2, *k2);
      edge_cdf[static_cast<std::size_t>(e)] = std_normal_cdf(x - delta);
    }
    for (int j = 0; j < n; ++j) {
      const double p = edge_cdf[static_cast<std::size_t>(j) + 1] - edge_cdf[static_cast<std::size_t>(j)];
      if (p > 0.0) t(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) = p;
    }
  }
  return t;
}

// First step index at which the varying-limit factor 1-(1-lambda)^{2i} is
// numerically one.
int ewma_homogeneous_from(double lambda) {
  if (lambda >= 1.0) return 1;
  const double r = (1.0 - lambda) * (1.0 - lambda);
  int i = 1;
  double f = r;
  while (f >= 1e-12 && i < 100000) {
    f *= r;
    ++i;
  }
  return i;
}

double ewma_limit_halfwidth(const EwmaSpec& s, int step) {
  const double f = std::pow(1.0 - s.lambda, 2.0 * step);
  return ewma_asymptotic_halfwidth(s) * std::sqrt(1.0 - f);
}

// Distribution of Z_1 restricted to survival (point start at the center).
std::vector<double> ewma_first_step(const EwmaSpec& s, double b1, double delta) {
  const int n = s.n_grid;
  std::vector<double> u(static_cast<std::size_t>(n));
  const double w = 2.0 * b1 / n;
  for (int j = 0; j < n; ++j) {
    const double zlo = -b1 + j * w;
    u[static_cast<std::size_t>(j)] = ewma_cell_prob(0.0, zlo, zlo + w, s.lambda, delta, s.k2);
  }
  return u;
}

double ewma_exact_arl(const EwmaSpec& spec, double delta) {
  const int n = spec.n_grid;
  const int t_hom = ewma_homogeneous_from(spec.lambda);
  EwmaSpec hom = spec;
  hom.limit_style = EwmaLimits::fixed_asymptotic;
  const std::vector<double> ell_hom = arl_vector(ewma_model(hom, delta).q);

  std::vector<double> u = ewma_first_step(spec, ewma_limit_halfwidth(spec, 1), delta);
  double arl = 1.0;  // P(L > 0)
  for (int i = 1; i < t_hom; ++i) {
    double mass = 0.0;
    for (double x : u) mass += x;
    arl += mass;
    const Matrix t = ewma_step_matrix(n, ewma_limit_halfwidth(spec, i),
                                      ewma_limit_halfwidth(spec, i + 1), spec.lambda, delta, spec.k2);
    u = t.multiply_transposed(u);
  }
  double tail = 0.0;
  for (int j = 0; j < n; ++j) tail += u[static_cast<std::size_t>(j)] * ell_hom[static_cast<std::size_t>(j)];
  return arl + tail;
}

}  // namespace

MarkovModel ewma_model(const EwmaSpec& spec, double delta) {
  spec.validate();
  if (spec.limit_style != EwmaLimits::fixed_asymptotic)
    throw std::invalid_argument("ewma_model: exact-limit charts have no homogeneous chain");
  const int n = spec.n_grid;
  const double b = ewma_asymptotic_halfwidth(spec);
  MarkovModel m;
  m.q = ewma_step_matrix(n, b, b, spec.lambda, delta, spec.k2);
  m.labels.reserve(static_cast<std::size_t>(n));
  const double w = 2.0 * b / n;
  for (int j = 0; j < n; ++j) m.labels.push_back("z" + std::to_string(-b + (j + 0.5) * w));
  m.init.assign(static_cast<std::size_t>(n), 0.0);
  m.init[static_cast<std::size_t>(n / 2)] = 1.0;
  m.restart_idx = n / 2;
  m.worst_idx = 0;  // slowest state against an upward shift
  return m;
}

double ewma_arl(const EwmaSpec& spec, double delta) {
  spec.validate();
  if (spec.limit_style == EwmaLimits::fixed_asymptotic) {
    const MarkovModel m = ewma_model(spec, delta);
    return zero_state_arl(m, arl_vector(m.q));
  }
  return ewma_exact_arl(spec, delta);
}

double ewma_steady_arl(const EwmaSpec& spec, double delta) {
  spec.validate();
  EwmaSpec hom = spec;
  hom.limit_style = EwmaLimits::fixed_asymptotic;
  const MarkovModel ic = ewma_model(hom, 0.0);
  const MarkovModel oc = ewma_model(hom, delta);
  return steady_state_arl(dominant_left_eigen(ic.q).psi, arl_vector(oc.q));
}

CedProfile ewma_ced(const EwmaSpec& spec, double delta, int tau_max) {
  spec.validate();
  if (tau_max < 1) throw std::invalid_argument("ewma_ced: tau_max must be >= 1");
  if (spec.limit_style == EwmaLimits::fixed_asymptotic) {
    const MarkovModel ic = ewma_model(spec, 0.0);
    const MarkovModel oc = ewma_model(spec, delta);
    return ced_profile(ic.q, oc.q, ic.init, tau_max);
  }

  const int n = spec.n_grid;
  const int t_hom = ewma_homogeneous_from(spec.lambda);
  EwmaSpec hom = spec;
  hom.limit_style = EwmaLimits::fixed_asymptotic;
  const Matrix q_hom_ic = ewma_model(hom, 0.0).q;
  const std::vector<double> ell_hom = arl_vector(ewma_model(hom, delta).q);

  // ARL-to-go vectors of the shifted nonhomogeneous chain, built backwards
  // from the asymptotic regime.
  std::vector<std::vector<double>> togo(static_cast<std::size_t>(t_hom) + 1);
  togo[static_cast<std::size_t>(t_hom)] = ell_hom;
  for (int i = t_hom - 1; i >= 1; --i) {
    const Matrix t = ewma_step_matrix(n, ewma_limit_halfwidth(spec, i),
                                      ewma_limit_halfwidth(spec, i + 1), spec.lambda, delta, spec.k2);
    std::vector<double> v = t.multiply(togo[static_cast<std::size_t>(i) + 1]);
    for (double& x : v) x += 1.0;
    togo[static_cast<std::size_t>(i)] = std::move(v);
  }

  CedProfile out;
  out.limit = steady_state_arl(dominant_left_eigen(q_hom_ic).psi, ell_hom);
  out.values.reserve(static_cast<std::size_t>(tau_max));

  {
    const std::vector<double> u1 = ewma_first_step(spec, ewma_limit_halfwidth(spec, 1), delta);
    const std::vector<double>& next = (t_hom >= 2) ? togo[1] : ell_hom;
    double d1 = 1.0;
    for (int j = 0; j < n; ++j) d1 += u1[static_cast<std::size_t>(j)] * next[static_cast<std::size_t>(j)];
    out.values.push_back(d1);
  }

  std::vector<double> u = ewma_first_step(spec, ewma_limit_halfwidth(spec, 1), 0.0);
  int stable = 0;
  double prev = out.values[0];
  for (int tau = 2; tau <= tau_max; ++tau) {
    const int i = tau - 1;  // u holds the in-control distribution after i observations
    double mass = 0.0;
    for (double x : u) mass += x;
    if (!(mass > 0.0)) {
      out.mass_exhausted = true;
      break;
    }
    const std::vector<double>& v = (i < t_hom) ? togo[static_cast<std::size_t>(i)] : ell_hom;
    double num = 0.0;
    for (int j = 0; j < n; ++j) num += u[static_cast<std::size_t>(j)] * v[static_cast<std::size_t>(j)];
    const double d = num / mass;
    out.values.push_back(d);
    if (std::fabs(d - prev) < 1e-9) {
      if (++stable >= 3) out.converged = true;
    } else {
      stable = 0;
    }
    prev = d;
    if (tau < tau_max) {
      if (i < t_hom) {
        const Matrix t = ewma_step_matrix(n, ewma_limit_halfwidth(spec, i),
                                          ewma_limit_halfwidth(spec, i + 1), spec.lambda, 0.0, spec.k2);
        u = t.multiply_transposed(u);
      } else {
        u = q_hom_ic.multiply_transposed(u);
      }
      if (mass < 1e-200) {
        for (double& x : u) x /= mass;  // rescale; only ratios matter
      }
    }
  }
  return out;
}

double ewma_grid_check(const EwmaSpec& spec, double delta, double tol) {
  const double a1 = ewma_arl(spec, delta);
  EwmaSpec fine = spec;
  fine.n_grid = 2 * spec.n_grid + 1;
  const double a2 = ewma_arl(fine, delta);
  const double rel = std::fabs(a2 - a1) / a2;
  if (rel > tol)
    throw GridTooCoarseError("ewma grid check: refinement moved the ARL by " + std::to_string(rel));
  return rel;
}

// ---- CUSUM -------------------------------------------------------------

namespace {

// Two-sided CUSUM product chain. Per counter: state 0 is the exact zero
// atom, states 1..m are midpoint cells of (0, h]. One observation x moves
// both counters, so each product row partitions the x axis; all breakpoints
// lie on the half-cell lattices around +k and -k, where the (possibly
// truncated) normal cdf is tabulated once per build.
struct CusumLadder {
  int m = 0;
  double w = 0.0;
  double k_ref = 0.0;
  std::vector<double> fp;  // N(+k + s*w/2)
  std::vector<double> fm;  // N(-k + s*w/2)
  int offset = 0;

  CusumLadder(double k, double h, int m_, double delta, const std::optional<double>& k2)
      : m(m_), w(h / m_), k_ref(k) {
    const int smax = 2 * m + 4;
    offset = smax;
    fp.resize(static_cast<std::size_t>(2 * smax) + 1);
    fm.resize(static_cast<std::size_t>(2 * smax) + 1);
    for (int s = -smax; s <= smax; ++s) {
      double xp = k + 0.5 * w * s;
      double xm = -k + 0.5 * w * s;
      if (k2) {
        xp = clamp_to(xp, -*k2, *k2);
        xm = clamp_to(xm, -*k2, *k2);
      }
      fp[static_cast<std::size_t>(s + offset)] = std_normal_cdf(xp - delta);
      fm[static_cast<std::size_t>(s + offset)] = std_normal_cdf(xm - delta);
    }
  }

  double counter_value(int i) const { return (i == 0) ? 0.0 : (i - 0.5) * w; }
  // x = k - a_i + t*w on the +k lattice
  int s_break(int i, int t) const { return (i == 0) ? 2 * t : 2 * (t - i) + 1; }
  // x = b_j - k - t*w on the -k lattice
  int t_break(int j, int t) const { return (j == 0) ? -2 * t : 2 * (j - t) - 1; }

  double fplus(int s) const { return fp[static_cast<std::size_t>(s + offset)]; }
  double fminus(int s) const { return fm[static_cast<std::size_t>(s + offset)]; }
};

// Emits the transition row of product state (i, j) as (target, prob) pairs.
// Walking x upward, the upper counter climbs atom -> cells -> alarm while
// the lower counter descends alarm -> cells -> atom.
template <typename Emit>
void cusum_product_row(const CusumLadder& lad, int i, int j, Emit&& emit) {
  const int m = lad.m;
  const double a = lad.counter_value(i);
  const double b = lad.counter_value(j);
  int ts = 0;
  int tt = m;
  int s_state = 0;
  int t_state = m + 1;
  double prev_n = 0.0;
  while (ts <= m || tt >= 0) {
    bool take_s;
    if (ts > m) {
      take_s = false;
    } else if (tt < 0) {
      take_s = true;
    } else {
      take_s = (lad.k_ref - a + ts * lad.w) <= (b - lad.k_ref - tt * lad.w);
    }
    const double cur_n = take_s ? lad.fplus(lad.s_break(i, ts)) : lad.fminus(lad.t_break(j, tt));
    const double p = cur_n - prev_n;
    if (p > 0.0 && s_state <= m && t_state <= m) emit(s_state * (m + 1) + t_state, p);
    prev_n = cur_n;
    if (take_s) {
      ++s_state;
      ++ts;
    } else {
      --t_state;
      --tt;
    }
  }
  // beyond the last breakpoint the upper counter alarms; nothing to emit
}

struct SparseChain {
  int n = 0;
  std::vector<std::int64_t> row_ptr;
  std::vector<std::int32_t> col;
  std::vector<double> val;
};

SparseChain build_cusum_sparse(const CusumSpec& spec, double delta, int m) {
  const CusumLadder lad(spec.k_ref, spec.h, m, delta, spec.k2);
  SparseChain c;
  c.n = (m + 1) * (m + 1);
  c.row_ptr.assign(static_cast<std::size_t>(c.n) + 1, 0);
  c.col.reserve(static_cast<std::size_t>(c.n) * static_cast<std::size_t>(2 * m + 5));
  c.val.reserve(static_cast<std::size_t>(c.n) * static_cast<std::size_t>(2 * m + 5));
  for (int i = 0; i <= m; ++i) {
    for (int j = 0; j <= m; ++j) {
      const int row = i * (m + 1) + j;
      cusum_product_row(lad, i, j, [&](int tgt, double p) {
        c.col.push_back(tgt);
        c.val.push_back(p);
      });
      c.row_ptr[static_cast<std::size_t>(row) + 1] = static_cast<std::int64_t>(c.col.size());
    }
  }
  return c;
}

// Zero-state ARL by forward survival propagation with a geometric tail
// once the per-step survival ratio has settled (Aitken-extrapolated). The
// scatter splits across workers with private accumulators.
double sparse_propagated_arl(const SparseChain& c, int start) {
  const std::size_t n = static_cast<std::size_t>(c.n);
  const int workers = std::min(worker_count(), 8);
  std::vector<double> u(n, 0.0);
  std::vector<std::vector<double>> priv(static_cast<std::size_t>(workers),
                                        std::vector<double>(n, 0.0));
  u[static_cast<std::size_t>(start)] = 1.0;

  auto step = [&]() {
    parallel_for(workers, [&](int w) {
      std::vector<double>& acc = priv[static_cast<std::size_t>(w)];
      std::fill(acc.begin(), acc.end(), 0.0);
      const int lo_row = static_cast<int>(static_cast<std::int64_t>(c.n) * w / workers);
      const int hi_row = static_cast<int>(static_cast<std::int64_t>(c.n) * (w + 1) / workers);
      for (int rowi = lo_row; rowi < hi_row; ++rowi) {
        const double ui = u[static_cast<std::size_t>(rowi)];
        if (ui == 0.0) continue;
        const std::int64_t lo = c.row_ptr[static_cast<std::size_t>(rowi)];
        const std::int64_t hi = c.row_ptr[static_cast<std::size_t>(rowi) + 1];
        for (std::int64_t idx = lo; idx < hi; ++idx) {
          acc[static_cast<std::size_t>(c.col[static_cast<std::size_t>(idx)])] +=
              ui * c.val[static_cast<std::size_t>(idx)];
        }
      }
    });
    double mass = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      double s = priv[0][j];
      for (int w = 1; w < workers; ++w) s += priv[static_cast<std::size_t>(w)][j];
      u[j] = s;
      mass += s;
    }
    return mass;
  };

  double arl = 0.0;
  double survival = 1.0;
  double ratio_prev = -1.0;
  double ratio_prev2 = -1.0;
  int stable = 0;
  const int cap = 200000;
  for (int t = 0; t < cap; ++t) {
    arl += survival;
    const double mass = step();
    if (!(mass > 0.0)) return arl;  // fully absorbed
    const double ratio = mass;      // u held total mass one
    for (std::size_t j = 0; j < n; ++j) u[j] /= mass;
    survival *= ratio;  // survival now equals P(L > t+1)
    if (ratio < 1.0 && survival < 1e-16 * arl) return arl + survival / (1.0 - ratio);
    if (ratio_prev2 >= 0.0) {
      const double d1 = ratio - ratio_prev;
      const double d0 = ratio_prev - ratio_prev2;
      double rho_hat = ratio;
      const double denom = d1 - d0;
      if (denom != 0.0) {
        const double extrap = ratio - d1 * d1 / denom;
        if (extrap > 0.0 && extrap < 1.0 && std::fabs(extrap - ratio) < 0.5 * (1.0 - ratio)) {
          rho_hat = extrap;
        }
      }
      const bool settled = rho_hat < 1.0 &&
                           std::fabs(ratio - rho_hat) < 1e-9 * (1.0 - rho_hat) &&
                           std::fabs(d1) < 1e-7 * (1.0 - rho_hat);
      if (settled) {
        if (++stable >= 2) return arl + survival / (1.0 - rho_hat);
      } else {
        stable = 0;
      }
    }
    ratio_prev2 = ratio_prev;
    ratio_prev = ratio;
  }
  throw NoConvergenceError("cusum_arl: survival ratio failed to stabilize");
}

}  // namespace

double cusum_arl(const CusumSpec& spec, double delta) {
  spec.validate();
  const SparseChain c = build_cusum_sparse(spec, delta, spec.n_grid);
  return sparse_propagated_arl(c, 0);
}

MarkovModel cusum_model(const CusumSpec& spec, double delta, int n_dense) {
  spec.validate();
  if (n_dense < 10) throw std::invalid_argument("cusum_model: n_dense must be >= 10");
  const int m = n_dense;
  const CusumLadder lad(spec.k_ref, spec.h, m, delta, spec.k2);
  const int n = (m + 1) * (m + 1);
  MarkovModel model;
  model.q = Matrix(static_cast<std::size_t>(n), static_cast<std::size_t>(n));
  model.labels.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i <= m; ++i)
    for (int j = 0; j <= m; ++j)
      model.labels.push_back("s" + std::to_string(i) + ",t" + std::to_string(j));
  for (int i = 0; i <= m; ++i) {
    for (int j = 0; j <= m; ++j) {
      const int row = i * (m + 1) + j;
      cusum_product_row(lad, i, j, [&](int tgt, double p) {
        model.q(static_cast<std::size_t>(row), static_cast<std::size_t>(tgt)) += p;
      });
    }
  }
  model.init.assign(static_cast<std::size_t>(n), 0.0);
  model.init[0] = 1.0;  // both counters at zero
  model.restart_idx = 0;
  model.worst_idx = 0;
  return model;
}

double cusum_one_sided_arl(const CusumSpec& spec, double delta, bool upper) {
  spec.validate();
  const int m = spec.n_grid;
  const double w = spec.h / m;
  const double inf = std::numeric_limits<double>::infinity();
  // Truncated observation mass below x; the clamp makes the |x| > k2
  // direct-alarm tails vanish from every cell.
  auto ncdf = [&](double x) {
    if (spec.k2) x = clamp_to(x, -*spec.k2, *spec.k2);
    return std_normal_cdf(x - delta);
  };
  Matrix q(static_cast<std::size_t>(m) + 1, static_cast<std::size_t>(m) + 1);
  for (int i = 0; i <= m; ++i) {
    const double a = (i == 0) ? 0.0 : (i - 0.5) * w;
    for (int t = 0; t <= m; ++t) {
      // x interval mapping the counter into cell t (t = 0: the zero atom)
      double xlo, xhi;
      if (upper) {
        xlo = (t == 0) ? -inf : spec.k_ref - a + (t - 1) * w;
        xhi = spec.k_ref - a + t * w;
      } else {
        xlo = a - spec.k_ref - t * w;
        xhi = (t == 0) ? inf : a - spec.k_ref - (t - 1) * w;
      }
      const double p = ncdf(xhi) - ncdf(xlo);
      if (p > 0.0) q(static_cast<std::size_t>(i), static_cast<std::size_t>(t)) = p;
    }
  }
  const std::vector<double> ell = arl_vector(q);
  return ell[0];
}

double cusum_grid_check(const CusumSpec& spec, double delta, double tol) {
  const double a1 = cusum_arl(spec, delta);
  CusumSpec fine = spec;
  fine.n_grid = 2 * spec.n_grid;
  const double a2 = cusum_arl(fine, delta);
  const double rel = std::fabs(a2 - a1) / a2;
  if (rel > tol)
    throw GridTooCoarseError("cusum grid check: refinement moved the ARL by " + std::to_string(rel));
  return rel;
}

}  // namespace rlab
