#include "rlab/chain.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "rlab/errors.hpp"

namespace rlab {

namespace {

constexpr double kRenormThreshold = 1e-200;

Matrix identity_minus(const Matrix& q) {
  const std::size_t n = q.rows();
  Matrix a(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) a(i, j) = (i == j ? 1.0 : 0.0) - q(i, j);
  return a;
}

double vec_sum(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

}  // namespace

std::vector<double> arl_vector(const Matrix& q) {
  if (q.rows() != q.cols()) throw std::invalid_argument("arl_vector: matrix must be square");
  const std::size_t n = q.rows();
  std::vector<double> ell;
  try {
    LuSolver lu(identity_minus(q));
    ell = lu.solve(std::vector<double>(n, 1.0));
  } catch (const NumericError&) {
    throw NonAbsorbingChainError("arl_vector: singular I - Q (spectral radius >= 1)");
  }
  // Residual and positivity guard; a substochastic chain with absorption
  // certain yields entries >= 1.
  const std::vector<double> qe = q.multiply(ell);
  double linf = 0.0, rinf = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(ell[i] >= 1.0 - 1e-6)) {
      throw NonAbsorbingChainError("arl_vector: solution has entries below one");
    }
    linf = std::max(linf, std::fabs(ell[i]));
    rinf = std::max(rinf, std::fabs(ell[i] - qe[i] - 1.0));
  }
  if (rinf > 1e-8 * std::max(1.0, linf)) {
    throw NonAbsorbingChainError("arl_vector: residual too large, chain close to non-absorbing");
  }
  return ell;
}

double zero_state_arl(const MarkovModel& model, const std::vector<double>& ell) {
  if (model.init.size() != ell.size()) throw std::invalid_argument("zero_state_arl: dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < ell.size(); ++i) s += model.init[i] * ell[i];
  return s;
}

Eigenpair dominant_left_eigen(const Matrix& q) {
  PowerIterationResult r = dominant_left_eigenpair(q, 1e-14, 1e-13);
  return {r.eigenvalue, std::move(r.vec)};
}

std::vector<double> cyclical_vector(const Matrix& q, int restart_idx) {
  const std::size_t n = q.rows();
  if (restart_idx < 0 || static_cast<std::size_t>(restart_idx) >= n)
    throw std::invalid_argument("cyclical_vector: restart index out of range");
  std::vector<double> e(n, 0.0);
  e[static_cast<std::size_t>(restart_idx)] = 1.0;
  std::vector<double> psi;
  try {
    LuSolver lu(identity_minus(q.transposed()));
    psi = lu.solve(std::move(e));
  } catch (const NumericError&) {
    throw NonAbsorbingChainError("cyclical_vector: singular I - Q'");
  }
  const double s = vec_sum(psi);
  if (!(s > 0.0)) throw NonAbsorbingChainError("cyclical_vector: non-positive normalization");
  for (double& x : psi) x /= s;
  return psi;
}

std::vector<double> crosier_wrong_vector(const Matrix& q) {
  const std::size_t n = q.rows();
  Matrix r(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    double rowsum = 0.0;
    for (std::size_t j = 0; j < n; ++j) rowsum += q(i, j);
    if (rowsum > 0.0) {
      for (std::size_t j = 0; j < n; ++j) r(i, j) = q(i, j) / rowsum;
    } else {
      r(i, i) = 1.0;  // instant-absorption state kept in place
    }
  }
  // Stationary distribution: (I - R') pi = 0 with the last equation replaced
  // by the normalization 1' pi = 1.
  Matrix a = identity_minus(r.transposed());
  std::vector<double> b(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) a(n - 1, j) = 1.0;
  b[n - 1] = 1.0;
  std::vector<double> pi;
  try {
    LuSolver lu(std::move(a));
    pi = lu.solve(std::move(b));
  } catch (const NumericError&) {
    throw NoConvergenceError("crosier_wrong_vector: stationary system singular");
  }
  double s = 0.0;
  for (double& x : pi) {
    if (x < 0.0 && x > -1e-12) x = 0.0;
    s += x;
  }
  for (double& x : pi) x /= s;
  return pi;
}

double steady_state_arl(const std::vector<double>& psi, const std::vector<double>& ell_oc) {
  if (psi.size() != ell_oc.size()) throw std::invalid_argument("steady_state_arl: dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < psi.size(); ++i) s += psi[i] * ell_oc[i];
  return s;
}

CedProfile ced_profile(const Matrix& q_ic, const Matrix& q_oc, const std::vector<double>& init,
                       int tau_max) {
  if (tau_max < 1) throw std::invalid_argument("ced_profile: tau_max must be >= 1");
  if (q_ic.rows() != q_oc.rows() || init.size() != q_ic.rows())
    throw std::invalid_argument("ced_profile: dimension mismatch");
  const std::vector<double> ell = arl_vector(q_oc);

  CedProfile out;
  try {
    out.limit = steady_state_arl(dominant_left_eigen(q_ic).psi, ell);
  } catch (const NumericError&) {
    // the conditional limit does not exist when the in-control chain dies
    // out completely; the profile is still well defined while mass remains
    out.limit = std::numeric_limits<double>::quiet_NaN();
  }
  out.values.reserve(static_cast<std::size_t>(tau_max));

  std::vector<double> u = init;
  int stable = 0;
  double prev = 0.0;
  for (int tau = 1; tau <= tau_max; ++tau) {
    double mass = vec_sum(u);
    if (!(mass > 0.0)) {
      out.mass_exhausted = true;
      break;
    }
    double num = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) num += u[i] * ell[i];
    const double d = num / mass;
    out.values.push_back(d);
    if (tau > 1 && std::fabs(d - prev) < 1e-9) {
      if (++stable >= 3) out.converged = true;
    } else {
      stable = 0;
    }
    prev = d;
    if (tau < tau_max) {
      u = q_ic.multiply_transposed(u);
      mass = vec_sum(u);
      if (mass > 0.0 && mass < kRenormThreshold) {
        // Only ratios matter; rescale to dodge underflow for large tau.
        for (double& x : u) x /= mass;
      }
    }
  }
  return out;
}

WorstStateProfile worst_state_profile(const Matrix& q_ic, const std::vector<double>& init,
                                      int worst_idx, int n) {
  if (n < 1) throw std::invalid_argument("worst_state_profile: n must be >= 1");
  if (init.size() != q_ic.rows()) throw std::invalid_argument("worst_state_profile: dimension mismatch");
  if (worst_idx < 0 || static_cast<std::size_t>(worst_idx) >= q_ic.rows())
    throw std::invalid_argument("worst_state_profile: worst index out of range");

  WorstStateProfile out;
  out.asymptote = dominant_left_eigen(q_ic).psi[static_cast<std::size_t>(worst_idx)];
  out.probs.reserve(static_cast<std::size_t>(n) + 1);

  std::vector<double> u = init;
  for (int i = 0; i <= n; ++i) {
    const double mass = vec_sum(u);
    if (!(mass > 0.0)) {
      out.mass_exhausted = true;
      break;
    }
    out.probs.push_back(u[static_cast<std::size_t>(worst_idx)] / mass);
    if (i < n) {
      u = q_ic.multiply_transposed(u);
      const double m = vec_sum(u);
      if (m > 0.0 && m < kRenormThreshold) {
        for (double& x : u) x /= m;
      }
    }
  }
  return out;
}

RunLengthSummary run_length_summary(const MarkovModel& ic, const MarkovModel& oc) {
  if (ic.size() != oc.size()) throw std::invalid_argument("run_length_summary: dimension mismatch");
  const std::vector<double> ell = arl_vector(oc.q);
  const Eigenpair eig = dominant_left_eigen(ic.q);
  RunLengthSummary s;
  s.arl_zero = zero_state_arl(ic, ell);
  s.rho = eig.rho;
  s.d1 = steady_state_arl(eig.psi, ell);
  s.d2 = steady_state_arl(cyclical_vector(ic.q, ic.restart_idx), ell);
  s.d3 = steady_state_arl(cyclical_vector(ic.q, ic.worst_idx), ell);
  s.d4 = steady_state_arl(crosier_wrong_vector(ic.q), ell);
  return s;
}

}  // namespace rlab
