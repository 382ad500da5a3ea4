#pragma once

#include <string>
#include <vector>

#include "rlab/linalg.hpp"

namespace rlab {

/// Absorbing Markov chain restricted to its transient states. Row sums of q
/// are at most one; the deficit is the one-step alarm probability. init is
/// the chart's starting distribution, worst_idx the maximum-ARL state and
/// restart_idx the state entered after a false alarm.
struct MarkovModel {
  Matrix q;
  std::vector<std::string> labels;
  std::vector<double> init;
  int worst_idx = 0;
  int restart_idx = 0;

  std::size_t size() const { return q.rows(); }
};

struct RunLengthSummary {
  double arl_zero = 0.0;  // init' ell
  double rho = 0.0;       // dominant eigenvalue of the in-control chain
  double d1 = 0.0;        // conditional steady-state ARL, psi1' ell
  double d2 = 0.0;        // cyclical steady-state ARL, restart at restart_idx
  double d3 = 0.0;        // cyclical steady-state ARL, restart at worst_idx
  double d4 = 0.0;        // Crosier's wrong conditional steady-state ARL
};

struct CedProfile {
  std::vector<double> values;  // D_1 .. D_tau_max (may stop early on mass loss)
  double limit = 0.0;          // conditional steady-state ARL
  bool converged = false;      // |D_tau - D_{tau-1}| < 1e-9 three times in a row
  bool mass_exhausted = false; // survival mass hit zero before tau_max
};

struct Eigenpair {
  double rho = 0.0;
  std::vector<double> psi;
};

struct WorstStateProfile {
  std::vector<double> probs;  // P(state_i = worst | L > i), i = 0..n
  double asymptote = 0.0;     // psi1[worst_idx]
  bool mass_exhausted = false;
};

/// Solves (I - Q) ell = 1. Throws NonAbsorbingChainError when the system is
/// singular or produces entries below one.
std::vector<double> arl_vector(const Matrix& q);

double zero_state_arl(const MarkovModel& model, const std::vector<double>& ell);

/// Dominant left eigenpair of q; psi normalized to sum one.
Eigenpair dominant_left_eigen(const Matrix& q);

/// Solves (I - Q') psi = e_restart, normalized to sum one.
std::vector<double> cyclical_vector(const Matrix& q, int restart_idx);

/// Stationary distribution of the row-normalized Q. This reproduces the
/// erroneous conditional steady-state recipe and exists for comparison only.
std::vector<double> crosier_wrong_vector(const Matrix& q);

double steady_state_arl(const std::vector<double>& psi, const std::vector<double>& ell_oc);

/// Conditional expected delays D_tau = (u' ell_oc)/(u' 1), u = init' Q_ic^(tau-1).
CedProfile ced_profile(const Matrix& q_ic, const Matrix& q_oc, const std::vector<double>& init,
                       int tau_max);

WorstStateProfile worst_state_profile(const Matrix& q_ic, const std::vector<double>& init,
                                      int worst_idx, int n);

/// Aggregates the zero-state ARL under `oc` with the steady-state measures of
/// the in-control chain `ic`. Both models must share state space and metadata.
RunLengthSummary run_length_summary(const MarkovModel& ic, const MarkovModel& oc);

}  // namespace rlab
