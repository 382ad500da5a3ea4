#pragma once

#include <optional>

#include "rlab/chain.hpp"

namespace rlab {

enum class EwmaLimits {
  exact_varying,     // c_E * sqrt((1-(1-lambda)^{2i}) lambda/(2-lambda))
  fixed_asymptotic,  // c * sqrt(lambda/(2-lambda))
};

struct EwmaSpec {
  double lambda = 0.25;
  double c = 3.0;
  EwmaLimits limit_style = EwmaLimits::fixed_asymptotic;
  std::optional<double> k2;  // Shewhart combo limit (fixed-limit style only)
  int n_grid = 401;          // odd, >= 101

  void validate() const;
};

struct CusumSpec {
  double k_ref = 1.0;
  double h = 2.665;
  std::optional<double> k2;
  int n_grid = 201;  // cells per one-sided counter; the two-sided chain is
                     // the product of both counters plus their zero atoms

  void validate() const;
};

struct ShewhartSpec {
  double k = 3.09;

  void validate() const;
};

double shewhart_arl(const ShewhartSpec& spec, double delta);
MarkovModel shewhart_model(const ShewhartSpec& spec, double delta);

/// Discretized chain for the fixed-limit EWMA (midpoint rule on the
/// continuation interval). Rejects exact-varying specs, whose chain is
/// nonhomogeneous.
MarkovModel ewma_model(const EwmaSpec& spec, double delta);

/// Zero-state ARL for either limit style.
double ewma_arl(const EwmaSpec& spec, double delta);

/// Conditional steady-state ARL D1 (in-control occupancy against the
/// shifted ARL vector; exact-varying charts use their asymptotic chain).
double ewma_steady_arl(const EwmaSpec& spec, double delta);

CedProfile ewma_ced(const EwmaSpec& spec, double delta, int tau_max);

/// Relative change of the zero-state ARL under grid doubling; throws
/// GridTooCoarseError beyond `tol`.
double ewma_grid_check(const EwmaSpec& spec, double delta, double tol = 2e-3);

/// Zero-state ARL of the two-sided CUSUM (product of the upper and lower
/// counters driven by the same observation).
double cusum_arl(const CusumSpec& spec, double delta);

/// Dense product-chain model for steady-state/CED work. n_dense is the
/// per-counter cell count for this dense variant; the default keeps the
/// state count near 2700 so that direct solves stay cheap.
MarkovModel cusum_model(const CusumSpec& spec, double delta, int n_dense = 51);

/// One-sided counter ARL (upper or lower barrier), used as a cross-check
/// through 1/A_two ~ 1/A_up + 1/A_down.
double cusum_one_sided_arl(const CusumSpec& spec, double delta, bool upper);

double cusum_grid_check(const CusumSpec& spec, double delta, double tol = 2e-3);

}  // namespace rlab
