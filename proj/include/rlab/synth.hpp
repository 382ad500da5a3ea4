#pragma once

#include <optional>
#include <vector>

#include "rlab/chain.hpp"

namespace rlab {

/// One of the eight 2-of-(H+1) synthetic-type designs.
///   variant 1: true synthetic      (signals on either side pair up)
///   variant 2: side-sensitive      (same side, arbitrary points in between)
///   variant 3: revised             (same side, in-between inside the limits)
///   variant 4: modified            (same side, in-between on the signal side)
/// head_start treats the observation just before monitoring as a signal of
/// undetermined side; without it the chart starts in its worst-case state.
struct SyntheticSpec {
  int variant = 1;
  bool head_start = false;
  int H = 1;
  double k1 = 2.0;
  std::optional<double> k2;  // Shewhart combo limit, must exceed k1

  void validate() const;
  int transient_state_count() const;
};

MarkovModel build_chain(const SyntheticSpec& spec, double delta);

/// Explicit solution set for the variant-1 chart on states 0..H.
struct ClosedFormS1 {
  double p = 0.0, q = 0.0, r = 0.0;  // signal, no-signal, renewal masses
  double rho = 0.0;                  // dominant eigenvalue
  double s = 0.0;                    // 1 - q/rho
  std::vector<double> ell;
  std::vector<double> psi1, psi2, psi3, psi4;
};

ClosedFormS1 closed_form_s1(int H, double k1, double delta);

/// Mixed in-control/out-of-control steady-state ARL D_which for the
/// variant-1 chart (which in 1..4); steady-state vectors from delta = 0,
/// ARL vector from the shifted chain. Evaluating at delta = 0 yields the
/// known limits.
double closed_form_steady(int H, double k1, double delta, int which);

}  // namespace rlab
