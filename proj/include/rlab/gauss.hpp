#pragma once

#include <optional>

namespace rlab {

/// Standard normal cdf. Saturates to 0/1 beyond |x| = 38; run-length
/// quantities are insensitive at that magnitude.
double std_normal_cdf(double x);

/// Standard normal density.
double std_normal_pdf(double x);

/// Inverse of std_normal_cdf (Wichura's AS 241, double precision).
/// Requires p in (0,1).
double std_normal_quantile(double p);

/// Probability that a N(delta,1) observation leaves the central band
/// (-k, k):  1 - [Phi(k-delta) - Phi(-k-delta)].  Symmetric in delta.
double signal_prob(double k, double delta);

/// Per-observation event masses for a chart with inner limit k1 and an
/// optional Shewhart limit k2 > k1.  Without k2 the alarm mass is zero
/// and the tails extend to infinity.
struct EventProbs {
  double p_center;  // |X| <= k1
  double p_up;      // k1 < X <= k2   (k2 = inf when absent)
  double p_down;    // -k2 <= X < -k1
  double p_alarm;   // |X| > k2       (0 when k2 absent)
};

EventProbs event_probs(double k1, std::optional<double> k2, double delta);

}  // namespace rlab
