#include "rlab/gauss.hpp"

#include <cmath>
#include <stdexcept>

namespace rlab {

namespace {
constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;
constexpr double kSaturation = 38.0;
}  // namespace

double std_normal_cdf(double x) {
  if (std::isnan(x)) return x;
  if (x <= -kSaturation) return 0.0;
  if (x >= kSaturation) return 1.0;
  return 0.5 * std::erfc(-x * kInvSqrt2);
}

double std_normal_pdf(double x) {
  return kInvSqrt2Pi * std::exp(-0.5 * x * x);
}

// AS 241 algorithm PPND16 (Wichura 1988), relative error below 1e-15.
double std_normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("std_normal_quantile: p must be in (0,1)");
  const double q = p - 0.5;
  if (std::fabs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    return q *
           (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r + 6.7265770927008700853e4) * r +
                4.5921953931549871457e4) * r + 1.3731693765509461125e4) * r + 1.9715909503065514427e3) * r +
              1.3314166789178437745e2) * r + 3.3871328727963666080e0) /
           (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r + 3.9307895800092710610e4) * r +
                2.1213794301586595867e4) * r + 5.3941960214247511077e3) * r + 6.8718700749205790830e2) * r +
              4.2313330701600911252e1) * r + 1.0);
  }
  double r = (q < 0.0) ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double value;
  if (r <= 5.0) {
    r -= 1.6;
    value = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r + 2.41780725177450611770e-1) * r +
                 1.27045825245236838258e0) * r + 3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r +
               4.63033784615654529590e0) * r + 1.42343711074968357734e0) /
            (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r + 1.51986665636164571966e-2) * r +
                 1.48103976427480074590e-1) * r + 6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r +
               2.05319162663775882187e0) * r + 1.0);
  } else {
    r -= 5.0;
    value = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r + 1.24266094738807843860e-3) * r +
                 2.65321895265761230930e-2) * r + 2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r +
               5.46378491116411436990e0) * r + 6.65790464350110377720e0) /
            (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r + 1.84631831751005468180e-5) * r +
                 7.86869131145613259100e-4) * r + 1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
               5.99832206555887937690e-1) * r + 1.0);
  }
  return (q < 0.0) ? -value : value;
}

double signal_prob(double k, double delta) {
  if (!(k >= 0.0)) throw std::invalid_argument("signal_prob: k must be >= 0");
  const double d = std::fabs(delta);
  return 1.0 - (std_normal_cdf(k - d) - std_normal_cdf(-k - d));
}

EventProbs event_probs(double k1, std::optional<double> k2, double delta) {
  if (!(k1 >= 0.0)) throw std::invalid_argument("event_probs: k1 must be >= 0");
  EventProbs e{};
  if (k2) {
    if (!(*k2 > k1)) throw std::invalid_argument("event_probs: k2 must exceed k1");
    e.p_up = std_normal_cdf(*k2 - delta) - std_normal_cdf(k1 - delta);
    e.p_down = std_normal_cdf(-k1 - delta) - std_normal_cdf(-*k2 - delta);
    e.p_alarm = 1.0 - std_normal_cdf(*k2 - delta) + std_normal_cdf(-*k2 - delta);
  } else {
    e.p_up = 1.0 - std_normal_cdf(k1 - delta);
    e.p_down = std_normal_cdf(-k1 - delta);
    e.p_alarm = 0.0;
  }
  e.p_center = std_normal_cdf(k1 - delta) - std_normal_cdf(-k1 - delta);
  return e;
}

}  // namespace rlab
