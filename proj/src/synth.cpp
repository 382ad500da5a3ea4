#include "rlab/synth.hpp"

#include <cmath>
#include <map>
#include <stdexcept>
#include <string>

#include "rlab/errors.hpp"
#include "rlab/gauss.hpp"

namespace rlab {

namespace {

// State key: kind distinguishes the regular states from the wildcard
// head-start states ("pending signal of undetermined side, age a").
struct StateKey {
  int kind;  // builder-local meaning
  int a;
  int b;
  bool operator<(const StateKey& o) const {
    if (kind != o.kind) return kind < o.kind;
    if (a != o.a) return a < o.a;
    return b < o.b;
  }
};

class StateTable {
 public:
  int id(const StateKey& k, const std::string& label) {
    auto it = index_.find(k);
    if (it != index_.end()) return it->second;
    const int n = static_cast<int>(labels_.size());
    index_.emplace(k, n);
    labels_.push_back(label);
    return n;
  }
  int at(const StateKey& k) const { return index_.at(k); }
  int size() const { return static_cast<int>(labels_.size()); }
  std::vector<std::string> labels() const { return labels_; }

 private:
  std::map<StateKey, int> index_;
  std::vector<std::string> labels_;
};

std::string itos(int v) { return std::to_string(v); }

// ---- variant 1: gap counter 0..H -------------------------------------

MarkovModel build_v1(const SyntheticSpec& s, double delta) {
  const EventProbs e = event_probs(s.k1, s.k2, delta);
  const double psig = e.p_up + e.p_down;
  const int H = s.H;
  const int n = H + 1;
  MarkovModel m;
  m.q = Matrix(n, n);
  m.labels.reserve(n);
  for (int j = 0; j <= H; ++j) m.labels.push_back(itos(j));
  for (int j = 0; j < H; ++j) m.q(j, j + 1) = e.p_center;  // signal from here pairs up: alarm
  m.q(H, H) = e.p_center;
  m.q(H, 0) = psig;
  m.init.assign(n, 0.0);
  m.init[s.head_start ? 0 : H] = 1.0;
  m.worst_idx = H;
  m.restart_idx = s.head_start ? 0 : H;
  return m;
}

// ---- variant 2: per-side signal ages, in-between arbitrary ------------

MarkovModel build_v2(const SyntheticSpec& s, double delta) {
  const EventProbs e = event_probs(s.k1, s.k2, delta);
  const int H = s.H;
  const int INF = H;  // age marker "no signal within reach"
  StateTable st;
  auto reg = [&](int u, int d) {
    return StateKey{0, u, d};
  };
  auto lab = [&](int x) { return x == INF ? std::string("-") : itos(x); };
  for (int u = 0; u <= INF; ++u)
    for (int d = 0; d <= INF; ++d) {
      if (u == d && u != INF) continue;  // one observation cannot signal both sides
      st.id(reg(u, d), "u" + lab(u) + ",d" + lab(d));
    }
  if (s.head_start)
    for (int a = 0; a < H; ++a) st.id(StateKey{1, a, 0}, "w" + itos(a));

  const int n = st.size();
  MarkovModel m;
  m.q = Matrix(n, n);
  m.labels = st.labels();
  auto age = [&](int x) { return (x + 1 <= H - 1) ? x + 1 : INF; };
  for (int u = 0; u <= INF; ++u)
    for (int d = 0; d <= INF; ++d) {
      if (u == d && u != INF) continue;
      const int i = st.at(reg(u, d));
      m.q(i, st.at(reg(age(u), age(d)))) += e.p_center;
      if (u == INF) m.q(i, st.at(reg(0, age(d)))) += e.p_up;  // finite u: alarm
      if (d == INF) m.q(i, st.at(reg(age(u), 0))) += e.p_down;
    }
  if (s.head_start) {
    for (int a = 0; a < H; ++a) {
      const int i = st.at(StateKey{1, a, 0});
      if (a + 1 <= H - 1)
        m.q(i, st.at(StateKey{1, a + 1, 0})) += e.p_center;
      else
        m.q(i, st.at(reg(INF, INF))) += e.p_center;
      // any signal pairs with the undetermined-side head start: alarm
    }
  }
  m.init.assign(n, 0.0);
  const int no_signal = st.at(reg(INF, INF));
  m.init[s.head_start ? st.at(StateKey{1, 0, 0}) : no_signal] = 1.0;
  m.worst_idx = no_signal;
  m.restart_idx = s.head_start ? st.at(StateKey{1, 0, 0}) : no_signal;
  return m;
}

// ---- variants 3 and 4: single pending signal with side memory ---------
//
// Variant 3 keeps a pending pattern alive across any in-limit observation;
// variant 4 additionally requires the in-between points to stay on the
// pending side of the center line, which splits the central mass at zero.

MarkovModel build_v34(const SyntheticSpec& s, double delta) {
  const EventProbs e = event_probs(s.k1, s.k2, delta);
  const bool same_side_fill = (s.variant == 4);
  // central masses by side of the center line (only variant 4 distinguishes)
  const double c_up = same_side_fill ? std_normal_cdf(s.k1 - delta) - std_normal_cdf(-delta) : e.p_center;
  const double c_down = same_side_fill ? std_normal_cdf(-delta) - std_normal_cdf(-s.k1 - delta) : 0.0;

  const int H = s.H;
  StateTable st;
  const StateKey none{0, 0, 0};
  st.id(none, "none");
  for (int a = 0; a < H; ++a) st.id(StateKey{1, a, 0}, "u" + itos(a));
  for (int a = 0; a < H; ++a) st.id(StateKey{2, a, 0}, "d" + itos(a));
  if (s.head_start) {
    st.id(StateKey{3, 0, 0}, "w0");
    if (same_side_fill) {
      for (int a = 1; a < H; ++a) st.id(StateKey{4, a, 0}, "wu" + itos(a));
      for (int a = 1; a < H; ++a) st.id(StateKey{5, a, 0}, "wd" + itos(a));
    } else {
      for (int a = 1; a < H; ++a) st.id(StateKey{3, a, 0}, "w" + itos(a));
    }
  }

  const int n = st.size();
  MarkovModel m;
  m.q = Matrix(n, n);
  m.labels = st.labels();
  const int i_none = st.at(none);
  auto up = [&](int a) { return st.at(StateKey{1, a, 0}); };
  auto down = [&](int a) { return st.at(StateKey{2, a, 0}); };

  m.q(i_none, i_none) += e.p_center;
  m.q(i_none, up(0)) += e.p_up;
  m.q(i_none, down(0)) += e.p_down;

  for (int a = 0; a < H; ++a) {
    const int iu = up(a);
    const int id = down(a);
    const int next_u = (a + 1 <= H - 1) ? up(a + 1) : i_none;
    const int next_d = (a + 1 <= H - 1) ? down(a + 1) : i_none;
    if (same_side_fill) {
      m.q(iu, next_u) += c_up;
      m.q(iu, i_none) += c_down;  // opposite-side point breaks the pattern
      m.q(id, next_d) += c_down;
      m.q(id, i_none) += c_up;
    } else {
      m.q(iu, next_u) += e.p_center;
      m.q(id, next_d) += e.p_center;
    }
    m.q(iu, down(0)) += e.p_down;  // same-side signal: alarm
    m.q(id, up(0)) += e.p_up;
  }

  if (s.head_start) {
    if (!same_side_fill) {
      for (int a = 0; a < H; ++a) {
        const int i = st.at(StateKey{3, a, 0});
        m.q(i, (a + 1 <= H - 1) ? st.at(StateKey{3, a + 1, 0}) : i_none) += e.p_center;
        // any signal binds the hidden side and completes the pattern: alarm
      }
    } else {
      const int w0 = st.at(StateKey{3, 0, 0});
      m.q(w0, (H >= 2) ? st.at(StateKey{4, 1, 0}) : i_none) += c_up;
      m.q(w0, (H >= 2) ? st.at(StateKey{5, 1, 0}) : i_none) += c_down;
      for (int a = 1; a < H; ++a) {
        const int iwu = st.at(StateKey{4, a, 0});
        m.q(iwu, (a + 1 <= H - 1) ? st.at(StateKey{4, a + 1, 0}) : i_none) += c_up;
        m.q(iwu, i_none) += c_down;
        m.q(iwu, down(0)) += e.p_down;  // upper signal would alarm
        const int iwd = st.at(StateKey{5, a, 0});
        m.q(iwd, (a + 1 <= H - 1) ? st.at(StateKey{5, a + 1, 0}) : i_none) += c_down;
        m.q(iwd, i_none) += c_up;
        m.q(iwd, up(0)) += e.p_up;
      }
    }
  }

  m.init.assign(n, 0.0);
  m.init[s.head_start ? st.at(StateKey{3, 0, 0}) : i_none] = 1.0;
  m.worst_idx = i_none;
  m.restart_idx = s.head_start ? st.at(StateKey{3, 0, 0}) : i_none;
  return m;
}

}  // namespace

void SyntheticSpec::validate() const {
  if (variant < 1 || variant > 4) throw std::invalid_argument("SyntheticSpec: variant must be 1..4");
  if (H < 1) throw std::invalid_argument("SyntheticSpec: H must be >= 1");
  if (!(k1 > 0.0)) throw std::invalid_argument("SyntheticSpec: k1 must be positive");
  if (k2 && !(*k2 > k1)) throw std::invalid_argument("SyntheticSpec: k2 must exceed k1");
}

int SyntheticSpec::transient_state_count() const {
  switch (variant) {
    case 1: return H + 1;
    case 2: return head_start ? H * H + 2 * H + 1 : H * H + H + 1;
    case 3: return head_start ? 3 * H + 1 : 2 * H + 1;
    case 4: return head_start ? 4 * H : 2 * H + 1;
    default: throw std::invalid_argument("SyntheticSpec: variant must be 1..4");
  }
}

MarkovModel build_chain(const SyntheticSpec& spec, double delta) {
  spec.validate();
  MarkovModel m;
  switch (spec.variant) {
    case 1: m = build_v1(spec, delta); break;
    case 2: m = build_v2(spec, delta); break;
    default: m = build_v34(spec, delta); break;
  }
  if (static_cast<int>(m.size()) != spec.transient_state_count()) {
    throw std::logic_error("build_chain: transient state count disagrees with the design table");
  }
  return m;
}

namespace {

// (a^n - b^n)/(a - b) with a series fallback when a and b nearly coincide.
double powered_divided_difference(double a, double b, int n) {
  const double scale = std::max(std::fabs(a), std::fabs(b));
  if (std::fabs(a - b) <= 1e-9 * scale) {
    const double mid = 0.5 * (a + b);
    return n * std::pow(mid, n - 1);
  }
  return (std::pow(a, n) - std::pow(b, n)) / (a - b);
}

double solve_rho(int H, double p, double q) {
  // rho^H (rho - q) = p q^H on (q, 1); strictly increasing there.
  const double target = p * std::pow(q, H);
  auto f = [&](double rho) { return std::pow(rho, H) * (rho - q) - target; };
  double lo = q, hi = 1.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (f(mid) < 0.0)
      lo = mid;
    else
      hi = mid;
    if (hi - lo < 1e-16 * hi) break;
  }
  double rho = 0.5 * (lo + hi);
  for (int it = 0; it < 8; ++it) {  // Newton polish
    const double fr = f(rho);
    const double dfr = std::pow(rho, H - 1) * ((H + 1) * rho - H * q);
    if (dfr == 0.0) break;
    const double step = fr / dfr;
    rho -= step;
    if (!(rho > q && rho < 1.0)) {
      rho = 0.5 * (lo + hi);
      break;
    }
    if (std::fabs(step) < 1e-17) break;
  }
  return rho;
}

}  // namespace

ClosedFormS1 closed_form_s1(int H, double k1, double delta) {
  if (H < 1) throw std::invalid_argument("closed_form_s1: H must be >= 1");
  if (!(k1 > 0.0)) throw std::invalid_argument("closed_form_s1: k1 must be positive");
  ClosedFormS1 cf;
  cf.p = signal_prob(k1, delta);
  cf.q = 1.0 - cf.p;
  const double qH = std::pow(cf.q, H);
  cf.r = cf.p * (1.0 - qH);
  cf.rho = solve_rho(H, cf.p, cf.q);
  cf.s = 1.0 - cf.q / cf.rho;

  cf.ell.resize(H + 1);
  for (int j = 0; j <= H; ++j) cf.ell[j] = 1.0 / cf.p + std::pow(cf.q, H - j) / cf.r;

  cf.psi1.resize(H + 1);
  for (int j = 0; j < H; ++j) cf.psi1[j] = std::pow(cf.q / cf.rho, j) * cf.s;
  cf.psi1[H] = cf.rho / cf.p * cf.s;

  cf.psi2.resize(H + 1);
  for (int j = 0; j < H; ++j) cf.psi2[j] = cf.p * std::pow(cf.q, j);
  cf.psi2[H] = qH;

  cf.psi3.resize(H + 1);
  for (int j = 0; j < H; ++j) cf.psi3[j] = cf.p * std::pow(cf.q, j) / (2.0 - qH);
  cf.psi3[H] = 1.0 / (2.0 - qH);

  cf.psi4.assign(H + 1, cf.p / (1.0 + H * cf.p));
  cf.psi4[H] = 1.0 / (1.0 + H * cf.p);
  return cf;
}

double closed_form_steady(int H, double k1, double delta, int which) {
  const ClosedFormS1 ic = closed_form_s1(H, k1, 0.0);
  const double p0 = ic.p, q0 = ic.q, rho0 = ic.rho, s0 = ic.s;
  const double pd = signal_prob(k1, delta);
  const double qd = 1.0 - pd;
  const double qdH = std::pow(qd, H);
  const double q0H = std::pow(q0, H);
  const double rd = pd * (1.0 - qdH);
  switch (which) {
    case 1: {
      const double t1 = rho0 / p0 + (1.0 - std::pow(q0 / rho0, H)) / (1.0 - q0 / rho0);
      const double ratio = q0 / (qd * rho0);
      const double t2 = rho0 / p0 + qdH * (1.0 - std::pow(ratio, H)) / (1.0 - ratio);
      return t1 * s0 / pd + t2 * s0 / rd;
    }
    case 2:
      return (1.0 + q0 * pd * powered_divided_difference(q0, qd, H)) / rd;
    case 3:
      return (1.0 - qdH) / rd +
             (1.0 + p0 * qd * powered_divided_difference(q0, qd, H)) / (rd * (2.0 - q0H));
    case 4:
      return (1.0 - qdH) / rd +
             (1.0 + p0 * qd * (1.0 - qdH) / (1.0 - qd)) / (rd * (1.0 + H * p0));
    default:
      throw std::invalid_argument("closed_form_steady: which must be 1..4");
  }
}

}  // namespace rlab
