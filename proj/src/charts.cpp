#include "rlab/charts.hpp"

#include <cmath>
#include <sstream>

namespace rlab {

namespace {

const char* variant_code(const SyntheticSpec& s) {
  static const char* with_hs[] = {"S1", "S2", "S3", "S4"};
  static const char* without[] = {"R1", "R2", "R3", "R4"};
  return s.head_start ? with_hs[s.variant - 1] : without[s.variant - 1];
}

}  // namespace

void validate(const ChartSpec& spec) {
  std::visit([](const auto& s) { s.validate(); }, spec);
}

std::string chart_label(const ChartSpec& spec) {
  std::ostringstream os;
  if (const auto* s = std::get_if<SyntheticSpec>(&spec)) {
    os << variant_code(*s) << "(H=" << s->H << ",k1=" << s->k1;
    if (s->k2) os << ",k2=" << *s->k2;
    os << ")";
  } else if (const auto* e = std::get_if<EwmaSpec>(&spec)) {
    os << "EWMA(lambda=" << e->lambda << ",c=" << e->c
       << (e->limit_style == EwmaLimits::exact_varying ? ",exact" : ",fixed");
    if (e->k2) os << ",k2=" << *e->k2;
    os << ")";
  } else if (const auto* c = std::get_if<CusumSpec>(&spec)) {
    os << "CUSUM(k=" << c->k_ref << ",h=" << c->h;
    if (c->k2) os << ",k2=" << *c->k2;
    os << ")";
  } else if (const auto* w = std::get_if<ShewhartSpec>(&spec)) {
    os << "Shewhart(k=" << w->k << ")";
  }
  return os.str();
}

double chart_zero_state_arl(const ChartSpec& spec, double delta) {
  if (const auto* s = std::get_if<SyntheticSpec>(&spec)) {
    const MarkovModel m = build_chain(*s, delta);
    return zero_state_arl(m, arl_vector(m.q));
  }
  if (const auto* e = std::get_if<EwmaSpec>(&spec)) return ewma_arl(*e, delta);
  if (const auto* c = std::get_if<CusumSpec>(&spec)) return cusum_arl(*c, delta);
  return shewhart_arl(std::get<ShewhartSpec>(spec), delta);
}

double chart_steady_state_arl(const ChartSpec& spec, double delta) {
  if (const auto* s = std::get_if<SyntheticSpec>(&spec)) {
    const MarkovModel ic = build_chain(*s, 0.0);
    const MarkovModel oc = build_chain(*s, delta);
    return steady_state_arl(dominant_left_eigen(ic.q).psi, arl_vector(oc.q));
  }
  if (const auto* e = std::get_if<EwmaSpec>(&spec)) return ewma_steady_arl(*e, delta);
  if (const auto* c = std::get_if<CusumSpec>(&spec)) {
    const MarkovModel ic = cusum_model(*c, 0.0);
    const MarkovModel oc = cusum_model(*c, delta);
    return steady_state_arl(dominant_left_eigen(ic.q).psi, arl_vector(oc.q));
  }
  return shewhart_arl(std::get<ShewhartSpec>(spec), delta);  // memoryless
}

double chart_arl(const ChartSpec& spec, double delta, ArlMeasure measure) {
  return measure == ArlMeasure::zero_state ? chart_zero_state_arl(spec, delta)
                                           : chart_steady_state_arl(spec, delta);
}

CedProfile chart_ced(const ChartSpec& spec, double delta, int tau_max) {
  if (const auto* s = std::get_if<SyntheticSpec>(&spec)) {
    const MarkovModel ic = build_chain(*s, 0.0);
    const MarkovModel oc = build_chain(*s, delta);
    return ced_profile(ic.q, oc.q, ic.init, tau_max);
  }
  if (const auto* e = std::get_if<EwmaSpec>(&spec)) return ewma_ced(*e, delta, tau_max);
  if (const auto* c = std::get_if<CusumSpec>(&spec)) {
    const MarkovModel ic = cusum_model(*c, 0.0);
    const MarkovModel oc = cusum_model(*c, delta);
    return ced_profile(ic.q, oc.q, ic.init, tau_max);
  }
  // Memoryless: every delay equals the ARL.
  const double a = shewhart_arl(std::get<ShewhartSpec>(spec), delta);
  CedProfile p;
  p.values.assign(static_cast<std::size_t>(tau_max), a);
  p.limit = a;
  p.converged = true;
  return p;
}

}  // namespace rlab
