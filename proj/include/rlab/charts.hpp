#pragma once

#include <string>
#include <variant>

#include "rlab/classic.hpp"
#include "rlab/synth.hpp"

namespace rlab {

/// Change-point model over standardized observations: mean 0 before tau,
/// mean delta from tau on.
struct ShiftModel {
  double delta = 0.0;
  long tau = 1;
};

using ChartSpec = std::variant<SyntheticSpec, EwmaSpec, CusumSpec, ShewhartSpec>;

enum class ArlMeasure { zero_state, steady_state_conditional };

void validate(const ChartSpec& spec);
std::string chart_label(const ChartSpec& spec);

double chart_zero_state_arl(const ChartSpec& spec, double delta);
double chart_steady_state_arl(const ChartSpec& spec, double delta);
double chart_arl(const ChartSpec& spec, double delta, ArlMeasure measure);

CedProfile chart_ced(const ChartSpec& spec, double delta, int tau_max);

}  // namespace rlab
