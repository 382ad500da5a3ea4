#pragma once

#include <cstdint>

#include "rlab/charts.hpp"

namespace rlab {

struct SimResult {
  double mean_rl = 0.0;   // estimated ARL (tau = 1) or CED (tau > 1)
  double std_err = 0.0;   // sample standard deviation / sqrt(n_runs)
  std::int64_t n_runs = 0;  // replications entering the estimate
  std::uint64_t seed = 0;
};

/// Monte-Carlo run length of a chart under the change-point model. The
/// synthetic charts replay the literal 2-of-(H+1) pattern rules on the
/// observation stream rather than the Markov encoding; that independence is
/// the point of this module. For tau > 1 the estimate conditions on
/// surviving to the change point; runs alarming earlier are discarded and
/// the number of attempts grows with 1/P(survival) up to a cap. Fewer than
/// 100 surviving runs raise StarvationError.
///
/// Randomness: xoshiro256++ per replication, seeded via SplitMix64 from
/// (seed, replication index); normal variates by inverse cdf. Results are
/// bit-identical for equal seeds regardless of thread count.
SimResult simulate_run_length(const ChartSpec& spec, const ShiftModel& shift,
                              std::int64_t n_runs, std::uint64_t seed);

}  // namespace rlab
