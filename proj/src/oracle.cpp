#include "rlab/oracle.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <thread>
#include <vector>

#include "rlab/errors.hpp"
#include "rlab/gauss.hpp"
#include "rlab/parallel.hpp"

namespace rlab {

namespace {

// SplitMix64 (Steele, Lea, Flood) used for seeding.
std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// xoshiro256++ (Blackman, Vigna 2019).
struct Xoshiro256pp {
  std::uint64_t s[4];

  explicit Xoshiro256pp(std::uint64_t seed) {
    for (auto& word : s) word = splitmix64(seed);
  }

  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  std::uint64_t next() {
    const std::uint64_t result = rotl(s[0] + s[3], 23) + s[0];
    const std::uint64_t t = s[1] << 17;
    s[2] ^= s[0];
    s[3] ^= s[1];
    s[1] ^= s[2];
    s[0] ^= s[3];
    s[2] ^= t;
    s[3] = rotl(s[3], 45);
    return result;
  }

  double uniform01() {  // in (0,1)
    return static_cast<double>(next() >> 11) * 0x1.0p-53 + 0x1.0p-54;
  }

  double normal(double mu) { return mu + std_normal_quantile(uniform01()); }
};

std::uint64_t replication_seed(std::uint64_t seed, std::int64_t r) {
  std::uint64_t s = seed ^ (0xD1B54A32D192ED03ULL * static_cast<std::uint64_t>(r + 1));
  return splitmix64(s);
}

constexpr long kMaxRun = 100000000L;  // hard stop per replication

// ---- literal chart rules -----------------------------------------------

// Observation categories relative to (k1, center line).
enum Cat : int { kDownSig = -2, kDownCent = -1, kUpCent = 1, kUpSig = 2 };

Cat classify(double x, double k1) {
  if (x > k1) return kUpSig;
  if (x < -k1) return kDownSig;
  return x >= 0.0 ? kUpCent : kDownCent;
}

bool same_side_signal(int cat, int partner) { return cat == partner; }

// Replays the 2-of-(H+1) pattern rules on the raw stream. `hist` keeps the
// last H categories; a virtual undetermined-side signal sits at time 0 when
// the chart has a head start.
long run_synthetic(const SyntheticSpec& s, const ShiftModel& shift, Xoshiro256pp& gen) {
  const int H = s.H;
  std::vector<int> hist(static_cast<std::size_t>(H) + 1, 0);  // ring, index t % (H+1)
  for (long t = 1; t <= kMaxRun; ++t) {
    const double mu = (t >= shift.tau) ? shift.delta : 0.0;
    const double x = gen.normal(mu);
    if (s.k2 && std::fabs(x) > *s.k2) return t;  // direct Shewhart alarm
    const int cat = classify(x, s.k1);
    if (cat == kUpSig || cat == kDownSig) {
      for (int d = 1; d <= H && d < t + 1; ++d) {
        const long tp = t - d;
        bool partner_ok;
        if (tp == 0) {
          partner_ok = s.head_start;  // virtual signal binds to this side
        } else {
          const int partner = hist[static_cast<std::size_t>(tp % (H + 1))];
          partner_ok = (partner == kUpSig || partner == kDownSig) &&
                       (s.variant == 1 || same_side_signal(cat, partner));
        }
        if (!partner_ok) continue;
        bool fill_ok = true;
        if (s.variant == 3 || s.variant == 4) {
          for (long u = tp + 1; u < t && fill_ok; ++u) {
            const int mid = hist[static_cast<std::size_t>(u % (H + 1))];
            if (s.variant == 3) {
              fill_ok = (mid == kUpCent || mid == kDownCent);
            } else {
              fill_ok = (mid == (cat > 0 ? kUpCent : kDownCent));
            }
          }
        }
        if (fill_ok) return t;
      }
    }
    hist[static_cast<std::size_t>(t % (H + 1))] = cat;
  }
  return kMaxRun;
}

long run_ewma(const EwmaSpec& s, const ShiftModel& shift, Xoshiro256pp& gen) {
  const double sig_inf = std::sqrt(s.lambda / (2.0 - s.lambda));
  double z = 0.0;
  double fade = 1.0;  // (1-lambda)^{2i}
  const double om = (1.0 - s.lambda) * (1.0 - s.lambda);
  for (long t = 1; t <= kMaxRun; ++t) {
    const double mu = (t >= shift.tau) ? shift.delta : 0.0;
    const double x = gen.normal(mu);
    if (s.k2 && std::fabs(x) > *s.k2) return t;
    z = (1.0 - s.lambda) * z + s.lambda * x;
    double limit = s.c * sig_inf;
    if (s.limit_style == EwmaLimits::exact_varying) {
      fade *= om;
      limit *= std::sqrt(1.0 - fade);
    }
    if (std::fabs(z) > limit) return t;
  }
  return kMaxRun;
}

long run_cusum(const CusumSpec& s, const ShiftModel& shift, Xoshiro256pp& gen) {
  double up = 0.0, down = 0.0;
  for (long t = 1; t <= kMaxRun; ++t) {
    const double mu = (t >= shift.tau) ? shift.delta : 0.0;
    const double x = gen.normal(mu);
    if (s.k2 && std::fabs(x) > *s.k2) return t;
    up = std::max(0.0, up + x - s.k_ref);
    down = std::max(0.0, down - x - s.k_ref);
    if (up > s.h || down > s.h) return t;
  }
  return kMaxRun;
}

long run_shewhart(const ShewhartSpec& s, const ShiftModel& shift, Xoshiro256pp& gen) {
  for (long t = 1; t <= kMaxRun; ++t) {
    const double mu = (t >= shift.tau) ? shift.delta : 0.0;
    if (std::fabs(gen.normal(mu)) > s.k) return t;
  }
  return kMaxRun;
}

long run_once(const ChartSpec& spec, const ShiftModel& shift, Xoshiro256pp& gen) {
  if (const auto* s = std::get_if<SyntheticSpec>(&spec)) return run_synthetic(*s, shift, gen);
  if (const auto* e = std::get_if<EwmaSpec>(&spec)) return run_ewma(*e, shift, gen);
  if (const auto* c = std::get_if<CusumSpec>(&spec)) return run_cusum(*c, shift, gen);
  return run_shewhart(std::get<ShewhartSpec>(spec), shift, gen);
}

// Simulates replication indices [0, attempts) and accumulates per-chunk
// sums in index order so that the totals do not depend on scheduling.
struct ChunkSums {
  double sum = 0.0;
  double sumsq = 0.0;
  std::int64_t survived = 0;
};

std::vector<ChunkSums> simulate_range(const ChartSpec& spec, const ShiftModel& shift,
                                      std::int64_t attempts, std::uint64_t seed) {
  constexpr std::int64_t kChunk = 16384;
  const std::int64_t n_chunks = (attempts + kChunk - 1) / kChunk;
  std::vector<ChunkSums> chunks(static_cast<std::size_t>(n_chunks));
  std::atomic<std::int64_t> next_chunk{0};
  const int n_threads = worker_count();
  auto work = [&]() {
    for (;;) {
      const std::int64_t ci = next_chunk.fetch_add(1);
      if (ci >= n_chunks) return;
      ChunkSums acc;
      const std::int64_t lo = ci * kChunk;
      const std::int64_t hi = std::min(attempts, lo + kChunk);
      for (std::int64_t r = lo; r < hi; ++r) {
        Xoshiro256pp gen(replication_seed(seed, r));
        const long L = run_once(spec, shift, gen);
        if (L >= shift.tau) {
          const double delay = static_cast<double>(L - shift.tau + 1);
          acc.sum += delay;
          acc.sumsq += delay * delay;
          ++acc.survived;
        }
      }
      chunks[static_cast<std::size_t>(ci)] = acc;
    }
  };
  if (n_threads <= 1 || n_chunks <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(n_threads));
    for (int i = 0; i < n_threads; ++i) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  return chunks;
}

}  // namespace

SimResult simulate_run_length(const ChartSpec& spec, const ShiftModel& shift,
                              std::int64_t n_runs, std::uint64_t seed) {
  validate(spec);
  if (n_runs < 1) throw std::invalid_argument("simulate_run_length: n_runs must be >= 1");
  if (shift.tau < 1) throw std::invalid_argument("simulate_run_length: tau must be >= 1");

  std::int64_t attempts = n_runs;
  if (shift.tau > 1) {
    // Pilot to size the attempt count by the survival probability.
    const std::int64_t pilot = std::min<std::int64_t>(n_runs, 20000);
    const auto chunks = simulate_range(spec, shift, pilot, seed);
    std::int64_t survived = 0;
    for (const auto& c : chunks) survived += c.survived;
    const double p_hat = std::max(1e-4, static_cast<double>(survived) / static_cast<double>(pilot));
    attempts = std::min(50 * n_runs, static_cast<std::int64_t>(std::ceil(n_runs / p_hat)));
    attempts = std::max(attempts, n_runs);
  }

  const auto chunks = simulate_range(spec, shift, attempts, seed);
  double sum = 0.0, sumsq = 0.0;
  std::int64_t survived = 0;
  for (const auto& c : chunks) {
    sum += c.sum;
    sumsq += c.sumsq;
    survived += c.survived;
  }
  if (shift.tau > 1 && survived < 100) {
    throw StarvationError("simulate_run_length: fewer than 100 runs survived to the change point");
  }
  SimResult res;
  res.n_runs = survived;
  res.seed = seed;
  res.mean_rl = sum / static_cast<double>(survived);
  const double var =
      (sumsq - sum * sum / static_cast<double>(survived)) / static_cast<double>(survived - 1);
  res.std_err = std::sqrt(std::max(0.0, var) / static_cast<double>(survived));
  return res;
}

}  // namespace rlab
