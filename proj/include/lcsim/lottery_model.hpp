#pragma once
// Protocol parameters, derived constants, execution sampling and slot
// classification: the probabilistic substrate everything else builds on.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace lcsim {

// ---------------------------------------------------------------------------
// Deterministic randomness.
//
// A single 64-bit seed is split into independent sub-streams, one per
// consumer (lottery, corruption draw, adversary choices, ...), so that
// toggling one consumer never perturbs another. Streams are counter-based
// (splitmix64), which also gives order-independent per-(node,slot) lottery
// coins.

inline uint64_t mix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

enum class StreamPurpose : uint64_t {
  Lottery = 1,
  Corruption = 2,
  Assignment = 3,
  Adversary = 4,
  Execution = 5,
};

inline uint64_t substream(uint64_t seed, StreamPurpose p) {
  return mix64(seed ^ mix64(static_cast<uint64_t>(p) * 0xd6e8feb86659fd93ull));
}

// Counter-based generator over a sub-stream seed.
class Rng {
 public:
  explicit Rng(uint64_t stream_seed) : s_(stream_seed) {}

  uint64_t next_u64() { return mix64(s_ + 0x9e3779b97f4a7c15ull * ++ctr_); }

  // Uniform in [0,1), 53 bits.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n).
  uint64_t next_below(uint64_t n) { return next_u64() % n; }

 private:
  uint64_t s_;
  uint64_t ctr_ = 0;
};

// ---------------------------------------------------------------------------

enum class LotteryMode { Binomial, Poisson };

struct ProtocolParams {
  double rho = 0.06;          // expected leaders per slot
  double beta = 0.0;          // adversarial stake fraction, [0,1)
  uint32_t num_nodes = 20;    // N
  uint32_t budget_k = 4;      // K content downloads per node per slot
  uint32_t t_conf = 10;       // confirmation depth, slots
  uint32_t horizon = 1000;    // T_h
  LotteryMode lottery_mode = LotteryMode::Binomial;
  uint64_t seed = 1;
  std::string rule_id = "freshest";
  std::string adversary_id = "null";
  uint32_t parallel_m = 1;

  void validate() const;                  // throws std::invalid_argument
  uint32_t num_corrupted() const;         // floor(beta*N), integral by invariant
};

struct DerivedConstants {
  double p;    // Prob[slot successful]        = 1 - e^-rho
  double p_u;  // Prob[uniquely successful]    = (1-beta) rho e^-rho
  double p_a;  // Prob[adversarial]            = p - p_u
};

DerivedConstants derive_constants(const ProtocolParams& params);

// Per-slot honest/adversarial leader counts: the randomness of a run.
struct Execution {
  std::vector<uint32_t> honest_counts;       // H_t, index t-1
  std::vector<uint32_t> adversarial_counts;  // A_t

  uint32_t horizon() const { return static_cast<uint32_t>(honest_counts.size()); }
};

enum class SlotClass { Empty, UniquelySuccessful, Adversarial };

// Static corruption: the fixed corrupted id set drawn from the seed.
std::vector<uint32_t> corrupted_set(const ProtocolParams& params);

// The binomial-mode lottery coin (Alg.-3-style per-node trial), pure in
// (seed, node, slot). A node is only ever eligible in its primary instance,
// so the coin is keyed by node alone; threshold = prob_per_node * 2^64.
inline bool lottery_coin(uint64_t lottery_stream, uint32_t node, uint32_t slot,
                         uint64_t threshold) {
  uint64_t u = mix64(lottery_stream ^ mix64((uint64_t(node) << 32) ^ slot));
  return u < threshold;
}

inline uint64_t leader_threshold(double prob_per_node) {
  if (prob_per_node >= 1.0) return ~0ull;
  if (prob_per_node <= 0.0) return 0;
  return static_cast<uint64_t>(prob_per_node * 0x1.0p64);
}

Execution sample_execution(const ProtocolParams& params);

SlotClass classify_slot(const Execution& exec, uint32_t t);  // t in 1..T_h

struct IntervalCounts {
  uint32_t u;  // uniquely successful slots in (r,s]
  uint32_t n;  // adversarial slots in (r,s]
  uint32_t b;  // u + n
};

IntervalCounts count_interval(const Execution& exec, uint32_t r, uint32_t s);

// Poisson sampler used by sample_execution and tests.
uint32_t poisson_sample(Rng& rng, double lambda);

}  // namespace lcsim
