#include "lcsim/lottery_model.hpp"

#include <algorithm>
#include <cmath>

namespace lcsim {

void ProtocolParams::validate() const {
  if (!(rho > 0.0)) throw std::invalid_argument("rho must be > 0");
  if (!(beta >= 0.0 && beta < 1.0)) throw std::invalid_argument("beta must be in [0,1)");
  if (budget_k < 1) throw std::invalid_argument("budget_k must be >= 1");
  if (horizon < 1) throw std::invalid_argument("horizon must be >= 1");
  if (num_nodes < 1) throw std::invalid_argument("num_nodes must be >= 1");
  if (parallel_m < 1) throw std::invalid_argument("parallel_m must be >= 1");
  if (lottery_mode == LotteryMode::Binomial) {
    double c = beta * num_nodes;
    if (std::abs(c - std::round(c)) > 1e-9)
      throw std::invalid_argument("beta*num_nodes must be integral in binomial mode");
    if (num_nodes % parallel_m != 0)
      throw std::invalid_argument("parallel_m must divide num_nodes");
  }
}

uint32_t ProtocolParams::num_corrupted() const {
  return static_cast<uint32_t>(std::llround(beta * num_nodes));
}

DerivedConstants derive_constants(const ProtocolParams& params) {
  DerivedConstants d;
  d.p = -std::expm1(-params.rho);
  d.p_u = (1.0 - params.beta) * params.rho * std::exp(-params.rho);
  d.p_a = d.p - d.p_u;
  return d;
}

std::vector<uint32_t> corrupted_set(const ProtocolParams& params) {
  uint32_t n = params.num_nodes;
  uint32_t c = params.num_corrupted();
  std::vector<uint32_t> ids(n);
  for (uint32_t i = 0; i < n; ++i) ids[i] = i;
  Rng rng(substream(params.seed, StreamPurpose::Corruption));
  for (uint32_t i = 0; i + 1 < n; ++i) {  // Fisher-Yates
    uint32_t j = i + static_cast<uint32_t>(rng.next_below(n - i));
    std::swap(ids[i], ids[j]);
  }
  ids.resize(c);
  std::sort(ids.begin(), ids.end());
  return ids;
}

uint32_t poisson_sample(Rng& rng, double lambda) {
  // Knuth inversion by uniform products; lambdas here are small (< ~5).
  double limit = std::exp(-lambda);
  uint32_t k = 0;
  double prod = rng.next_double();
  while (prod > limit) {
    ++k;
    prod *= rng.next_double();
  }
  return k;
}

Execution sample_execution(const ProtocolParams& params) {
  params.validate();
  Execution exec;
  exec.honest_counts.assign(params.horizon, 0);
  exec.adversarial_counts.assign(params.horizon, 0);
  if (params.lottery_mode == LotteryMode::Poisson) {
    Rng rng(substream(params.seed, StreamPurpose::Execution));
    double lh = (1.0 - params.beta) * params.rho;
    double la = params.beta * params.rho;
    for (uint32_t t = 0; t < params.horizon; ++t) {
      exec.honest_counts[t] = poisson_sample(rng, lh);
      exec.adversarial_counts[t] = la > 0.0 ? poisson_sample(rng, la) : 0;
    }
    return exec;
  }
  // Binomial mode: the same per-(node,slot) coins the engine's header tree
  // uses, so leader identities and counts are consistent by construction.
  std::vector<uint32_t> corrupted = corrupted_set(params);
  std::vector<bool> is_corrupted(params.num_nodes, false);
  for (uint32_t id : corrupted) is_corrupted[id] = true;
  uint64_t stream = substream(params.seed, StreamPurpose::Lottery);
  uint32_t per_instance = params.num_nodes / params.parallel_m;
  uint64_t thr = leader_threshold(params.rho / per_instance);
  for (uint32_t t = 1; t <= params.horizon; ++t) {
    for (uint32_t node = 0; node < params.num_nodes; ++node) {
      if (lottery_coin(stream, node, t, thr)) {
        if (is_corrupted[node])
          ++exec.adversarial_counts[t - 1];
        else
          ++exec.honest_counts[t - 1];
      }
    }
  }
  return exec;
}

SlotClass classify_slot(const Execution& exec, uint32_t t) {
  if (t < 1 || t > exec.horizon()) throw std::out_of_range("slot out of range");
  uint32_t h = exec.honest_counts[t - 1];
  uint32_t a = exec.adversarial_counts[t - 1];
  if (h + a == 0) return SlotClass::Empty;
  if (a == 0 && h == 1) return SlotClass::UniquelySuccessful;
  return SlotClass::Adversarial;
}

IntervalCounts count_interval(const Execution& exec, uint32_t r, uint32_t s) {
  if (r > s || s > exec.horizon()) throw std::out_of_range("bad interval");
  IntervalCounts c{0, 0, 0};
  for (uint32_t t = r + 1; t <= s; ++t) {
    switch (classify_slot(exec, t)) {
      case SlotClass::UniquelySuccessful: ++c.u; break;
      case SlotClass::Adversarial: ++c.n; break;
      case SlotClass::Empty: break;
    }
  }
  c.b = c.u + c.n;
  return c;
}

}  // namespace lcsim
