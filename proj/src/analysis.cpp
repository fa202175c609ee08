#include "lcsim/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace lcsim {
namespace {

// Prefix counts over a classified execution: u[x] / n[x] = uniquely
// successful / adversarial slots in 1..x.
struct Prefixes {
  std::vector<uint32_t> u, n;
  std::vector<uint32_t> adv_pos;  // slot index of the k-th adversarial slot

  explicit Prefixes(const Execution& exec) {
    uint32_t T = exec.horizon();
    u.assign(T + 1, 0);
    n.assign(T + 1, 0);
    adv_pos.push_back(0);  // 1-based
    for (uint32_t t = 1; t <= T; ++t) {
      SlotClass c = classify_slot(exec, t);
      u[t] = u[t - 1] + (c == SlotClass::UniquelySuccessful ? 1 : 0);
      n[t] = n[t - 1] + (c == SlotClass::Adversarial ? 1 : 0);
      if (c == SlotClass::Adversarial) adv_pos.push_back(t);
    }
  }
};

bool pivot_with(const Prefixes& px, uint32_t T, uint32_t t) {
  // Not a pivot iff exists r < t <= s with N(r,s] >= max(1, U(r,s]), i.e.
  // f(s) >= f(r) for some r with n(r) < n(s), f = n - u. Admissible r given
  // s: r < min(t, position of the n(s)-th adversarial slot).
  std::vector<int64_t> f(T + 1), pg(T + 2);
  for (uint32_t x = 0; x <= T; ++x) f[x] = int64_t(px.n[x]) - int64_t(px.u[x]);
  pg[0] = std::numeric_limits<int64_t>::max();
  for (uint32_t x = 0; x <= T; ++x) pg[x + 1] = std::min(pg[x], f[x]);
  for (uint32_t s = t; s <= T; ++s) {
    uint32_t k = px.n[s];
    if (k == 0) continue;
    uint32_t rmax = std::min(t, px.adv_pos[k]);  // r < rmax
    if (f[s] >= pg[rmax]) return false;
  }
  return true;
}

}  // namespace

bool check_pivot(const Execution& exec, uint32_t t) {
  Prefixes px(exec);
  return pivot_with(px, exec.horizon(), t);
}

bool check_freq_pivots(const Execution& exec, uint32_t gamma) {
  uint32_t T = exec.horizon();
  Prefixes px(exec);
  std::vector<uint8_t> good(T + 1, 0);
  for (uint32_t t = 1; t <= T; ++t)
    good[t] = px.u[t] - px.u[t - 1] == 1 && pivot_with(px, T, t);
  if (gamma > T) {
    return true;  // no window fits: vacuous (gamma = T needs one anywhere)
  }
  for (uint32_t t = 0; t + gamma <= T; ++t) {
    bool found = false;
    for (uint32_t s = t + 1; s <= t + gamma && !found; ++s) found = good[s];
    if (!found) return false;
  }
  return true;
}

bool check_short_prefixes(const Execution& exec, uint32_t k) {
  uint32_t T = exec.horizon();
  Prefixes px(exec);
  for (uint32_t t = 1; t <= T; ++t) {
    // r = 0 anchors at genesis, which every node holds; it counts as unique.
    for (uint32_t r = 0; r < t; ++r) {
      if (r > 0 && px.u[r] - px.u[r - 1] != 1) continue;  // Unique(r)
      uint32_t N = px.n[t] - px.n[r], U = px.u[t] - px.u[r];
      if (N >= U && N >= k) return false;
    }
  }
  return true;
}

uint32_t compute_w(const Execution& exec, uint32_t s, uint32_t t) {
  Prefixes px(exec);
  uint32_t best = 0;
  for (uint32_t r = 0; r < s; ++r) {
    if (r > 0 && px.u[r] - px.u[r - 1] != 1) continue;  // genesis counts as unique
    uint32_t N = px.n[s] - px.n[r];
    if (N >= px.u[t] - px.u[r]) best = std::max(best, N);
  }
  return best;
}

namespace {

// Fenwick tree for prefix minima over keys 1..size.
struct FenwickMin {
  std::vector<int64_t> v;
  explicit FenwickMin(uint32_t size)
      : v(size + 1, std::numeric_limits<int64_t>::max()) {}
  void update(uint32_t i, int64_t val) {
    for (; i < v.size(); i += i & (~i + 1)) v[i] = std::min(v[i], val);
  }
  int64_t query(uint32_t i) const {  // min over keys 1..i
    int64_t m = std::numeric_limits<int64_t>::max();
    i = std::min<uint32_t>(i, uint32_t(v.size() - 1));
    for (; i > 0; i -= i & (~i + 1)) m = std::min(m, v[i]);
    return m;
  }
};

}  // namespace

bool check_few_long_chains(const Execution& exec, uint32_t k) {
  uint32_t T = exec.horizon();
  Prefixes px(exec);
  int64_t off = int64_t(T) + 1;  // key(r) = n(r)-u(r)+off in [1, 2T+1]
  for (uint32_t t = 1; t <= T; ++t) {
    // W_{s,t} = n(s) - min{ n(r) : r < s, Unique(r), n(r)-u(r) <= n(s)-u(t) }
    FenwickMin fen(2 * T + 1);
    uint64_t total = 0;
    for (uint32_t s = 1; s <= t; ++s) {
      uint32_t r = s - 1;
      if (r == 0 || px.u[r] - px.u[r - 1] == 1)
        fen.update(uint32_t(int64_t(px.n[r]) - int64_t(px.u[r]) + off), px.n[r]);
      uint32_t a = exec.adversarial_counts[s - 1];
      if (a == 0) continue;
      int64_t key = int64_t(px.n[s]) - int64_t(px.u[t]) + off;
      if (key < 1) continue;
      int64_t mn = fen.query(uint32_t(key));
      if (mn == std::numeric_limits<int64_t>::max()) continue;
      total += uint64_t(a) * uint64_t(int64_t(px.n[s]) - mn);
    }
    if (t >= 2) total += compute_w(exec, t - 1, t - 1);
    if (total >= k) return false;
  }
  return true;
}

bool check_maxdl(const Trace& trace) {
  for (const TraceRow& row : trace.rows)
    if (row.unique && !row.maxdl) return false;
  return true;
}

// --- naive oracles -----------------------------------------------------------

bool check_pivot_naive(const Execution& exec, uint32_t t) {
  uint32_t T = exec.horizon();
  for (uint32_t r = 0; r < t; ++r)
    for (uint32_t s = t; s <= T; ++s) {
      IntervalCounts c = count_interval(exec, r, s);
      if (!(c.u > c.n || c.n == 0)) return false;
    }
  return true;
}

bool check_freq_pivots_naive(const Execution& exec, uint32_t gamma) {
  uint32_t T = exec.horizon();
  if (gamma > T) return true;
  for (uint32_t t = 0; t + gamma <= T; ++t) {
    bool found = false;
    for (uint32_t s = t + 1; s <= t + gamma && !found; ++s)
      found = classify_slot(exec, s) == SlotClass::UniquelySuccessful &&
              check_pivot_naive(exec, s);
    if (!found) return false;
  }
  return true;
}

bool check_short_prefixes_naive(const Execution& exec, uint32_t k) {
  uint32_t T = exec.horizon();
  for (uint32_t t = 1; t <= T; ++t) {
    uint32_t worst = 0;
    for (uint32_t r = 0; r < t; ++r) {
      if (r > 0 && classify_slot(exec, r) != SlotClass::UniquelySuccessful) continue;
      IntervalCounts c = count_interval(exec, r, t);
      if (c.n >= c.u) worst = std::max(worst, c.n);
    }
    if (worst >= k) return false;
  }
  return true;
}

uint32_t compute_w_naive(const Execution& exec, uint32_t s, uint32_t t) {
  uint32_t best = 0;
  for (uint32_t r = 0; r < s; ++r) {
    if (r > 0 && classify_slot(exec, r) != SlotClass::UniquelySuccessful) continue;
    if (count_interval(exec, r, s).n >= count_interval(exec, r, t).u)
      best = std::max(best, count_interval(exec, r, s).n);
  }
  return best;
}

bool check_few_long_chains_naive(const Execution& exec, uint32_t k) {
  uint32_t T = exec.horizon();
  for (uint32_t t = 1; t <= T; ++t) {
    uint64_t total = t >= 2 ? compute_w_naive(exec, t - 1, t - 1) : 0;
    for (uint32_t s = 1; s <= t; ++s)
      total += uint64_t(exec.adversarial_counts[s - 1]) * compute_w_naive(exec, s, t);
    if (total >= k) return false;
  }
  return true;
}

// --- bounds -------------------------------------------------------------------

namespace {
double clamp01(double x) { return std::min(1.0, std::max(0.0, x)); }
void require_eps1(double e) {
  if (!(e > 0.0 && e < 1.0)) throw std::domain_error("epsilon1 must lie in (0,1)");
}
}  // namespace

double bound_short_prefixes(const ProtocolParams& params, const BoundParams& bp) {
  require_eps1(bp.epsilon1);
  DerivedConstants d = derive_constants(params);
  double alpha2 = std::min(bp.epsilon1 * bp.epsilon1 / 36.0,
                           bp.epsilon2 * bp.epsilon2 / (bp.epsilon2 + 2.0) * d.p_a / d.p);
  double th = double(params.horizon);
  return clamp01(2.0 * th * th * std::exp(-alpha2 * d.p * bp.t_window));
}

double bound_few_long_chains(const ProtocolParams& params, const BoundParams& bp,
                             Alpha3Reading reading) {
  require_eps1(bp.epsilon1);
  DerivedConstants d = derive_constants(params);
  double e2 = bp.epsilon2, e3 = bp.epsilon3;
  double terms[5] = {
      bp.epsilon1 * bp.epsilon1 / 36.0,
      e2 * e2 / (e2 + 2.0) * d.p_a / d.p,
      d.p_u * (1.0 - e3) / d.p * std::log(d.p_u / (1.0 - d.p_u)),
      e3 * e3 * d.p_u / (2.0 * d.p),
      e3 * e3 * params.beta * params.rho / ((e3 + 2.0) * d.p),
  };
  double alpha3 = terms[0];
  for (double t : terms)
    alpha3 = reading == Alpha3Reading::MaxOfTerms ? std::max(alpha3, t)
                                                  : std::min(alpha3, t);
  double th = double(params.horizon);
  return clamp01(5.0 * th * th * std::exp(-alpha3 * d.p * bp.t_window));
}

FreqPivotsBound bound_freq_pivots(const ProtocolParams& params, const BoundParams& bp) {
  require_eps1(bp.epsilon1);
  DerivedConstants d = derive_constants(params);
  double th = double(params.horizon);
  double a1p = bp.epsilon1 * bp.epsilon1 / 36.0;  // alpha1'
  double ap = a1p * d.p;
  double v = std::log(4.0 * (1.0 + std::exp(-ap)) /
                      ((1.0 - std::exp(-ap)) * (1.0 - std::exp(-ap)))) /
             ap;
  double w = std::max(2.0 * std::log(std::sqrt(2.0) * th) / ap, 2.0 * v) * (1.0 + 1e-9);
  double p1 = 0.5 * std::pow(1.0 - d.p_a, 2.0 * v - 1.0);
  double a1pp = p1 * d.p_u / 2.0;  // alpha1''
  double gamma = bp.gamma > 0 ? bp.gamma : (std::log(th) + bp.kappa) * w / a1pp;
  double bound =
      clamp01(2.0 * th * th * std::exp(-ap * w) + th * std::exp(-a1pp * gamma / w));
  return FreqPivotsBound{bound, w, v, gamma};
}

std::optional<double> solve_rho(double beta, double epsilon1) {
  if (!(beta >= 0.0 && beta < 0.5)) throw std::domain_error("beta must lie in [0, 1/2)");
  require_eps1(epsilon1);
  if (epsilon1 >= 1.0 - 2.0 * beta) return std::nullopt;
  auto h = [&](double rho) {
    return (1.0 - beta) * rho * std::exp(-rho) -
           (-std::expm1(-rho)) / 2.0 * (1.0 + epsilon1);
  };
  double lo = 1e-12, hi = 1.0;
  while (h(hi) > 0.0 && hi < 1e3) hi *= 2.0;
  for (int i = 0; i < 200; ++i) {
    double mid = 0.5 * (lo + hi);
    if (h(mid) > 0.0)
      lo = mid;
    else
      hi = mid;
  }
  double root = 0.5 * (lo + hi);
  if (std::fabs(h(root)) >= 1e-12) return std::nullopt;  // should not happen in domain
  return root;
}

ThroughputBounds throughput_bounds(const ProtocolParams& params, uint32_t m) {
  DerivedConstants d = derive_constants(params);
  ThroughputBounds tb;
  tb.theta = 2.0 * d.p_u - d.p;
  tb.phi_p = d.p;
  tb.phi_idle = d.p_u * (1.0 - d.p) / d.p;
  tb.tp_m = double(m) * tb.theta;
  double eps1 = 2.0 * d.p_u / d.p - 1.0;  // slack at which the condition is tight
  tb.tp_floor = (1.0 - d.p) * eps1 / 2.0 * double(params.budget_k);
  return tb;
}

}  // namespace lcsim
