#include "lcsim/parallel_chains.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace lcsim {

ParallelAssignment assign_primaries(const ProtocolParams& params) {
  uint32_t n = params.num_nodes, m = params.parallel_m;
  if (m == 0 || n % m != 0)
    throw std::invalid_argument("parallel_m must divide num_nodes");
  std::vector<uint32_t> perm(n);
  for (uint32_t i = 0; i < n; ++i) perm[i] = i;
  Rng rng(substream(params.seed, StreamPurpose::Assignment));
  for (uint32_t i = n - 1; i > 0; --i)
    std::swap(perm[i], perm[rng.next_below(i + 1)]);
  ParallelAssignment a;
  a.primary_of.assign(n, 0);
  a.partition.resize(m);
  uint32_t per = n / m;
  for (uint32_t i = 0; i < n; ++i) {
    uint32_t inst = i / per;
    a.primary_of[perm[i]] = inst;
    a.partition[inst].push_back(perm[i]);
  }
  for (auto& part : a.partition) std::sort(part.begin(), part.end());
  return a;
}

HeaderId truncate_chain(const GlobalHeaderSet& gs, HeaderId tip, uint32_t now,
                        uint32_t t_conf) {
  int64_t cutoff = int64_t(now) - int64_t(t_conf);
  HeaderId h = tip;
  while (h != kGenesis && int64_t(gs.hdr(h).slot) > cutoff) h = gs.hdr(h).parent;
  return h;
}

std::optional<PcTarget> pc_download_tick(std::vector<NodeView*>& views, uint32_t primary,
                                         RuleId rule, TieBreaker& ties, uint32_t now,
                                         uint32_t t_conf) {
  if (auto sel = select_download(*views[primary], rule, ties))
    return PcTarget{primary, sel->block};
  std::optional<PcTarget> best;
  uint32_t best_slot = 0;
  for (uint32_t inst = 0; inst < views.size(); ++inst) {
    if (inst == primary) continue;
    NodeView& v = *views[inst];
    HeaderId conf = truncate_chain(v.gs(), v.longest_known_tip(), now, t_conf);
    auto blk = v.earliest_unknown(conf);
    if (!blk) continue;
    uint32_t s = v.gs().hdr(*blk).slot;
    if (!best || s < best_slot) {
      best = PcTarget{inst, *blk};
      best_slot = s;
    }
  }
  return best;
}

MergedLedger merge_ledgers(const std::vector<const GlobalHeaderSet*>& instances,
                           const std::vector<HeaderId>& confirmed_tips) {
  MergedLedger out;
  out.tmax = 0xffffffffu;
  for (size_t i = 0; i < instances.size(); ++i)
    out.tmax = std::min(out.tmax, instances[i]->hdr(confirmed_tips[i]).slot);
  for (uint32_t inst = 0; inst < instances.size(); ++inst) {
    const GlobalHeaderSet& gs = *instances[inst];
    std::vector<MergedEntry> chain;
    for (HeaderId h = confirmed_tips[inst]; h != kGenesis; h = gs.hdr(h).parent)
      if (gs.hdr(h).slot <= out.tmax)
        chain.push_back(MergedEntry{gs.hdr(h).slot, inst, h, gs.hdr(h).height});
    out.entries.insert(out.entries.end(), chain.rbegin(), chain.rend());
  }
  std::sort(out.entries.begin(), out.entries.end(),
            [](const MergedEntry& a, const MergedEntry& b) {
              if (a.slot != b.slot) return a.slot < b.slot;
              if (a.instance != b.instance) return a.instance < b.instance;
              return a.height < b.height;
            });
  return out;
}

uint32_t capacity_plan(const ProtocolParams& params, double epsilon7) {
  DerivedConstants d = derive_constants(params);
  double phi_p = d.p;
  double phi_idle = d.p_u * (1.0 - d.p) / d.p;
  double secondaries = phi_idle * params.budget_k / phi_p * (1.0 - epsilon7);
  if (secondaries < 0) secondaries = 0;
  return 1 + uint32_t(std::floor(secondaries));
}

}  // namespace lcsim
