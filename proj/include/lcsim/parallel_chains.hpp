#pragma once
// Parallel chain composition: random equi-partition of nodes into m lottery
// instances, primary-first download scheduling, merged-ledger construction,
// and the capacity plan that packs secondaries into idle bandwidth.

#include <optional>
#include <vector>

#include "lcsim/download_rules.hpp"
#include "lcsim/lottery_model.hpp"
#include "lcsim/node_protocol.hpp"

namespace lcsim {

struct ParallelAssignment {
  std::vector<uint32_t> primary_of;           // node id -> instance index
  std::vector<std::vector<uint32_t>> partition;  // instance -> sorted member ids
};

// Uniform equi-partition drawn from the seed's assignment sub-stream.
// Throws std::invalid_argument when m does not divide N.
ParallelAssignment assign_primaries(const ProtocolParams& params);

struct PcTarget {
  uint32_t instance;
  HeaderId block;
};

// One download tick of the composed protocol: the node's primary-rule
// selection if any, otherwise the Unknown block with the oldest slot along
// the secondary instances' t_conf-truncated longest header chains (ties to
// the lowest instance index); nullopt when nothing is missing.
std::optional<PcTarget> pc_download_tick(std::vector<NodeView*>& views, uint32_t primary,
                                         RuleId rule, TieBreaker& ties, uint32_t now,
                                         uint32_t t_conf);

struct MergedEntry {
  uint32_t slot;
  uint32_t instance;
  HeaderId block;
  uint32_t height;
};

struct MergedLedger {
  std::vector<MergedEntry> entries;  // sorted by (slot, instance)
  uint32_t tmax = 0;                 // max common confirmed slot across instances
};

// Merge per-instance confirmed prefixes (given by tip): keep blocks with
// slot <= tmax = min over instances of the confirmed tip slot, sorted by
// (slot, instance).
MergedLedger merge_ledgers(const std::vector<const GlobalHeaderSet*>& instances,
                           const std::vector<HeaderId>& confirmed_tips);

// m = 1 + floor(phi_idle * K / phi_p * (1 - epsilon7)).
uint32_t capacity_plan(const ProtocolParams& params, double epsilon7);

// T_conf-truncation helper: deepest ancestor with slot <= now - t_conf.
HeaderId truncate_chain(const GlobalHeaderSet& gs, HeaderId tip, uint32_t now,
                        uint32_t t_conf);

}  // namespace lcsim
