#pragma once
// Slot-loop orchestration: phase 1 (lottery, proposals, adversary, header
// dissemination) and phase 2 (round-robin download ticks with adversary
// hooks), trace recording, and the safety/liveness verdicts.

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "lcsim/download_rules.hpp"
#include "lcsim/environment.hpp"
#include "lcsim/headertree.hpp"
#include "lcsim/lottery_model.hpp"
#include "lcsim/node_protocol.hpp"
#include "lcsim/parallel_chains.hpp"

namespace lcsim {

class Adversary;

struct RunConfig {
  ProtocolParams params;
  uint32_t probe_interval = 0;   // inject a liveness probe every this many slots (0 = none)
  bool cap_half_budget = false;  // deliveries capped at budget_k/2 (budget_k pre-doubled)
};

struct TraceRow {
  uint32_t slot;
  uint32_t lmin;
  std::vector<uint32_t> len;     // per honest node (ascending id)
  std::vector<uint32_t> used;    // valid contents delivered this slot
  std::vector<uint32_t> wasted;  // invalid contents delivered this slot
  std::vector<uint32_t> idle;    // ticks with no delivery
  bool unique = false;           // uniquely successful slot (single-chain runs)
  bool maxdl = true;             // witness: unique block + prefix at every node by slot end
  std::string events;
};

// The run's world (header sets per instance) outlives the engine so that
// verdict checks can keep walking parent links.
struct World {
  std::vector<GlobalHeaderSet> instances;
  ContentTable contents;
};

struct Trace {
  ProtocolParams params;
  uint32_t probe_interval = 0;
  std::vector<uint32_t> honest_ids;
  Execution exec;  // leader counts realized by the run's lottery
  std::vector<TraceRow> rows;
  // ledger_tips[instance][honest index][slot-1] = LOG tip at end of slot.
  std::vector<std::vector<std::vector<HeaderId>>> ledger_tips;
  // final_dc[instance][honest index] = downloaded-chain tip at the horizon.
  std::vector<std::vector<HeaderId>> final_dc;
  std::shared_ptr<const World> world;
  uint32_t onset = 0;  // first adversarial action slot (0 = never)
  std::vector<uint32_t> probe_slots;
  // probe_included_at[probe][honest index] = first LOG slot, UINT32_MAX if never.
  std::vector<std::vector<uint32_t>> probe_included_at;
  std::vector<MergedEntry> merged;  // final merged ledger (parallel runs, node honest[0])
};

struct SafetyVerdict {
  bool safe = true;
  uint32_t slot = 0;  // first violation locus
  uint32_t node_i = 0, node_j = 0;
  uint32_t instance = 0;
};

enum class LivenessVerdict { Live, NotLive, Inapplicable };

struct LivenessResult {
  LivenessVerdict verdict = LivenessVerdict::Inapplicable;
  bool vacuous = false;       // no probe deadline inside the horizon
  uint32_t probe = 0, node = 0;  // first violation locus
};

struct Metrics {
  double growth = 0.0;             // L_min rate after warmup
  double growth_post_onset = 0.0;  // L_min rate after attack onset (= growth if none)
  double quality = 1.0;            // min over nodes, honest fraction of final dC
  double idle = 0.0;               // idle ticks / total ticks, after warmup
  double wasted = 0.0;             // invalid deliveries / total ticks, after warmup
  double maxdl_ratio = 1.0;        // unique slots with witness / unique slots
  double committed_per_slot = 0.0; // merged-ledger honest blocks per slot (parallel)
};

Trace run(const RunConfig& cfg);

SafetyVerdict check_safety(const Trace& trace);
LivenessResult check_liveness(const Trace& trace, uint64_t t_live);
Metrics metrics(const Trace& trace);

// ---------------------------------------------------------------------------
// Engine internals exposed to adversary strategies.

class Engine {
 public:
  explicit Engine(const RunConfig& cfg);
  ~Engine();
  Trace run();

  // Adversary surface -------------------------------------------------------
  uint32_t now() const { return now_; }
  RuleId rule() const { return rule_; }
  const ProtocolParams& params() const { return cfg_.params; }
  GlobalHeaderSet& instance(uint32_t idx) { return world_->instances[idx]; }
  ContentTable& contents() { return world_->contents; }
  const std::vector<uint32_t>& corrupted_ids() const { return corrupted_; }
  const std::vector<uint32_t>& honest_ids() const { return honest_; }
  NodeView& view(uint32_t honest_index, uint32_t inst = 0) { return views_[inst][honest_index]; }
  uint32_t honest_index(uint32_t node) const { return honest_index_[node]; }
  HeaderId dc_of(uint32_t honest_index) const;
  HeaderId log_tip_of(uint32_t honest_index) const;  // last recorded LOG tip
  HeaderId common_downloaded_prefix();
  std::optional<Selection> preview_selection(uint32_t honest_index);
  std::optional<uint32_t> current_top_key(uint32_t honest_index);
  bool adversary_upload(HeaderId chain, uint32_t inst = 0);
  // Selective delivery; newly learned chains are rebroadcast by the honest
  // recipient and reach everyone at the next slot's phase 1.
  void adversary_push_header(uint32_t honest_index, HeaderId tip, uint32_t inst = 0);
  void adversary_push_content(uint32_t honest_index, HeaderId tip, uint32_t inst = 0);
  void push_header_to_all(HeaderId tip, uint32_t inst = 0);
  void note_adversary_action();

 private:
  void phase1(uint32_t t);
  void phase2(uint32_t t);
  void finish_slot(uint32_t t);
  void deliver_content(uint32_t hi, uint32_t inst, HeaderId block);
  void deliver_content_free(uint32_t hi, uint32_t inst, HeaderId block);
  void record_probe_inclusions(uint32_t hi, HeaderId log_tip, uint32_t t);
  void deliver_header(uint32_t hi, uint32_t inst, HeaderId tip);

  RunConfig cfg_;
  RuleId rule_;
  std::shared_ptr<World> world_;
  std::vector<Repository> repos_;
  std::vector<uint32_t> corrupted_, honest_, primary_of_;
  std::vector<uint32_t> honest_index_;
  std::vector<std::vector<NodeView>> views_;  // [instance][honest index]
  std::unique_ptr<Adversary> adversary_;
  BudgetLedger budgets_;
  uint32_t now_ = 0;
  uint32_t delivery_cap_;
  Trace trace_;
  std::vector<HeaderId> prev_log_tip_;
  std::vector<uint32_t> used_, wasted_, idle_;  // per honest node, this slot
  HeaderId unique_block_ = GlobalHeaderSet::kNone;
  std::string events_;
  std::vector<uint32_t> probe_instance_;  // probe index -> carrying instance
  // common-prefix cache
  uint64_t cp_fingerprint_ = 0;
  HeaderId cp_cache_ = kGenesis;
};

}  // namespace lcsim
