#include "lcsim/engine.hpp"

#include <algorithm>
#include <stdexcept>

#include "lcsim/adversary.hpp"

namespace lcsim {

Engine::Engine(const RunConfig& cfg) : cfg_(cfg) {
  const ProtocolParams& p = cfg_.params;
  p.validate();
  if (p.lottery_mode != LotteryMode::Binomial)
    throw std::invalid_argument("the engine runs the per-node (binomial) lottery only");
  rule_ = rule_from_string(p.rule_id);
  adversary_ = make_adversary(p.adversary_id);
  if (p.parallel_m > 1 && p.adversary_id != "null")
    throw std::invalid_argument("parallel runs support the null adversary only");

  ParallelAssignment asg = assign_primaries(p);
  primary_of_ = asg.primary_of;
  corrupted_ = corrupted_set(p);
  honest_index_.assign(p.num_nodes, 0xffffffffu);
  {
    size_t ci = 0;
    for (uint32_t n = 0; n < p.num_nodes; ++n) {
      if (ci < corrupted_.size() && corrupted_[ci] == n) {
        ++ci;
        continue;
      }
      honest_index_[n] = uint32_t(honest_.size());
      honest_.push_back(n);
    }
  }

  world_ = std::make_shared<World>();
  world_->instances.reserve(p.parallel_m);
  uint64_t lottery = substream(p.seed, StreamPurpose::Lottery);
  double prob = p.rho / (double(p.num_nodes) / p.parallel_m);
  for (uint32_t i = 0; i < p.parallel_m; ++i)
    world_->instances.emplace_back(lottery, asg.partition[i], p.num_nodes, prob);
  repos_.resize(p.parallel_m);

  bool track = rule_uses_slot_filter(rule_);
  views_.resize(p.parallel_m);
  for (uint32_t i = 0; i < p.parallel_m; ++i) {
    views_[i].reserve(honest_.size());
    for (uint32_t n : honest_)
      views_[i].emplace_back(&world_->instances[i], n, p.num_nodes,
                             track && primary_of_[n] == i);
  }

  delivery_cap_ = cfg_.cap_half_budget ? p.budget_k / 2 : p.budget_k;
  trace_.params = p;
  trace_.probe_interval = cfg_.probe_interval;
  trace_.honest_ids = honest_;
  trace_.ledger_tips.assign(
      p.parallel_m, std::vector<std::vector<HeaderId>>(
                        honest_.size(), std::vector<HeaderId>(p.horizon, kGenesis)));
  prev_log_tip_.assign(honest_.size(), kGenesis);
}

Engine::~Engine() = default;

HeaderId Engine::dc_of(uint32_t hi) const {
  return views_[primary_of_[honest_[hi]]][hi].dc();
}

HeaderId Engine::log_tip_of(uint32_t hi) const { return prev_log_tip_[hi]; }

std::optional<Selection> Engine::preview_selection(uint32_t hi) {
  return select_download(views_[primary_of_[honest_[hi]]][hi], rule_, *adversary_);
}

std::optional<uint32_t> Engine::current_top_key(uint32_t hi) {
  return views_[primary_of_[honest_[hi]]][hi].dc_height();
}

bool Engine::adversary_upload(HeaderId chain, uint32_t inst) {
  GlobalHeaderSet& gs = world_->instances[inst];
  return upload_content(gs, repos_[inst], chain, gs.hdr(chain).content, now_);
}

void Engine::deliver_header(uint32_t hi, uint32_t inst, HeaderId tip) {
  std::vector<HeaderId> dl;
  views_[inst][hi].insert_chain(tip, *adversary_, &dl);
  GlobalHeaderSet& gs = world_->instances[inst];
  for (HeaderId h : dl) upload_content(gs, repos_[inst], h, gs.hdr(h).content, now_);
}

void Engine::adversary_push_header(uint32_t hi, HeaderId tip, uint32_t inst) {
  deliver_header(hi, inst, tip);
}

void Engine::adversary_push_content(uint32_t hi, HeaderId tip, uint32_t inst) {
  GlobalHeaderSet& gs = world_->instances[inst];
  bool valid = world_->contents.info(gs.hdr(tip).content).valid;
  std::vector<HeaderId> dl;
  views_[inst][hi].received_content(tip, valid, honest_[hi], *adversary_, &dl);
  for (HeaderId h : dl) upload_content(gs, repos_[inst], h, gs.hdr(h).content, now_);
}

void Engine::push_header_to_all(HeaderId tip, uint32_t inst) {
  for (uint32_t hi = 0; hi < honest_.size(); ++hi) deliver_header(hi, inst, tip);
}

void Engine::note_adversary_action() {
  if (trace_.onset == 0) {
    trace_.onset = now_;
    if (!events_.empty()) events_ += ';';
    events_ += "adv";
  }
}

HeaderId Engine::common_downloaded_prefix() {
  uint64_t fp = 0x51ed27f4a7c15ull;
  for (uint32_t hi = 0; hi < honest_.size(); ++hi)
    fp = mix64(fp ^ views_[0][hi].dc());
  if (fp == cp_fingerprint_) return cp_cache_;
  cp_fingerprint_ = fp;
  const GlobalHeaderSet& gs = world_->instances[0];
  HeaderId c = views_[0][0].dc();
  for (uint32_t hi = 1; hi < honest_.size(); ++hi)
    c = gs.common_ancestor(c, views_[0][hi].dc());
  return cp_cache_ = c;
}

void Engine::phase1(uint32_t t) {
  const ProtocolParams& p = cfg_.params;
  events_.clear();
  unique_block_ = GlobalHeaderSet::kNone;
  bool filter = rule_uses_slot_filter(rule_);

  // Probe injection (single-chain runs carry liveness probes).
  if (cfg_.probe_interval > 0 && t % cfg_.probe_interval == 0) {
    trace_.probe_slots.push_back(t);
    trace_.probe_included_at.emplace_back(honest_.size(), 0xffffffffu);
    probe_instance_.push_back(trace_.probe_slots.size() % p.parallel_m);
  }

  // Lottery outcome of this slot (the run's execution).
  for (uint32_t n = 0; n < p.num_nodes; ++n) {
    if (!world_->instances[primary_of_[n]].is_leader(n, t)) continue;
    if (honest_index_[n] == 0xffffffffu)
      trace_.exec.adversarial_counts[t - 1]++;
    else
      trace_.exec.honest_counts[t - 1]++;
  }

  if (filter)
    for (uint32_t hi = 0; hi < honest_.size(); ++hi)
      views_[primary_of_[honest_[hi]]][hi].set_download_phase(false);

  // Honest proposals on top of each leader's downloaded chain.
  std::vector<std::pair<uint32_t, HeaderId>> proposals;  // (instance, chain)
  std::vector<uint32_t> proposers;
  for (uint32_t hi = 0; hi < honest_.size(); ++hi) {
    uint32_t n = honest_[hi];
    uint32_t inst = primary_of_[n];
    GlobalHeaderSet& gs = world_->instances[inst];
    if (!gs.is_leader(n, t)) continue;
    HeaderId parent = views_[inst][hi].dc();
    uint64_t c = world_->contents.create(true, n);
    if (cfg_.probe_interval > 0 && !trace_.probe_slots.empty()) {
      std::vector<uint8_t> seen(trace_.probe_slots.size(), 0);
      for (HeaderId h = parent; h != kGenesis; h = gs.hdr(h).parent)
        for (uint32_t pi : world_->contents.info(gs.hdr(h).content).probes) seen[pi] = 1;
      auto& pr = world_->contents.info(c).probes;
      for (uint32_t pi = 0; pi < seen.size(); ++pi)
        if (!seen[pi] && probe_instance_[pi] == inst) pr.push_back(pi);
    }
    auto hid = gs.extend(n, t, parent, c, t);
    if (!hid) throw std::logic_error("honest proposal rejected by extend guard");
    upload_content(gs, repos_[inst], *hid, c, t);
    proposals.emplace_back(inst, *hid);
    proposers.push_back(hi);
    if (!events_.empty()) events_ += ';';
    events_ += "p" + std::to_string(n);
  }
  if (p.parallel_m == 1 && proposals.size() == 1 &&
      trace_.exec.honest_counts[t - 1] == 1 && trace_.exec.adversarial_counts[t - 1] == 0)
    unique_block_ = proposals[0].second;

  // Headers reach every honest node within the slot.
  for (auto [inst, hid] : proposals) push_header_to_all(hid, inst);
  // Producers already hold their own contents.
  for (size_t i = 0; i < proposals.size(); ++i)
    deliver_content_free(proposers[i], proposals[i].first, proposals[i].second);

  adversary_->on_phase1(*this, t);

  if (filter) {
    for (uint32_t hi = 0; hi < honest_.size(); ++hi) {
      NodeView& v = views_[primary_of_[honest_[hi]]][hi];
      v.refresh_slot_filter(*adversary_);
      v.set_download_phase(true);
    }
  }
}

// Content receipt outside the budgeted request path (own proposals).
void Engine::deliver_content_free(uint32_t hi, uint32_t inst, HeaderId block) {
  GlobalHeaderSet& gs = world_->instances[inst];
  bool valid = world_->contents.info(gs.hdr(block).content).valid;
  std::vector<HeaderId> dl;
  views_[inst][hi].received_content(block, valid, honest_[hi], *adversary_, &dl);
  for (HeaderId h : dl) upload_content(gs, repos_[inst], h, gs.hdr(h).content, now_);
}

void Engine::deliver_content(uint32_t hi, uint32_t inst, HeaderId block) {
  bool valid = world_->contents.info(world_->instances[inst].hdr(block).content).valid;
  deliver_content_free(hi, inst, block);
  (valid ? used_ : wasted_)[hi]++;
}

void Engine::phase2(uint32_t t) {
  const ProtocolParams& p = cfg_.params;
  budgets_.reset(honest_.size(), delivery_cap_);
  used_.assign(honest_.size(), 0);
  wasted_.assign(honest_.size(), 0);
  idle_.assign(honest_.size(), 0);
  std::vector<NodeView*> vv(p.parallel_m);
  for (uint32_t k = 0; k < p.budget_k; ++k) {
    for (uint32_t hi = 0; hi < honest_.size(); ++hi) {
      adversary_->on_tick(*this, hi);
      uint32_t primary = primary_of_[honest_[hi]];
      std::optional<PcTarget> tgt;
      if (p.parallel_m == 1) {
        if (auto sel = select_download(views_[0][hi], rule_, *adversary_))
          tgt = PcTarget{0, sel->block};
      } else {
        for (uint32_t i = 0; i < p.parallel_m; ++i) vv[i] = &views_[i][hi];
        tgt = pc_download_tick(vv, primary, rule_, *adversary_, t, p.t_conf);
      }
      bool delivered = false;
      if (tgt && budgets_.remaining[hi] > 0 && repos_[tgt->instance].has(tgt->block)) {
        budgets_.remaining[hi]--;
        deliver_content(hi, tgt->instance, tgt->block);
        delivered = true;
      }
      if (!delivered) idle_[hi]++;
    }
  }
}

void Engine::record_probe_inclusions(uint32_t hi, HeaderId log_tip, uint32_t t) {
  HeaderId prev = prev_log_tip_[hi];
  if (log_tip == prev) return;
  const GlobalHeaderSet& gs = world_->instances[0];
  HeaderId stop = gs.is_prefix(prev, log_tip) ? prev : kGenesis;
  for (HeaderId h = log_tip; h != stop; h = gs.hdr(h).parent)
    for (uint32_t pi : world_->contents.info(gs.hdr(h).content).probes)
      if (trace_.probe_included_at[pi][hi] == 0xffffffffu)
        trace_.probe_included_at[pi][hi] = t;
  prev_log_tip_[hi] = log_tip;
}

void Engine::finish_slot(uint32_t t) {
  const ProtocolParams& p = cfg_.params;
  TraceRow row;
  row.slot = t;
  row.len.resize(honest_.size());
  for (uint32_t hi = 0; hi < honest_.size(); ++hi)
    row.len[hi] = views_[primary_of_[honest_[hi]]][hi].dc_height();
  row.lmin = *std::min_element(row.len.begin(), row.len.end());
  if (!trace_.rows.empty() && row.lmin < trace_.rows.back().lmin)
    throw std::logic_error("minimum downloaded-chain length regressed");
  row.used = used_;
  row.wasted = wasted_;
  row.idle = idle_;
  row.unique = unique_block_ != GlobalHeaderSet::kNone;
  row.maxdl = true;
  if (row.unique)
    for (uint32_t hi = 0; hi < honest_.size(); ++hi)
      if (!views_[0][hi].prefix_downloaded(unique_block_)) row.maxdl = false;
  row.events = events_;
  trace_.rows.push_back(std::move(row));

  for (uint32_t inst = 0; inst < p.parallel_m; ++inst) {
    const GlobalHeaderSet& gs = world_->instances[inst];
    for (uint32_t hi = 0; hi < honest_.size(); ++hi)
      trace_.ledger_tips[inst][hi][t - 1] =
          truncate_chain(gs, views_[inst][hi].dc(), t, p.t_conf);
  }
  if (p.parallel_m == 1)
    for (uint32_t hi = 0; hi < honest_.size(); ++hi)
      record_probe_inclusions(hi, trace_.ledger_tips[0][hi][t - 1], t);
}

Trace Engine::run() {
  const ProtocolParams& p = cfg_.params;
  trace_.exec.honest_counts.assign(p.horizon, 0);
  trace_.exec.adversarial_counts.assign(p.horizon, 0);
  adversary_->begin(*this);
  for (uint32_t t = 1; t <= p.horizon; ++t) {
    now_ = t;
    phase1(t);
    phase2(t);
    finish_slot(t);
  }
  trace_.final_dc.assign(p.parallel_m, std::vector<HeaderId>(honest_.size(), kGenesis));
  for (uint32_t inst = 0; inst < p.parallel_m; ++inst)
    for (uint32_t hi = 0; hi < honest_.size(); ++hi)
      trace_.final_dc[inst][hi] = views_[inst][hi].dc();
  if (p.parallel_m > 1) {
    std::vector<const GlobalHeaderSet*> gss;
    std::vector<HeaderId> tips;
    for (uint32_t inst = 0; inst < p.parallel_m; ++inst) {
      gss.push_back(&world_->instances[inst]);
      tips.push_back(truncate_chain(world_->instances[inst], views_[inst][0].dc(),
                                    p.horizon, p.t_conf));
    }
    trace_.merged = merge_ledgers(gss, tips).entries;
  }
  trace_.world = world_;
  return std::move(trace_);
}

Trace run(const RunConfig& cfg) {
  Engine e(cfg);
  return e.run();
}

// ---------------------------------------------------------------------------

SafetyVerdict check_safety(const Trace& tr) {
  const World& w = *tr.world;
  uint32_t horizon = uint32_t(tr.rows.size());
  for (uint32_t inst = 0; inst < tr.ledger_tips.size(); ++inst) {
    const GlobalHeaderSet& gs = w.instances[inst];
    const auto& tips = tr.ledger_tips[inst];
    // Self-consistency: each node's ledger only ever extends.
    for (uint32_t hi = 0; hi < tips.size(); ++hi) {
      HeaderId prev = kGenesis;
      for (uint32_t t = 1; t <= horizon; ++t) {
        HeaderId cur = tips[hi][t - 1];
        if (!gs.is_prefix(prev, cur))
          return SafetyVerdict{false, t, tr.honest_ids[hi], tr.honest_ids[hi], inst};
        prev = cur;
      }
    }
    // Cross-node consistency per slot: everyone prefix-comparable with the
    // deepest ledger (prefixes of one chain are totally ordered).
    for (uint32_t t = 1; t <= horizon; ++t) {
      uint32_t deepest = 0;
      for (uint32_t hi = 1; hi < tips.size(); ++hi)
        if (gs.hdr(tips[hi][t - 1]).height > gs.hdr(tips[deepest][t - 1]).height)
          deepest = hi;
      HeaderId dt = tips[deepest][t - 1];
      for (uint32_t hi = 0; hi < tips.size(); ++hi)
        if (gs.prefix_relation(tips[hi][t - 1], dt) == PrefixOrder::Incomparable)
          return SafetyVerdict{false, t, tr.honest_ids[hi], tr.honest_ids[deepest], inst};
    }
  }
  return SafetyVerdict{};
}

LivenessResult check_liveness(const Trace& tr, uint64_t t_live) {
  LivenessResult r;
  if (tr.probe_interval == 0 || tr.probe_slots.empty()) return r;
  r.verdict = LivenessVerdict::Live;
  r.vacuous = true;
  for (size_t pi = 0; pi < tr.probe_slots.size(); ++pi) {
    uint64_t deadline = uint64_t(tr.probe_slots[pi]) + t_live;
    if (deadline > tr.rows.size()) continue;
    r.vacuous = false;
    for (uint32_t hi = 0; hi < tr.honest_ids.size(); ++hi) {
      if (tr.probe_included_at[pi][hi] > deadline) {
        r.verdict = LivenessVerdict::NotLive;
        r.probe = tr.probe_slots[pi];
        r.node = tr.honest_ids[hi];
        return r;
      }
    }
  }
  return r;
}

Metrics metrics(const Trace& tr) {
  Metrics m;
  uint32_t horizon = uint32_t(tr.rows.size());
  if (horizon == 0) return m;
  uint32_t warm = horizon / 10;
  auto lmin_after = [&](uint32_t s) { return s == 0 ? 0u : tr.rows[s - 1].lmin; };
  m.growth = double(lmin_after(horizon) - lmin_after(warm)) / double(horizon - warm);
  uint32_t onset = std::max(tr.onset, warm);
  m.growth_post_onset =
      (tr.onset == 0 || onset >= horizon)
          ? m.growth
          : double(lmin_after(horizon) - lmin_after(onset)) / double(horizon - onset);

  std::vector<uint32_t> corrupted = corrupted_set(tr.params);
  auto is_corrupted = [&](uint32_t n) {
    return std::binary_search(corrupted.begin(), corrupted.end(), n);
  };
  ParallelAssignment asg = assign_primaries(tr.params);
  m.quality = 1.0;
  for (uint32_t hi = 0; hi < tr.honest_ids.size(); ++hi) {
    uint32_t inst = asg.primary_of[tr.honest_ids[hi]];
    const GlobalHeaderSet& gs = tr.world->instances[inst];
    uint64_t total = 0, honest = 0;
    for (HeaderId h = tr.final_dc[inst][hi]; h != kGenesis; h = gs.hdr(h).parent) {
      ++total;
      if (!is_corrupted(gs.hdr(h).producer)) ++honest;
    }
    if (total > 0) m.quality = std::min(m.quality, double(honest) / double(total));
  }

  uint64_t idle = 0, wasted = 0;
  for (uint32_t t = warm + 1; t <= horizon; ++t) {
    const TraceRow& row = tr.rows[t - 1];
    for (uint32_t hi = 0; hi < tr.honest_ids.size(); ++hi) {
      idle += row.idle[hi];
      wasted += row.wasted[hi];
    }
  }
  double ticks = double(horizon - warm) * tr.honest_ids.size() * tr.params.budget_k;
  m.idle = idle / ticks;
  m.wasted = wasted / ticks;

  uint64_t uniq = 0, witnessed = 0;
  for (const TraceRow& row : tr.rows)
    if (row.unique) {
      ++uniq;
      if (row.maxdl) ++witnessed;
    }
  m.maxdl_ratio = uniq == 0 ? 1.0 : double(witnessed) / double(uniq);

  if (!tr.merged.empty()) {
    const GlobalHeaderSet* gss = tr.world->instances.data();
    uint64_t honest_blocks = 0;
    for (const MergedEntry& e : tr.merged)
      if (!is_corrupted(gss[e.instance].hdr(e.block).producer)) ++honest_blocks;
    m.committed_per_slot = double(honest_blocks) / double(horizon);
  }
  return m;
}

}  // namespace lcsim
