#include "lcsim/adversary.hpp"

#include <algorithm>
#include <utility>

#include "lcsim/download_rules.hpp"
#include "lcsim/engine.hpp"

namespace lcsim {
namespace {

constexpr uint32_t kNoNode = 0xffffffffu;

class NullAdversary : public Adversary {};

// Spam-equivocation (optionally followed by a private fork release).
//
// The spammer banks the corrupted nodes' lottery wins. Whenever an honest
// node's next download would make progress, it equivocates a fresh chain on
// top of b0, the honest nodes' common downloaded prefix: the first block
// above b0 carries invalid content and is uploaded, deeper blocks (needed
// only to reach a target height under the longest-header rule) are withheld.
// A node that falls for the chain burns exactly one delivery discovering the
// invalid content; re-minting the same opportunities keeps the bait fresh,
// since content statuses are per node and per header.
//
// In fork mode a valid private chain grows on every corrupted win from the
// common prefix at the first win; it is released (contents uploaded, headers
// pushed) once it out-heights every honest downloaded chain while some
// honest ledger already conflicts with it.
class SpamAdversary : public Adversary {
 public:
  SpamAdversary(bool spam, bool fork, const char* id)
      : spam_(spam), fork_(fork), id_(id) {}

  const char* id() const override { return id_; }

  void begin(Engine& e) override {
    e_ = &e;
    corrupted_.assign(e.params().num_nodes, 0);
    for (uint32_t c : e.corrupted_ids()) corrupted_[c] = 1;
  }

  void on_phase1(Engine& e, uint32_t t) override {
    uint32_t winner = kNoNode;
    for (uint32_t c : e.corrupted_ids()) {
      if (e.instance(0).is_leader(c, t)) {
        winner = c;
        break;
      }
    }
    if (winner != kNoNode) {
      wins_.emplace_back(t, winner);
      if (fork_) grow_private(e, t, winner);
    }
    if (fork_) maybe_release(e, t);
    if (spam_ && !released_ && rule_uses_slot_filter(e.rule())) mint_slot_batch(e);
  }

  void on_tick(Engine& e, uint32_t hi) override {
    if (!spam_ || released_) return;
    RuleId r = e.rule();
    if (rule_uses_slot_filter(r)) return;  // slot-scoped rules: phase-1 batch
    auto sel = e.preview_selection(hi);
    const GlobalHeaderSet& gs = e.instance(0);
    if (sel && corrupted_[gs.hdr(sel->block).producer]) return;  // already diverted
    HeaderId b0 = e.common_downloaded_prefix();
    const Header& hb0 = gs.hdr(b0);
    size_t lo = first_win_after(hb0.slot);
    if (lo == wins_.size()) return;  // no usable win banked
    if (r == RuleId::Freshest) {
      // One block at the latest banked win: ties at equal tip slot go to us.
      uint32_t needed = sel ? gs.hdr(sel->chain).slot : 0;
      if (wins_.back().first < needed) return;
      mint_chain(e, b0, wins_.size() - 1, wins_.size());
    } else {
      uint32_t needed_h = 0;
      if (sel) {
        needed_h = gs.hdr(sel->chain).height;
      } else if (auto k = e.current_top_key(hi)) {
        needed_h = *k;
      }
      size_t j = needed_h > hb0.height ? needed_h - hb0.height : 1;
      if (wins_.size() - lo < j) return;  // cannot reach the height
      mint_chain(e, b0, wins_.size() - j, wins_.size());
    }
  }

  // Rule ties and retained-leaf choices both prefer the newest own header:
  // the freshest mint is the one no honest node has probed yet.
  HeaderId pick(uint32_t, const std::vector<HeaderId>& tied) override {
    return prefer_mine(tied);
  }
  HeaderId pick_retained(uint32_t, const std::vector<HeaderId>& leaves) override {
    return prefer_mine(leaves);
  }

 private:
  bool mine(HeaderId h) const { return h < mine_.size() && mine_[h]; }

  HeaderId prefer_mine(const std::vector<HeaderId>& cands) const {
    HeaderId best = GlobalHeaderSet::kNone;
    for (HeaderId h : cands)
      if (mine(h) && (best == GlobalHeaderSet::kNone || h > best)) best = h;
    return best == GlobalHeaderSet::kNone ? cands.front() : best;
  }

  size_t first_win_after(uint32_t slot) const {
    return std::upper_bound(wins_.begin(), wins_.end(),
                            std::make_pair(slot, kNoNode)) -
           wins_.begin();
  }

  void mark_mine(HeaderId h) {
    if (h >= mine_.size()) mine_.resize(h + 1, 0);
    mine_[h] = 1;
  }

  // Mint a chain on parent from wins_[from..to); upload only the first
  // content (invalid), withhold the rest, push the tip to everyone.
  void mint_chain(Engine& e, HeaderId parent, size_t from, size_t to) {
    GlobalHeaderSet& gs = e.instance(0);
    HeaderId cur = parent;
    for (size_t i = from; i < to; ++i) {
      auto [s, n] = wins_[i];
      uint64_t c = e.contents().create(false, n);
      auto h = gs.extend(n, s, cur, c, e.now());
      if (!h) return;
      mark_mine(*h);
      if (i == from) e.adversary_upload(*h);
      cur = *h;
    }
    e.push_header_to_all(cur);
    e.note_adversary_action();
  }

  // Slot-scoped rules admit one retained leaf per production opportunity, so
  // a per-slot batch of single-block chains (freshest banked wins first) is
  // the most a spammer can land.
  void mint_slot_batch(Engine& e) {
    HeaderId b0 = e.common_downloaded_prefix();
    size_t lo = first_win_after(e.instance(0).hdr(b0).slot);
    size_t count = std::min(wins_.size() - lo, size_t(e.params().budget_k));
    for (size_t i = wins_.size() - count; i < wins_.size(); ++i)
      mint_chain(e, b0, i, i + 1);
  }

  void grow_private(Engine& e, uint32_t t, uint32_t winner) {
    if (!armed_) {
      armed_ = true;
      fork_base_ = e.common_downloaded_prefix();
      priv_ = fork_base_;
    }
    uint64_t c = e.contents().create(true, winner);
    auto h = e.instance(0).extend(winner, t, priv_, c, t);
    if (!h) return;
    priv_ = *h;
    mark_mine(priv_);
    if (released_) {
      e.adversary_upload(priv_);
      e.push_header_to_all(priv_);
    }
  }

  void maybe_release(Engine& e, uint32_t) {
    if (!armed_ || released_) return;
    const GlobalHeaderSet& gs = e.instance(0);
    uint32_t ph = gs.hdr(priv_).height;
    uint32_t max_dc = 0;
    bool log_conflict = false;
    for (uint32_t i = 0; i < uint32_t(e.honest_ids().size()); ++i) {
      max_dc = std::max(max_dc, gs.hdr(e.dc_of(i)).height);
      if (!gs.is_prefix(e.log_tip_of(i), priv_)) log_conflict = true;
    }
    if (ph <= max_dc + 1 || !log_conflict) return;
    released_ = true;
    for (HeaderId h = priv_; h != fork_base_; h = gs.hdr(h).parent)
      e.adversary_upload(h);
    e.push_header_to_all(priv_);
    e.note_adversary_action();
  }

  bool spam_, fork_;
  const char* id_;
  Engine* e_ = nullptr;
  std::vector<uint8_t> corrupted_;
  std::vector<std::pair<uint32_t, uint32_t>> wins_;  // (slot, winner), ascending
  std::vector<uint8_t> mine_;
  bool armed_ = false, released_ = false;
  HeaderId fork_base_ = kGenesis, priv_ = kGenesis;
};

}  // namespace

std::unique_ptr<Adversary> make_adversary(const std::string& id) {
  if (id == "null") return std::make_unique<NullAdversary>();
  if (id == "spam-equivocation")
    return std::make_unique<SpamAdversary>(true, false, "spam-equivocation");
  if (id == "private-withhold")
    return std::make_unique<SpamAdversary>(false, true, "private-withhold");
  if (id == "spam-then-fork")
    return std::make_unique<SpamAdversary>(true, true, "spam-then-fork");
  throw std::invalid_argument("unknown adversary id: " + id);
}

}  // namespace lcsim
