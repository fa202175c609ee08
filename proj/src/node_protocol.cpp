#include "lcsim/node_protocol.hpp"

#include <algorithm>
#include <cassert>

namespace lcsim {

NodeView::NodeView(const GlobalHeaderSet* gs, uint32_t node, uint32_t num_nodes,
                   bool track_opportunities)
    : gs_(gs), node_(node), track_opportunities_(track_opportunities) {
  blocklist_.assign(num_nodes, 0);
  st_.resize(gs_->size(), 0);
  st_[kGenesis] = kKnown | kClean | kPrefixDl | (uint8_t(ContentStatus::Downloaded) << kStatusShift);
  dl_heap_.push_back(pack(0, kGenesis));
}

bool NodeView::insert_chain(HeaderId tip, TieBreaker& ties,
                            std::vector<HeaderId>* downloaded) {
  assert(gs_->verify(tip));
  ensure(tip);
  if (knows(tip)) return false;
  bool drained = false;
  // Collect unknown suffix (tip down to first known ancestor), insert upward.
  static thread_local std::vector<HeaderId> path;
  path.clear();
  for (HeaderId h = tip; !knows(h); h = gs_->hdr(h).parent) path.push_back(h);
  for (auto it = path.rbegin(); it != path.rend(); ++it) {
    HeaderId h = *it;
    const Header& hd = gs_->hdr(h);
    HeaderId par = hd.parent;
    uint8_t bits = kKnown;
    if (st_[par] & kClean) bits |= kClean;
    st_[h] = bits;
    st_[par] |= kHasChild;

    // Equivocation detection feeds the blocklist (used by blocklisting rule).
    uint64_t opp = opp_key(hd.producer, hd.slot);
    auto [fit, inserted] = first_seen_.try_emplace(opp, h);
    if (!inserted && fit->second != h && hd.producer < blocklist_.size())
      blocklist_[hd.producer] = 1;

    if (track_opportunities_) {
      auto [bit, fresh] = bucket_index_.try_emplace(opp, uint32_t(buckets_.size()));
      if (fresh) buckets_.emplace_back(opp, std::vector<HeaderId>{});
      buckets_[bit->second].second.push_back(h);
      // Mid-slot admission only for opportunities with no retained leaf yet.
      if (in_download_phase_ && !retained_.count(opp)) {
        retained_[opp] = h;
        slot_heap_.push_back(pack(hd.height, h));
        std::push_heap(slot_heap_.begin(), slot_heap_.end());
      }
    }
    // Pending content that raced ahead of its header.
    auto pit = pending_.find(h);
    if (pit != pending_.end() && prefix_downloaded(par)) {
      bool valid = pit->second;
      pending_.erase(pit);
      apply_content(h, valid, downloaded);
      drained = true;
    }
  }
  // Only the suffix tip enters the priority heaps: every intermediate header
  // is a prefix of it, so it can never beat the tip under either key; the
  // clean frontier of a later-invalidated block is pushed on invalidation.
  const Header& td = gs_->hdr(tip);
  fresh_heap_.push_back(pack(td.slot, tip));
  std::push_heap(fresh_heap_.begin(), fresh_heap_.end());
  len_heap_.push_back(pack(td.height, tip));
  std::push_heap(len_heap_.begin(), len_heap_.end());
  if (drained) update_dc(node_, ties);
  return true;
}

void NodeView::received_content(HeaderId h, bool valid, uint32_t node_for_ties,
                                TieBreaker& ties, std::vector<HeaderId>* downloaded) {
  ensure(h);
  if (!knows(h)) {  // header not yet delivered: park
    pending_.emplace(h, valid);
    return;
  }
  if (status(h) != ContentStatus::Unknown) return;  // idempotent
  if (!prefix_downloaded(gs_->hdr(h).parent)) {
    pending_.emplace(h, valid);
    return;
  }
  apply_content(h, valid, downloaded);
  update_dc(node_for_ties, ties);
}

void NodeView::apply_content(HeaderId h, bool valid, std::vector<HeaderId>* downloaded) {
  if (!valid) {
    set_status(h, ContentStatus::Invalid);
    st_[h] &= ~kClean;
    invalidate_descendants(h);
    // The deepest clean chain through this branch is now the parent: expose
    // it as a selection candidate.
    HeaderId par = gs_->hdr(h).parent;
    const Header& pd = gs_->hdr(par);
    fresh_heap_.push_back(pack(pd.slot, par));
    std::push_heap(fresh_heap_.begin(), fresh_heap_.end());
    len_heap_.push_back(pack(pd.height, par));
    std::push_heap(len_heap_.begin(), len_heap_.end());
    return;
  }
  set_status(h, ContentStatus::Downloaded);
  cascade_prefix_downloaded(h, downloaded);
}

void NodeView::cascade_prefix_downloaded(HeaderId h, std::vector<HeaderId>* downloaded) {
  st_[h] |= kPrefixDl;
  dl_heap_.push_back(pack(gs_->hdr(h).height, h));
  std::push_heap(dl_heap_.begin(), dl_heap_.end());
  if (downloaded) downloaded->push_back(h);
  // Drain deferred children whose prefix just completed.
  for (HeaderId c = gs_->first_child(h); c != GlobalHeaderSet::kNone;
       c = gs_->next_sibling(c)) {
    if (!knows(c) || status(c) != ContentStatus::Unknown) continue;
    auto pit = pending_.find(c);
    if (pit != pending_.end()) {
      bool v = pit->second;
      pending_.erase(pit);
      apply_content(c, v, downloaded);
    }
  }
}

void NodeView::invalidate_descendants(HeaderId h) {
  static thread_local std::vector<HeaderId> stack;
  stack.clear();
  stack.push_back(h);
  while (!stack.empty()) {
    HeaderId cur = stack.back();
    stack.pop_back();
    for (HeaderId c = gs_->first_child(cur); c != GlobalHeaderSet::kNone;
         c = gs_->next_sibling(c)) {
      if (knows(c) && (st_[c] & kClean)) {
        st_[c] &= ~kClean;
        stack.push_back(c);
      }
    }
  }
}

void NodeView::update_dc(uint32_t node_for_ties, TieBreaker& ties) {
  if (dl_heap_.empty()) return;
  uint32_t cur = gs_->hdr(dc_).height;
  uint32_t top_key = key_of(dl_heap_.front());
  if (top_key <= cur) return;  // incumbent keeps ties
  // Gather all entries tied at the maximal height (ascending id order).
  static thread_local std::vector<HeaderId> tied;
  tied.clear();
  static thread_local std::vector<uint64_t> popped;
  popped.clear();
  while (!dl_heap_.empty() && key_of(dl_heap_.front()) == top_key) {
    popped.push_back(dl_heap_.front());
    tied.push_back(id_of(dl_heap_.front()));
    std::pop_heap(dl_heap_.begin(), dl_heap_.end());
    dl_heap_.pop_back();
  }
  dc_ = tied.size() > 1 ? ties.pick(node_for_ties, tied) : tied.front();
  for (uint64_t e : popped) {
    dl_heap_.push_back(e);
    std::push_heap(dl_heap_.begin(), dl_heap_.end());
  }
}

void NodeView::refresh_slot_filter(TieBreaker& ties) {
  if (!track_opportunities_) return;
  retained_.clear();
  slot_heap_.clear();
  static thread_local std::vector<HeaderId> leaves;
  for (auto& [opp, bucket] : buckets_) {
    // Compact away entries that stopped being leaves.
    leaves.clear();
    size_t w = 0;
    for (HeaderId h : bucket) {
      if (!(st_[h] & kHasChild)) bucket[w++] = h;
    }
    bucket.resize(w);
    if (bucket.empty()) continue;
    leaves.assign(bucket.begin(), bucket.end());
    HeaderId keep = leaves.size() > 1 ? ties.pick_retained(node_, leaves) : leaves.front();
    retained_[opp] = keep;
    slot_heap_.push_back(pack(gs_->hdr(keep).height, keep));
  }
  std::make_heap(slot_heap_.begin(), slot_heap_.end());
}

bool NodeView::retained(HeaderId h) const {
  const Header& hd = gs_->hdr(h);
  auto it = retained_.find(opp_key(hd.producer, hd.slot));
  return it != retained_.end() && it->second == h;
}

std::optional<HeaderId> NodeView::earliest_unknown(HeaderId tip) const {
  if (prefix_downloaded(tip)) return std::nullopt;
  HeaderId child = tip;
  HeaderId cur = gs_->hdr(tip).parent;
  while (!prefix_downloaded(cur)) {
    child = cur;
    cur = gs_->hdr(cur).parent;
  }
  return child;
}

}  // namespace lcsim
