#pragma once
// An honest node's local view of one instance: known headers, content
// statuses with deferred validation, longest downloaded chain, and the
// priority structures the download rules select from.
//
// Per-header state is a dense byte array indexed by global header id; rule
// selection uses lazy max-heaps (invalid entries are popped permanently,
// which is sound because un-cleanliness and downloaded-ness never revert).

#include <cstdint>
#include <optional>
#include <unordered_map>
#include <vector>

#include "lcsim/headertree.hpp"

namespace lcsim {

enum class ContentStatus : uint8_t { Unknown = 0, Downloaded = 1, Invalid = 2 };

// Tie decisions belong to the adversary; the default is the deterministic
// lowest-structural-id fallback (tied lists are passed in ascending id order).
struct TieBreaker {
  virtual ~TieBreaker() = default;
  virtual HeaderId pick(uint32_t node, const std::vector<HeaderId>& tied) {
    return tied.front();
  }
  virtual HeaderId pick_retained(uint32_t node, const std::vector<HeaderId>& leaves) {
    return leaves.front();
  }
};

class NodeView {
 public:
  // track_opportunities enables the leaf-per-opportunity bookkeeping needed
  // by the equivocation-avoidance and blocklisting rules.
  NodeView(const GlobalHeaderSet* gs, uint32_t node, uint32_t num_nodes,
           bool track_opportunities);

  bool knows(HeaderId h) const { return h < st_.size() && (st_[h] & kKnown); }
  ContentStatus status(HeaderId h) const {
    return h < st_.size() ? static_cast<ContentStatus>(st_[h] >> kStatusShift)
                          : ContentStatus::Unknown;
  }
  bool clean(HeaderId h) const { return h < st_.size() && (st_[h] & kClean); }
  bool prefix_downloaded(HeaderId h) const { return h < st_.size() && (st_[h] & kPrefixDl); }
  bool blocklisted(uint32_t producer) const {
    return producer < blocklist_.size() && blocklist_[producer];
  }
  HeaderId dc() const { return dc_; }
  uint32_t dc_height() const { return gs_->hdr(dc_).height; }

  // Header receipt (Alg. 1): inserts the chain and all missing prefixes.
  // Returns true if anything new was added (rebroadcast signal). Deferred
  // contents unblocked by the insertion are drained as in received_content.
  bool insert_chain(HeaderId tip, TieBreaker& ties, std::vector<HeaderId>* downloaded);

  // Content receipt with deferred validation (Alg. 1). Contents whose header
  // is unknown or whose strict prefix is not fully downloaded are parked and
  // drained automatically. Newly Downloaded headers are appended to
  // *downloaded (the engine re-uploads them to the repository).
  void received_content(HeaderId h, bool valid, uint32_t node_for_ties, TieBreaker& ties,
                        std::vector<HeaderId>* downloaded);

  // Slot-start refresh of the one-leaf-per-opportunity filter (Alg.-5 rules).
  void refresh_slot_filter(TieBreaker& ties);
  void set_download_phase(bool on) { in_download_phase_ = on; }

  // Earliest Unknown block on the chain ending at tip; nullopt when the
  // chain is fully downloaded.
  std::optional<HeaderId> earliest_unknown(HeaderId tip) const;

  // Heap access for the download rules (see download_rules.cpp).
  std::vector<uint64_t>& fresh_heap() { return fresh_heap_; }
  std::vector<uint64_t>& len_heap() { return len_heap_; }
  std::vector<uint64_t>& slot_heap() { return slot_heap_; }
  bool retained(HeaderId h) const;

  // Max-height known header (the longest header chain's tip, lowest id on
  // ties); used by the parallel-chains secondary schedule.
  HeaderId longest_known_tip() const {
    return len_heap_.empty() ? kGenesis : id_of(len_heap_.front());
  }

  const GlobalHeaderSet& gs() const { return *gs_; }
  uint32_t node() const { return node_; }

  static uint64_t pack(uint32_t key, HeaderId id) {
    return (uint64_t(key) << 32) | (0xffffffffu - id);
  }
  static uint32_t key_of(uint64_t e) { return uint32_t(e >> 32); }
  static HeaderId id_of(uint64_t e) { return 0xffffffffu - uint32_t(e & 0xffffffffu); }

 private:
  static constexpr uint8_t kKnown = 1, kClean = 2, kPrefixDl = 4, kHasChild = 8;
  static constexpr uint8_t kStatusShift = 4;

  void ensure(HeaderId h) {
    if (h >= st_.size()) st_.resize(gs_->size(), 0);
  }
  void set_status(HeaderId h, ContentStatus s) {
    st_[h] = uint8_t((st_[h] & ~(3u << kStatusShift)) | (uint8_t(s) << kStatusShift));
  }
  void apply_content(HeaderId h, bool valid, std::vector<HeaderId>* downloaded);
  void cascade_prefix_downloaded(HeaderId h, std::vector<HeaderId>* downloaded);
  void invalidate_descendants(HeaderId h);
  void update_dc(uint32_t node_for_ties, TieBreaker& ties);
  static uint64_t opp_key(uint32_t producer, uint32_t slot) {
    return (uint64_t(slot) << 32) | producer;
  }

  const GlobalHeaderSet* gs_;
  uint32_t node_;
  std::vector<uint8_t> st_;
  HeaderId dc_ = kGenesis;

  // Rule heaps: fresh (tip-slot key), len (height key), dl (height key over
  // prefix-downloaded chains, feeds dC), slot (per-slot filtered candidates).
  std::vector<uint64_t> fresh_heap_, len_heap_, dl_heap_, slot_heap_;

  // Deferred contents keyed by header id.
  std::unordered_map<HeaderId, bool> pending_;

  // Equivocation detection (first header seen per opportunity) + blocklist.
  std::unordered_map<uint64_t, HeaderId> first_seen_;
  std::vector<uint8_t> blocklist_;

  // Leaf buckets per production opportunity (equivocation-avoidance rules).
  bool track_opportunities_;
  bool in_download_phase_ = false;
  std::unordered_map<uint64_t, uint32_t> bucket_index_;
  std::vector<std::pair<uint64_t, std::vector<HeaderId>>> buckets_;  // insertion order
  std::unordered_map<uint64_t, HeaderId> retained_;
};

}  // namespace lcsim
