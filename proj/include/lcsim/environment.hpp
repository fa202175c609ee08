#pragma once
// Environment pieces: the idealized content repository, per-slot download
// budgets, and content identity (an opaque id with a validity bit fixed at
// creation; honest contents are always valid).

#include <cstdint>
#include <vector>

#include "lcsim/headertree.hpp"

namespace lcsim {

struct ContentInfo {
  bool valid;
  uint32_t producer;             // creating node (kGenesisProducer for genesis)
  std::vector<uint32_t> probes;  // liveness probe ids carried by this content
};

class ContentTable {
 public:
  ContentTable() { infos_.push_back(ContentInfo{true, kGenesisProducer, {}}); }
  uint64_t create(bool valid, uint32_t producer) {
    infos_.push_back(ContentInfo{valid, producer, {}});
    return infos_.size() - 1;
  }
  ContentInfo& info(uint64_t id) { return infos_[id]; }
  const ContentInfo& info(uint64_t id) const { return infos_[id]; }

 private:
  std::vector<ContentInfo> infos_;
};

// Append-only store keyed by chain tip: when (and whether) the tip's content
// was uploaded. The hash-binding check lives in upload_content below.
class Repository {
 public:
  Repository() { slots_ = {0}; }  // genesis content available from slot 0

  bool has(HeaderId chain) const {
    return chain < slots_.size() && slots_[chain] >= 0;
  }
  int64_t upload_slot(HeaderId chain) const {
    return chain < slots_.size() ? slots_[chain] : -1;
  }
  void upload(HeaderId chain, uint32_t slot) {
    if (chain >= slots_.size()) slots_.resize(chain + 1, -1);
    if (slots_[chain] < 0) slots_[chain] = slot;  // append-only, idempotent
  }

 private:
  std::vector<int64_t> slots_;  // -1 = absent
};

// Binding check: the uploaded content id must equal the tip's content hash;
// mismatches are rejected silently (models Z's Hash(txs) = C.txsHash check).
inline bool upload_content(const GlobalHeaderSet& gs, Repository& repo, HeaderId chain,
                           uint64_t content_id, uint32_t slot) {
  if (!gs.verify(chain) || gs.hdr(chain).content != content_id) return false;
  repo.upload(chain, slot);
  return true;
}

struct BudgetLedger {
  std::vector<uint32_t> remaining;  // per honest node, downloads left this slot

  void reset(size_t nodes, uint32_t k) { remaining.assign(nodes, k); }
};

}  // namespace lcsim
