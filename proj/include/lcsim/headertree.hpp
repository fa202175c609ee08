#pragma once
// Global header-tree functionality: leadership checks, header-chain creation
// (with equivocation), membership-based validity, and the prefix relation.
// A chain is identified by its tip header id; the arena is prefix-closed.

#include <cstdint>
#include <optional>
#include <vector>

#include "lcsim/lottery_model.hpp"

namespace lcsim {

using HeaderId = uint32_t;
constexpr HeaderId kGenesis = 0;
constexpr uint32_t kGenesisProducer = 0xffffffffu;
constexpr uint64_t kGenesisContent = 0;

struct Header {
  uint32_t slot;
  uint32_t producer;
  HeaderId parent;
  uint32_t height;
  uint64_t content;  // opaque content id (stands in for Hash(txs))
};

enum class PrefixOrder { APrefixOfB, BPrefixOfA, Equal, Incomparable };

class GlobalHeaderSet {
 public:
  // members: node ids participating in this instance's lottery.
  GlobalHeaderSet(uint64_t lottery_stream, std::vector<uint32_t> members,
                  uint32_t all_nodes, double prob_per_node);

  bool is_leader(uint32_t node, uint32_t slot) const;

  // Alg.-3 extend guard: valid parent, leadership at slot_claimed, and
  // parent.slot < slot_claimed <= now. Every success registers a new chain;
  // repeated calls with the same opportunity are equivocations and succeed.
  std::optional<HeaderId> extend(uint32_t producer, uint32_t slot_claimed,
                                 HeaderId parent, uint64_t content, uint32_t now);

  bool verify(HeaderId chain) const { return chain < arena_.size(); }
  const Header& hdr(HeaderId id) const { return arena_[id]; }
  size_t size() const { return arena_.size(); }

  PrefixOrder prefix_relation(HeaderId a, HeaderId b) const;
  bool is_prefix(HeaderId a, HeaderId b) const;  // a on the path genesis..b
  HeaderId ancestor_at_height(HeaderId id, uint32_t height) const;
  HeaderId common_ancestor(HeaderId a, HeaderId b) const;

  // Child links (global adjacency, shared across node views).
  HeaderId first_child(HeaderId id) const { return first_child_[id]; }
  HeaderId next_sibling(HeaderId id) const { return next_sibling_[id]; }

  static constexpr HeaderId kNone = 0xffffffffu;

 private:
  std::vector<Header> arena_;
  std::vector<HeaderId> first_child_;
  std::vector<HeaderId> next_sibling_;
  std::vector<uint8_t> is_member_;
  uint64_t lottery_stream_;
  uint64_t threshold_;
};

}  // namespace lcsim
