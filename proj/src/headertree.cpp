#include "lcsim/headertree.hpp"

namespace lcsim {

GlobalHeaderSet::GlobalHeaderSet(uint64_t lottery_stream, std::vector<uint32_t> members,
                                 uint32_t all_nodes, double prob_per_node)
    : lottery_stream_(lottery_stream), threshold_(leader_threshold(prob_per_node)) {
  is_member_.assign(all_nodes, 0);
  for (uint32_t id : members) is_member_[id] = 1;
  arena_.push_back(Header{0, kGenesisProducer, kGenesis, 0, kGenesisContent});
  first_child_.push_back(kNone);
  next_sibling_.push_back(kNone);
}

bool GlobalHeaderSet::is_leader(uint32_t node, uint32_t slot) const {
  if (node >= is_member_.size() || !is_member_[node] || slot < 1) return false;
  return lottery_coin(lottery_stream_, node, slot, threshold_);
}

std::optional<HeaderId> GlobalHeaderSet::extend(uint32_t producer, uint32_t slot_claimed,
                                                HeaderId parent, uint64_t content,
                                                uint32_t now) {
  if (!verify(parent)) return std::nullopt;
  if (!is_leader(producer, slot_claimed)) return std::nullopt;
  if (!(arena_[parent].slot < slot_claimed && slot_claimed <= now)) return std::nullopt;
  HeaderId id = static_cast<HeaderId>(arena_.size());
  arena_.push_back(Header{slot_claimed, producer, parent, arena_[parent].height + 1, content});
  first_child_.push_back(kNone);
  next_sibling_.push_back(first_child_[parent]);
  first_child_[parent] = id;
  return id;
}

HeaderId GlobalHeaderSet::ancestor_at_height(HeaderId id, uint32_t height) const {
  while (arena_[id].height > height) id = arena_[id].parent;
  return id;
}

bool GlobalHeaderSet::is_prefix(HeaderId a, HeaderId b) const {
  if (arena_[a].height > arena_[b].height) return false;
  return ancestor_at_height(b, arena_[a].height) == a;
}

PrefixOrder GlobalHeaderSet::prefix_relation(HeaderId a, HeaderId b) const {
  if (a == b) return PrefixOrder::Equal;
  if (arena_[a].height <= arena_[b].height)
    return is_prefix(a, b) ? PrefixOrder::APrefixOfB : PrefixOrder::Incomparable;
  return is_prefix(b, a) ? PrefixOrder::BPrefixOfA : PrefixOrder::Incomparable;
}

HeaderId GlobalHeaderSet::common_ancestor(HeaderId a, HeaderId b) const {
  if (arena_[a].height > arena_[b].height) a = ancestor_at_height(a, arena_[b].height);
  if (arena_[b].height > arena_[a].height) b = ancestor_at_height(b, arena_[a].height);
  while (a != b) {
    a = arena_[a].parent;
    b = arena_[b].parent;
  }
  return a;
}

}  // namespace lcsim
