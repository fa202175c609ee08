#include "lcsim/download_rules.hpp"

#include <algorithm>
#include <stdexcept>

namespace lcsim {

RuleId rule_from_string(const std::string& s) {
  if (s == "freshest") return RuleId::Freshest;
  if (s == "longest-header") return RuleId::LongestHeader;
  if (s == "equivocation-avoidance") return RuleId::EquivocationAvoidance;
  if (s == "blocklisting") return RuleId::Blocklisting;
  throw std::invalid_argument("unknown rule id: " + s);
}

std::string rule_to_string(RuleId r) {
  switch (r) {
    case RuleId::Freshest: return "freshest";
    case RuleId::LongestHeader: return "longest-header";
    case RuleId::EquivocationAvoidance: return "equivocation-avoidance";
    case RuleId::Blocklisting: return "blocklisting";
  }
  return "?";
}

bool rule_uses_slot_filter(RuleId r) {
  return r == RuleId::EquivocationAvoidance || r == RuleId::Blocklisting;
}

namespace {

void heap_pop(std::vector<uint64_t>& h) {
  std::pop_heap(h.begin(), h.end());
  h.pop_back();
}

void heap_push(std::vector<uint64_t>& h, uint64_t e) {
  h.push_back(e);
  std::push_heap(h.begin(), h.end());
}

// Argmax-by-key over clean chains with ties routed to the adversary hook.
// `dead` decides whether an entry can be discarded permanently.
template <typename Dead>
std::optional<Selection> heap_select(NodeView& view, std::vector<uint64_t>& heap,
                                     TieBreaker& ties, Dead dead, bool skip_downloaded_tip) {
  static thread_local std::vector<uint64_t> kept;
  static thread_local std::vector<HeaderId> tied;
  while (true) {
    while (!heap.empty() && dead(NodeView::id_of(heap.front()))) heap_pop(heap);
    if (heap.empty()) return std::nullopt;
    uint32_t key = NodeView::key_of(heap.front());
    kept.clear();
    tied.clear();
    while (!heap.empty() && NodeView::key_of(heap.front()) == key) {
      uint64_t e = heap.front();
      heap_pop(heap);
      HeaderId id = NodeView::id_of(e);
      if (dead(id)) continue;
      kept.push_back(e);
      tied.push_back(id);
    }
    for (uint64_t e : kept) heap_push(heap, e);
    if (tied.empty()) continue;
    HeaderId chosen = tied.size() > 1 ? ties.pick(view.node(), tied) : tied.front();
    if (skip_downloaded_tip && view.status(chosen) == ContentStatus::Downloaded) {
      // Only reachable for the slot-filtered rules, where such entries were
      // already filtered by `dead`; kept for clarity.
      return std::nullopt;
    }
    auto block = view.earliest_unknown(chosen);
    if (!block) return std::nullopt;  // argmax chain fully downloaded -> idle
    return Selection{chosen, *block};
  }
}

}  // namespace

std::optional<Selection> select_download(NodeView& view, RuleId rule, TieBreaker& ties) {
  switch (rule) {
    case RuleId::Freshest:
      return heap_select(view, view.fresh_heap(), ties,
                         [&](HeaderId id) { return !view.clean(id); }, false);
    case RuleId::LongestHeader:
      return heap_select(view, view.len_heap(), ties,
                         [&](HeaderId id) { return !view.clean(id); }, false);
    case RuleId::EquivocationAvoidance:
      return heap_select(view, view.slot_heap(), ties,
                         [&](HeaderId id) {
                           return !view.clean(id) || !view.retained(id) ||
                                  view.status(id) == ContentStatus::Downloaded;
                         },
                         true);
    case RuleId::Blocklisting:
      return heap_select(view, view.slot_heap(), ties,
                         [&](HeaderId id) {
                           return !view.clean(id) || !view.retained(id) ||
                                  view.status(id) == ContentStatus::Downloaded ||
                                  view.blocklisted(view.gs().hdr(id).producer);
                         },
                         true);
  }
  return std::nullopt;
}

}  // namespace lcsim
