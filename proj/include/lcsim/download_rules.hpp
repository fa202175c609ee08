#pragma once
// The four download priority rules: pure selections over a node's view.
// Each returns the chain whose earliest Unknown block to request next.

#include <optional>
#include <string>

#include "lcsim/node_protocol.hpp"

namespace lcsim {

enum class RuleId { Freshest, LongestHeader, EquivocationAvoidance, Blocklisting };

RuleId rule_from_string(const std::string& s);      // throws on unknown id
std::string rule_to_string(RuleId r);
bool rule_uses_slot_filter(RuleId r);

struct Selection {
  HeaderId chain;  // the selected chain (tip)
  HeaderId block;  // its earliest Unknown block (the content to request)
};

// Evaluates the rule. Mutates the view's heaps only by discarding entries
// that can never be candidates again (lazy invalidation), so repeated calls
// without intervening events return the same result.
std::optional<Selection> select_download(NodeView& view, RuleId rule, TieBreaker& ties);

}  // namespace lcsim
