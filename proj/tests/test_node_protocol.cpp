#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "lcsim/node_protocol.hpp"

using namespace lcsim;

namespace {

struct Fixture {
  GlobalHeaderSet gs;
  TieBreaker ties;

  Fixture() : gs(substream(1, StreamPurpose::Lottery), {0, 1, 2, 3}, 4, 1.0) {}

  NodeView view(bool track = false) { return NodeView(&gs, 0, 4, track); }

  HeaderId grow(HeaderId parent, uint32_t producer, uint32_t slot, uint64_t content) {
    auto h = gs.extend(producer, slot, parent, content, slot);
    REQUIRE(h.has_value());
    return *h;
  }
};

// dC validity invariant: every block on dC is Downloaded with a complete prefix.
void check_dc_valid(const NodeView& v, const GlobalHeaderSet& gs) {
  for (HeaderId h = v.dc();; h = gs.hdr(h).parent) {
    CHECK(v.status(h) == ContentStatus::Downloaded);
    CHECK(v.prefix_downloaded(h));
    if (h == kGenesis) break;
  }
}

}  // namespace

TEST_CASE("fresh view knows exactly genesis, downloaded") {
  Fixture f;
  NodeView v = f.view();
  CHECK(v.knows(kGenesis));
  CHECK(v.status(kGenesis) == ContentStatus::Downloaded);
  CHECK(v.prefix_downloaded(kGenesis));
  CHECK(v.dc() == kGenesis);
  CHECK(v.dc_height() == 0);
}

TEST_CASE("insert_chain adds the whole missing suffix; duplicates are no-ops") {
  Fixture f;
  NodeView v = f.view();
  HeaderId a = f.grow(kGenesis, 0, 1, 1);
  HeaderId b = f.grow(a, 1, 2, 2);
  HeaderId c = f.grow(b, 2, 3, 3);
  CHECK(v.insert_chain(c, f.ties, nullptr));  // inserts a, b, c
  CHECK(v.knows(a));
  CHECK(v.knows(b));
  CHECK(v.knows(c));
  CHECK(!v.insert_chain(c, f.ties, nullptr));  // duplicate
  CHECK(!v.insert_chain(b, f.ties, nullptr));  // prefix already present
}

TEST_CASE("content before header is parked and drained on header arrival") {
  Fixture f;
  NodeView v = f.view();
  HeaderId a = f.grow(kGenesis, 0, 1, 1);
  v.received_content(a, true, 0, f.ties, nullptr);  // header unknown: parked
  CHECK(v.status(a) == ContentStatus::Unknown);
  std::vector<HeaderId> dl;
  v.insert_chain(a, f.ties, &dl);
  CHECK(v.status(a) == ContentStatus::Downloaded);
  REQUIRE(dl.size() == 1);
  CHECK(dl[0] == a);
  CHECK(v.dc() == a);
}

TEST_CASE("content with incomplete prefix is deferred until the parent downloads") {
  Fixture f;
  NodeView v = f.view();
  HeaderId a = f.grow(kGenesis, 0, 1, 1);
  HeaderId b = f.grow(a, 1, 2, 2);
  v.insert_chain(b, f.ties, nullptr);
  v.received_content(b, true, 0, f.ties, nullptr);  // parent a still Unknown
  CHECK(v.status(b) == ContentStatus::Unknown);
  CHECK(v.dc() == kGenesis);
  std::vector<HeaderId> dl;
  v.received_content(a, true, 0, f.ties, &dl);  // unblocks b automatically
  CHECK(v.status(a) == ContentStatus::Downloaded);
  CHECK(v.status(b) == ContentStatus::Downloaded);
  REQUIRE(dl.size() == 2);
  CHECK(dl[0] == a);
  CHECK(dl[1] == b);
  CHECK(v.dc() == b);
  check_dc_valid(v, f.gs);
}

TEST_CASE("invalid content poisons the branch and leaves dC untouched") {
  Fixture f;
  NodeView v = f.view();
  HeaderId a = f.grow(kGenesis, 0, 1, 1);
  HeaderId b = f.grow(a, 1, 2, 2);
  HeaderId c = f.grow(b, 2, 3, 3);
  v.insert_chain(c, f.ties, nullptr);
  CHECK(v.clean(c));
  v.received_content(a, false, 0, f.ties, nullptr);
  CHECK(v.status(a) == ContentStatus::Invalid);
  CHECK(!v.clean(a));
  CHECK(!v.clean(b));
  CHECK(!v.clean(c));
  CHECK(v.dc() == kGenesis);
  // Content for a descendant of an invalid block is parked forever (its
  // prefix can never complete); status stays Unknown, dC stays clean.
  v.received_content(b, true, 0, f.ties, nullptr);
  CHECK(v.status(b) == ContentStatus::Unknown);
  check_dc_valid(v, f.gs);
}

TEST_CASE("invalid marks never revert") {
  Fixture f;
  NodeView v = f.view();
  HeaderId a = f.grow(kGenesis, 0, 1, 1);
  v.insert_chain(a, f.ties, nullptr);
  v.received_content(a, false, 0, f.ties, nullptr);
  CHECK(v.status(a) == ContentStatus::Invalid);
  v.received_content(a, true, 0, f.ties, nullptr);  // idempotent, no revert
  CHECK(v.status(a) == ContentStatus::Invalid);
}

TEST_CASE("dC switches only to strictly longer fully-downloaded chains") {
  Fixture f;
  NodeView v = f.view();
  HeaderId a = f.grow(kGenesis, 0, 1, 1);
  HeaderId b = f.grow(kGenesis, 1, 1, 2);  // equal-height rival
  v.insert_chain(a, f.ties, nullptr);
  v.insert_chain(b, f.ties, nullptr);
  v.received_content(a, true, 0, f.ties, nullptr);
  CHECK(v.dc() == a);
  v.received_content(b, true, 0, f.ties, nullptr);
  CHECK(v.dc() == a);  // incumbent keeps ties
  // A strictly longer chain through b takes over.
  HeaderId b2 = f.grow(b, 2, 2, 3);
  v.insert_chain(b2, f.ties, nullptr);
  v.received_content(b2, true, 0, f.ties, nullptr);
  CHECK(v.dc() == b2);
  CHECK(v.dc_height() == 2);
  check_dc_valid(v, f.gs);
}

TEST_CASE("dC length never decreases across random event interleavings") {
  Fixture f;
  Rng rng(substream(17, StreamPurpose::Adversary));
  for (int round = 0; round < 40; ++round) {
    NodeView v = f.view();
    std::vector<HeaderId> pool = {kGenesis};
    std::vector<HeaderId> blocks;
    uint32_t base_slot = 1 + uint32_t(round) * 30;
    for (int i = 0; i < 12; ++i) {
      HeaderId par = pool[rng.next_below(pool.size())];
      uint32_t slot = std::max(base_slot + uint32_t(i), f.gs.hdr(par).slot + 1);
      HeaderId h = f.grow(par, uint32_t(rng.next_below(4)), slot, rng.next_u64());
      pool.push_back(h);
      blocks.push_back(h);
    }
    uint32_t last_len = 0;
    for (int step = 0; step < 30; ++step) {
      HeaderId h = blocks[rng.next_below(blocks.size())];
      if (rng.next_below(2) == 0) {
        v.insert_chain(h, f.ties, nullptr);
      } else {
        if (!v.knows(h) && rng.next_below(2) == 0) v.insert_chain(h, f.ties, nullptr);
        v.received_content(h, rng.next_below(8) != 0, 0, f.ties, nullptr);
      }
      CHECK(v.dc_height() >= last_len);
      last_len = v.dc_height();
      check_dc_valid(v, f.gs);
    }
  }
}

TEST_CASE("earliest_unknown walks to the first gap") {
  Fixture f;
  NodeView v = f.view();
  HeaderId a = f.grow(kGenesis, 0, 1, 1);
  HeaderId b = f.grow(a, 1, 2, 2);
  HeaderId c = f.grow(b, 2, 3, 3);
  v.insert_chain(c, f.ties, nullptr);
  CHECK(v.earliest_unknown(c) == a);
  v.received_content(a, true, 0, f.ties, nullptr);
  CHECK(v.earliest_unknown(c) == b);
  v.received_content(b, true, 0, f.ties, nullptr);
  v.received_content(c, true, 0, f.ties, nullptr);
  CHECK(!v.earliest_unknown(c).has_value());
}

TEST_CASE("equivocation updates the blocklist exactly once seen twice") {
  Fixture f;
  NodeView v = f.view();
  HeaderId e1 = f.grow(kGenesis, 2, 5, 1);
  v.insert_chain(e1, f.ties, nullptr);
  CHECK(!v.blocklisted(2));
  // Same producer, different slot: not an equivocation.
  HeaderId e3 = f.grow(e1, 2, 6, 3);
  v.insert_chain(e3, f.ties, nullptr);
  CHECK(!v.blocklisted(2));
  // Second header for (2, slot 5): equivocation.
  HeaderId e2 = f.grow(kGenesis, 2, 5, 2);
  v.insert_chain(e2, f.ties, nullptr);
  CHECK(v.blocklisted(2));
}

TEST_CASE("blocklist only grows") {
  Fixture f;
  NodeView v = f.view();
  HeaderId e1 = f.grow(kGenesis, 1, 2, 1);
  HeaderId e2 = f.grow(kGenesis, 1, 2, 2);
  v.insert_chain(e1, f.ties, nullptr);
  v.insert_chain(e2, f.ties, nullptr);
  CHECK(v.blocklisted(1));
  // No removal API exists; subsequent honest-looking headers don't clear it.
  HeaderId h = f.grow(e1, 1, 9, 3);
  v.insert_chain(h, f.ties, nullptr);
  CHECK(v.blocklisted(1));
}

TEST_CASE("slot filter keeps one leaf per opportunity, adversary hook decides") {
  struct PickLast : TieBreaker {
    HeaderId pick_retained(uint32_t, const std::vector<HeaderId>& leaves) override {
      return leaves.back();
    }
  } last;
  Fixture f;
  NodeView v = f.view(/*track=*/true);
  HeaderId e1 = f.grow(kGenesis, 0, 1, 1);
  HeaderId e2 = f.grow(kGenesis, 0, 1, 2);
  HeaderId e3 = f.grow(kGenesis, 0, 1, 3);
  for (HeaderId h : {e1, e2, e3}) v.insert_chain(h, f.ties, nullptr);
  v.refresh_slot_filter(last);
  CHECK(!v.retained(e1));
  CHECK(!v.retained(e2));
  CHECK(v.retained(e3));
  // Default tie-break retains the first leaf instead.
  v.refresh_slot_filter(f.ties);
  CHECK(v.retained(e1));
}

TEST_CASE("non-leaf headers leave the opportunity buckets") {
  Fixture f;
  NodeView v = f.view(/*track=*/true);
  HeaderId a = f.grow(kGenesis, 0, 1, 1);
  v.insert_chain(a, f.ties, nullptr);
  v.refresh_slot_filter(f.ties);
  CHECK(v.retained(a));
  HeaderId b = f.grow(a, 1, 2, 2);  // a now has a child
  v.insert_chain(b, f.ties, nullptr);
  v.refresh_slot_filter(f.ties);
  CHECK(!v.retained(a));
  CHECK(v.retained(b));
}

TEST_CASE("longest_known_tip tracks the max-height known header") {
  Fixture f;
  NodeView v = f.view();
  CHECK(v.longest_known_tip() == kGenesis);
  HeaderId a = f.grow(kGenesis, 0, 1, 1);
  HeaderId b = f.grow(a, 1, 2, 2);
  v.insert_chain(b, f.ties, nullptr);
  CHECK(v.longest_known_tip() == b);
  HeaderId s = f.grow(kGenesis, 2, 3, 3);  // shorter side branch
  v.insert_chain(s, f.ties, nullptr);
  CHECK(v.longest_known_tip() == b);
}
