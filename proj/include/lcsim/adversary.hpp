#pragma once
// Adversary strategies. An adversary owns the corrupted nodes' lottery wins,
// may mint headers, upload or withhold contents, and steer every tie the
// honest protocol leaves open (it extends TieBreaker).

#include <memory>
#include <string>

#include "lcsim/node_protocol.hpp"

namespace lcsim {

class Engine;

class Adversary : public TieBreaker {
 public:
  virtual ~Adversary() = default;
  virtual void begin(Engine&) {}
  // Called once per slot after honest proposals are minted, before headers
  // are disseminated.
  virtual void on_phase1(Engine&, uint32_t /*slot*/) {}
  // Called before each honest node's download tick.
  virtual void on_tick(Engine&, uint32_t /*honest_index*/) {}
  virtual const char* id() const { return "null"; }
};

std::unique_ptr<Adversary> make_adversary(const std::string& id);

}  // namespace lcsim
