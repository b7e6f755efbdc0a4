#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "nocmap/network.hpp"
#include "nocmap/pe.hpp"

namespace nocmap {

class Outbox {
 public:
  virtual ~Outbox() = default;
  virtual void send(EndpointId dst, const MessageEnvelope& env, std::uint32_t word_width) = 0;
};

// Anything living at an endpoint: a PE, a host, an application root.
// Agents sharing an endpoint own disjoint tag sets.
class Agent {
 public:
  virtual ~Agent() = default;
  virtual std::string name() const = 0;
  virtual std::vector<std::uint32_t> tags() const = 0;
  virtual AcceptResult accept(const MessageEnvelope& env, Cycle now) = 0;
  virtual void tick(Cycle now, Outbox& out) = 0;
  // Nothing more to do unless new messages arrive.
  virtual bool finished() const = 0;
  virtual std::string describe() const { return name() + "\n"; }
};

class PeAgent : public Agent {
 public:
  explicit PeAgent(PEDescriptor pe);

  std::string name() const override { return pe_.name; }
  std::vector<std::uint32_t> tags() const override;
  AcceptResult accept(const MessageEnvelope& env, Cycle now) override;
  void tick(Cycle now, Outbox& out) override;
  bool finished() const override { return !pending_; }
  std::string describe() const override;

  void preload(std::uint32_t tag, std::uint64_t word) { state_.preload(tag, word); }
  const PEDescriptor& descriptor() const noexcept { return pe_; }
  const CollectorState& collector() const noexcept { return state_; }
  std::uint64_t firings() const noexcept { return firings_; }

 private:
  PEDescriptor pe_;
  CollectorState state_;
  std::optional<Results> pending_;
  Cycle done_at_ = 0;
  std::uint64_t firings_ = 0;
};

// Sends a fixed set of messages at start, then gathers `firings` rounds of
// results.
class HostAgent : public Agent {
 public:
  HostAgent(std::string name, CollectorSpec spec, std::vector<OutgoingMessage> initial,
            std::uint32_t firings = 1);

  std::string name() const override { return name_; }
  std::vector<std::uint32_t> tags() const override;
  AcceptResult accept(const MessageEnvelope& env, Cycle now) override;
  void tick(Cycle now, Outbox& out) override;
  bool finished() const override { return collected_.size() == firings_; }

  const std::vector<Inputs>& collected() const noexcept { return collected_; }
  Cycle finished_at() const noexcept { return finished_at_; }

 private:
  std::string name_;
  CollectorState state_;
  std::vector<OutgoingMessage> initial_;
  std::uint32_t firings_;
  bool started_ = false;
  std::vector<Inputs> collected_;
  Cycle finished_at_ = 0;
};

struct SendEvent {
  Cycle cycle;
  EndpointId src;
  EndpointId dst;
  MessageEnvelope env;
  bool loopback;
};

struct RunOptions {
  Cycle max_cycles = 200'000'000;
  Cycle stall_limit = 200'000;  // cycles without any event before giving up
};

struct RunResult {
  Cycle start = 0;
  Cycle end = 0;
  std::uint64_t envelopes = 0;
  std::uint64_t loopback_envelopes = 0;
  Cycle cycles() const noexcept { return end - start; }
};

// Drives agents on top of a Network. Per cycle and endpoint: eject at most
// one flit, hand at most one envelope to an agent (alternating between local
// loopback and the network), tick agents, inject at most one flit.
class Runtime {
 public:
  explicit Runtime(Network& net);
  ~Runtime();

  Agent& add(EndpointId e, std::unique_ptr<Agent> agent);
  template <class A>
  A& emplace(EndpointId e, std::unique_ptr<A> agent) {
    auto* p = agent.get();
    add(e, std::move(agent));
    return *p;
  }

  // Fixes the tag width; by default it covers the largest tag in use.
  void set_tag_bits(std::uint32_t bits) { tag_bits_override_ = bits; }
  EnvelopeLayout layout() const;
  void on_send(std::function<void(const SendEvent&)> hook) { hook_ = std::move(hook); }

  RunResult run(const RunOptions& opts = {});
  std::string describe() const;

 private:
  struct Nic;
  class NicOutbox;
  Network& net_;
  std::vector<std::unique_ptr<Nic>> nics_;  // per endpoint, may be null
  std::vector<std::pair<EndpointId, std::unique_ptr<Agent>>> agents_;
  std::optional<std::uint32_t> tag_bits_override_;
  std::function<void(const SendEvent&)> hook_;
};

}  // namespace nocmap
