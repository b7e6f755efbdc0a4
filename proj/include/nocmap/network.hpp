#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "nocmap/allocator.hpp"
#include "nocmap/flit.hpp"
#include "nocmap/serdes.hpp"
#include "nocmap/topology.hpp"

namespace nocmap {

// Bounded FIFO on a ring buffer.
class FlitFifo {
 public:
  FlitFifo() = default;
  explicit FlitFifo(std::uint32_t capacity) : buf_(capacity) {}

  std::uint32_t size() const noexcept { return size_; }
  std::uint32_t capacity() const noexcept { return static_cast<std::uint32_t>(buf_.size()); }
  bool empty() const noexcept { return size_ == 0; }
  bool full() const noexcept { return size_ == buf_.size(); }
  const Flit& front() const { return buf_[head_]; }
  const Flit& at(std::uint32_t i) const { return buf_[(head_ + i) % buf_.size()]; }
  void push(const Flit& f);  // throws if full
  Flit pop();

 private:
  std::vector<Flit> buf_;
  std::uint32_t head_ = 0;
  std::uint32_t size_ = 0;
};

struct NetworkStats {
  Cycle cycles = 0;
  std::uint64_t flits_injected = 0;
  std::uint64_t flits_ejected = 0;
  std::uint64_t latency_sum = 0;
  std::uint64_t latency_max = 0;
  std::uint32_t max_queue_occupancy = 0;

  double avg_latency() const noexcept {
    return flits_ejected ? double(latency_sum) / double(flits_ejected) : 0.0;
  }
};

// Directed router-to-router channel carried by a quasi-SERDES link instead of
// a plain one-cycle link register.
struct SerdesPlacement {
  RouterId router = 0;  // upstream router
  PortId port = 0;      // its output port
  std::uint32_t lane_width = 8;
};

// Cycle-stepped NoC. step() plans every move against the pre-cycle state and
// then commits them together, so router visiting order cannot change results.
//
// Timing: a granted flit spends one cycle in the link register, then lands in
// the downstream input queue; the router in front of it can grant it on the
// following step. An adjacent-router flit injected at cycle c is ejectable at
// c + 4; in general at c + 2 * (hops + 1).
class Network {
 public:
  explicit Network(const TopologyConfig& config, std::vector<SerdesPlacement> serdes = {});
  ~Network();
  Network(Network&&) noexcept;
  Network& operator=(Network&&) noexcept;

  const Topology& topology() const noexcept;
  Cycle cycle() const noexcept;
  const NetworkStats& stats() const noexcept;

  // Room in the endpoint's injection queue on `vc`.
  bool can_inject(EndpointId e, std::uint32_t vc = 0) const;
  // One call per endpoint per cycle. Returns false when the queue is full.
  bool inject(EndpointId e, const Flit& f);
  std::optional<Flit> eject(EndpointId e);
  const Flit* peek_eject(EndpointId e) const;
  void step();

  std::uint64_t in_flight() const noexcept;
  std::uint64_t count_flits() const;  // walks every buffer
  bool idle() const noexcept { return in_flight() == 0; }

  std::uint32_t queue_occupancy(RouterId r, PortId p, std::uint32_t vc) const;
  std::uint32_t eject_queue_occupancy(EndpointId e) const;

  struct SerdesView {
    RouterId router;
    PortId port;
    RouterId peer;
    PortId peer_port;
    const SerdesLink* link;
  };
  std::vector<SerdesView> serdes_links() const;

  // Visiting order of routers within a step; results must not depend on it.
  void set_update_order(std::vector<RouterId> order);
  std::uint64_t state_digest() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace nocmap
