#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "nocmap/flit.hpp"

namespace nocmap {

struct AllocRequest {
  PortId input = 0;
  std::uint32_t vc = 0;
  PortId output = 0;
};

struct AllocGrant {
  PortId input = 0;
  std::uint32_t vc = 0;
  PortId output = 0;
  friend bool operator==(const AllocGrant&, const AllocGrant&) = default;
};

// Round-robin pointers of a separable input-first allocator. Pointers start
// at 0 and move to (winner + 1) mod requester-count on a grant.
struct RoundRobinState {
  RoundRobinState() = default;
  RoundRobinState(std::uint32_t ports, std::uint32_t vcs)
      : input_ptr(ports, 0), output_ptr(ports, 0), vc_count(vcs) {}

  std::vector<std::uint32_t> input_ptr;   // per input port, over its VCs
  std::vector<std::uint32_t> output_ptr;  // per output port, over input ports
  std::uint32_t vc_count = 1;

  friend bool operator==(const RoundRobinState&, const RoundRobinState&) = default;
};

inline constexpr std::uint32_t max_allocator_ports = 64;

// Stage 1: every input port picks one requesting VC. Stage 2: every output
// port picks one surviving input. At most one grant per input and per output;
// grants are emitted in ascending output-port order.
void allocate(RoundRobinState& rr, std::span<const AllocRequest> requests,
              std::vector<AllocGrant>& grants);

std::vector<AllocGrant> allocate(RoundRobinState& rr,
                                 std::span<const AllocRequest> requests);

}  // namespace nocmap
