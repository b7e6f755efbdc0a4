#pragma once

#include <cstdint>

namespace nocmap {

using EndpointId = std::uint32_t;
using RouterId = std::uint32_t;
using PortId = std::uint32_t;
using Cycle = std::uint64_t;

// Atomic unit moved across one NoC link per cycle. The fields up to and
// including `payload` form the wire bundle; the rest is simulator bookkeeping.
struct Flit {
  bool valid = true;
  bool head = true;
  bool tail = true;
  EndpointId dst = 0;
  std::uint32_t vc = 0;
  std::uint64_t payload = 0;

  EndpointId src = 0;
  std::uint64_t id = 0;
  Cycle inject_cycle = 0;

  bool same_wire(const Flit& o) const noexcept {
    return valid == o.valid && head == o.head && tail == o.tail &&
           dst == o.dst && vc == o.vc && payload == o.payload;
  }
};

}  // namespace nocmap
