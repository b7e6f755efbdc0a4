#include "nocmap/allocator.hpp"

#include <array>

#include "nocmap/error.hpp"

namespace nocmap {

void allocate(RoundRobinState& rr, std::span<const AllocRequest> requests,
              std::vector<AllocGrant>& grants) {
  grants.clear();
  if (requests.empty()) return;

  const auto ports = static_cast<std::uint32_t>(rr.input_ptr.size());
  const std::uint32_t vcs = rr.vc_count;
  if (ports > max_allocator_ports) throw UsageError("allocator supports at most 64 ports");

  constexpr std::int32_t none = -1;
  std::array<std::int32_t, max_allocator_ports> input_choice;  // index into requests
  std::array<std::uint32_t, max_allocator_ports> input_dist;
  input_choice.fill(none);

  for (std::size_t i = 0; i < requests.size(); ++i) {
    const auto& q = requests[i];
    if (q.input >= ports || q.output >= ports || q.vc >= vcs)
      throw UsageError("allocation request out of range");
    const std::uint32_t d = (q.vc + vcs - rr.input_ptr[q.input]) % vcs;
    if (input_choice[q.input] == none || d < input_dist[q.input]) {
      input_choice[q.input] = static_cast<std::int32_t>(i);
      input_dist[q.input] = d;
    }
  }

  std::array<std::int32_t, max_allocator_ports> output_choice;
  std::array<std::uint32_t, max_allocator_ports> output_dist;
  output_choice.fill(none);
  for (std::uint32_t p = 0; p < ports; ++p) {
    if (input_choice[p] == none) continue;
    const auto& q = requests[static_cast<std::size_t>(input_choice[p])];
    const std::uint32_t d = (p + ports - rr.output_ptr[q.output]) % ports;
    if (output_choice[q.output] == none || d < output_dist[q.output]) {
      output_choice[q.output] = input_choice[p];
      output_dist[q.output] = d;
    }
  }

  for (std::uint32_t o = 0; o < ports; ++o) {
    if (output_choice[o] == none) continue;
    const auto& q = requests[static_cast<std::size_t>(output_choice[o])];
    grants.push_back({q.input, q.vc, o});
    rr.output_ptr[o] = (q.input + 1) % ports;
    rr.input_ptr[q.input] = (q.vc + 1) % vcs;
  }
}

std::vector<AllocGrant> allocate(RoundRobinState& rr,
                                 std::span<const AllocRequest> requests) {
  std::vector<AllocGrant> grants;
  allocate(rr, requests, grants);
  return grants;
}

}  // namespace nocmap
