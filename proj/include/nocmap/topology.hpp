#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "nocmap/flit.hpp"

namespace nocmap {

enum class TopologyKind { ring, mesh, torus, fat_tree };

std::string_view to_string(TopologyKind kind) noexcept;
TopologyKind parse_topology_kind(std::string_view text);

struct TopologyConfig {
  TopologyKind kind = TopologyKind::mesh;
  std::uint32_t endpoint_count = 16;
  std::uint32_t rows = 4;     // mesh, torus
  std::uint32_t cols = 4;     // mesh, torus
  std::uint32_t arity = 0;    // fat tree
  std::uint32_t levels = 0;   // fat tree
  std::uint32_t flit_width = 16;
  std::uint32_t buffer_depth = 8;
  std::uint32_t vc_count = 0;  // 0 selects the per-kind default

  // Smallest regular instance of `kind` with at least `min_endpoints`.
  static TopologyConfig fitted(TopologyKind kind, std::uint32_t min_endpoints);

  std::uint32_t effective_vc_count() const noexcept;
  std::uint32_t router_count() const noexcept;
  void validate() const;  // throws ConfigError
  std::string describe() const;
};

struct PortTarget {
  enum class Kind : std::uint8_t { unused, endpoint, router };
  Kind kind = Kind::unused;
  std::uint32_t id = 0;    // endpoint id, or peer router id
  std::uint32_t port = 0;  // peer router's port (router kind only)
};

struct RouteDecision {
  PortId port = 0;
  std::uint32_t vc = 0;
  friend bool operator==(const RouteDecision&, const RouteDecision&) = default;
};

// Port numbering:
//   ring        0 local, 1 clockwise (+1), 2 counter-clockwise (-1)
//   mesh/torus  0 local, 1 east (+x), 2 west (-x), 3 south (+y), 4 north (-y)
//   fat tree    0..k-1 down (endpoints at level 0), k..2k-1 up
namespace ports {
inline constexpr PortId local = 0;
inline constexpr PortId cw = 1;
inline constexpr PortId ccw = 2;
inline constexpr PortId east = 1;
inline constexpr PortId west = 2;
inline constexpr PortId south = 3;
inline constexpr PortId north = 4;
}  // namespace ports

// Static router graph. Ports are bidirectional: a flit leaving (r, p) enters
// the input queue of the peer port recorded in port(r, p).
class Topology {
 public:
  explicit Topology(const TopologyConfig& config);

  const TopologyConfig& config() const noexcept { return config_; }
  std::uint32_t router_count() const noexcept { return routers_; }
  std::uint32_t port_count() const noexcept { return ports_; }
  std::uint32_t vc_count() const noexcept { return vcs_; }
  std::uint32_t endpoint_count() const noexcept { return config_.endpoint_count; }

  const PortTarget& port(RouterId r, PortId p) const {
    return targets_[static_cast<std::size_t>(r) * ports_ + p];
  }
  std::pair<RouterId, PortId> attachment(EndpointId e) const { return attach_[e]; }

  std::uint32_t neighbor_links(RouterId r) const;
  std::uint32_t endpoint_links(RouterId r) const;
  // Undirected router-to-router links.
  std::vector<std::pair<std::pair<RouterId, PortId>, std::pair<RouterId, PortId>>>
  links() const;

  RouteDecision route(RouterId r, EndpointId dst, std::uint32_t vc) const;
  // Routers visited from src's router to dst's router, inclusive.
  std::vector<RouterId> path(EndpointId src, EndpointId dst) const;

 private:
  RouteDecision route_ring_dim(std::uint32_t pos, std::uint32_t target,
                               std::uint32_t size, PortId plus,
                               PortId minus) const;
  RouteDecision route_fat_tree(RouterId r, EndpointId dst) const;
  void connect(RouterId a, PortId pa, RouterId b, PortId pb);

  TopologyConfig config_;
  std::uint32_t routers_ = 0;
  std::uint32_t ports_ = 0;
  std::uint32_t vcs_ = 1;
  std::vector<PortTarget> targets_;
  std::vector<std::pair<RouterId, PortId>> attach_;
  std::vector<std::uint64_t> pow_;  // fat tree: arity^i
};

inline Topology build_topology(const TopologyConfig& config) { return Topology(config); }

// Deterministic minimal next hop: XY for mesh, shortest direction with a
// dateline VC for ring/torus, up*/down* via nearest common ancestor for the
// fat tree. Local delivery returns the endpoint's port.
inline RouteDecision route_next_hop(const Topology& t, RouterId r, EndpointId dst,
                                    std::uint32_t vc) {
  return t.route(r, dst, vc);
}

}  // namespace nocmap
