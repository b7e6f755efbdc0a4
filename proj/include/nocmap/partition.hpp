#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "nocmap/network.hpp"
#include "nocmap/topology.hpp"

namespace nocmap {

struct PartitionSpec {
  std::vector<std::uint32_t> assignment;  // router -> partition
  std::uint32_t lane_width = 8;

  std::uint32_t partition_count() const;
  void validate(std::uint32_t router_count) const;  // throws ConfigError
};

// Lines `router_id:partition_id`; `#` starts a comment.
PartitionSpec parse_partition_spec(std::string_view text, std::uint32_t router_count);
PartitionSpec load_partition_file(const std::string& path, std::uint32_t router_count);

// Named layouts: single, halves, router0, quadrants, stripes.
PartitionSpec preset_partition(const Topology& topo, std::string_view name);

struct CutLink {
  RouterId a = 0;
  PortId a_port = 0;
  RouterId b = 0;
  PortId b_port = 0;
  std::uint32_t a_part = 0;
  std::uint32_t b_part = 0;
};

struct Partition {
  std::uint32_t id = 0;
  std::vector<RouterId> routers;
  std::vector<EndpointId> endpoints;
};

// Each cut link carries one quasi-SERDES pair per direction; all partitions
// advance on one shared clock inside a single Network.
struct PartitionedNetwork {
  Network network;
  std::vector<Partition> parts;
  std::vector<CutLink> cuts;
  std::uint32_t beats_per_bundle = 0;
  std::uint32_t bundle_width = 0;

  std::string report() const;
};

std::vector<CutLink> cut_links(const Topology& topo, const PartitionSpec& spec);
PartitionedNetwork partition_network(const TopologyConfig& config, const PartitionSpec& spec);

}  // namespace nocmap
