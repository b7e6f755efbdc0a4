#include "nocmap/partition.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "nocmap/error.hpp"
#include "nocmap/serdes.hpp"

namespace nocmap {

std::uint32_t PartitionSpec::partition_count() const {
  if (assignment.empty()) return 0;
  return *std::max_element(assignment.begin(), assignment.end()) + 1;
}

void PartitionSpec::validate(std::uint32_t router_count) const {
  if (assignment.size() != router_count)
    throw ConfigError("partition spec covers " + std::to_string(assignment.size()) +
                      " routers, network has " + std::to_string(router_count));
  if (lane_width < 1 || lane_width > 64) throw ConfigError("lane width must be in [1, 64]");
  const auto n = partition_count();
  std::vector<bool> used(n, false);
  for (auto p : assignment) used[p] = true;
  for (std::uint32_t p = 0; p < n; ++p)
    if (!used[p]) throw ConfigError("partition " + std::to_string(p) + " has no routers");
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::uint32_t parse_u32(std::string_view s, int line) {
  s = trim(s);
  std::uint32_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || s.empty())
    throw ConfigError("partition spec line " + std::to_string(line) + ": bad number '" +
                      std::string(s) + "'");
  return v;
}

}  // namespace

PartitionSpec parse_partition_spec(std::string_view text, std::uint32_t router_count) {
  PartitionSpec spec;
  std::vector<std::int64_t> asg(router_count, -1);
  int line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    auto line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (auto h = line.find('#'); h != std::string_view::npos) line = line.substr(0, h);
    line = trim(line);
    if (line.empty()) continue;
    const auto colon = line.find(':');
    if (colon == std::string_view::npos)
      throw ConfigError("partition spec line " + std::to_string(line_no) + ": expected router:partition");
    const auto r = parse_u32(line.substr(0, colon), line_no);
    const auto p = parse_u32(line.substr(colon + 1), line_no);
    if (r >= router_count)
      throw ConfigError("partition spec line " + std::to_string(line_no) + ": router " +
                        std::to_string(r) + " does not exist");
    if (asg[r] >= 0)
      throw ConfigError("partition spec assigns router " + std::to_string(r) + " twice");
    asg[r] = p;
  }
  for (std::uint32_t r = 0; r < router_count; ++r) {
    if (asg[r] < 0) throw ConfigError("partition spec misses router " + std::to_string(r));
    spec.assignment.push_back(static_cast<std::uint32_t>(asg[r]));
  }
  spec.validate(router_count);
  return spec;
}

PartitionSpec load_partition_file(const std::string& path, std::uint32_t router_count) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read partition file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_partition_spec(ss.str(), router_count);
}

PartitionSpec preset_partition(const Topology& topo, std::string_view name) {
  const auto R = topo.router_count();
  const auto& cfg = topo.config();
  PartitionSpec s;
  s.assignment.assign(R, 0);
  const bool grid = cfg.kind == TopologyKind::mesh || cfg.kind == TopologyKind::torus;
  if (name == "single") {
  } else if (name == "halves") {
    for (RouterId r = 0; r < R; ++r) {
      if (grid && cfg.rows > 1) s.assignment[r] = (r / cfg.cols) >= (cfg.rows + 1) / 2 ? 1 : 0;
      else if (grid) s.assignment[r] = (r % cfg.cols) >= (cfg.cols + 1) / 2 ? 1 : 0;
      else if (cfg.kind == TopologyKind::fat_tree) {
        // split every level by switch index so both halves keep a root
        const auto per = R / cfg.levels;
        s.assignment[r] = (r % per) >= (per + 1) / 2 ? 1 : 0;
      } else {
        s.assignment[r] = r >= (R + 1) / 2 ? 1 : 0;
      }
    }
  } else if (name == "router0") {
    for (RouterId r = 1; r < R; ++r) s.assignment[r] = 1;
  } else if (name == "quadrants") {
    for (RouterId r = 0; r < R; ++r) {
      if (grid) {
        const std::uint32_t x = r % cfg.cols, y = r / cfg.cols;
        s.assignment[r] = (y >= (cfg.rows + 1) / 2 ? 2 : 0) + (x >= (cfg.cols + 1) / 2 ? 1 : 0);
      } else {
        s.assignment[r] = std::min<std::uint32_t>(3, r * 4 / R);
      }
    }
    // compact ids in case a dimension has a single row or column
    std::vector<std::uint32_t> ids(s.assignment);
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    for (auto& a : s.assignment)
      a = static_cast<std::uint32_t>(std::lower_bound(ids.begin(), ids.end(), a) - ids.begin());
  } else if (name == "stripes") {
    for (RouterId r = 0; r < R; ++r) s.assignment[r] = r % 2;
  } else {
    throw ConfigError("unknown partition preset '" + std::string(name) + "'");
  }
  if (R == 1) s.assignment.assign(1, 0);
  s.validate(R);
  return s;
}

std::vector<CutLink> cut_links(const Topology& topo, const PartitionSpec& spec) {
  spec.validate(topo.router_count());
  std::vector<CutLink> out;
  for (const auto& [a, b] : topo.links()) {
    const auto pa = spec.assignment[a.first], pb = spec.assignment[b.first];
    if (pa != pb) out.push_back({a.first, a.second, b.first, b.second, pa, pb});
  }
  return out;
}

PartitionedNetwork partition_network(const TopologyConfig& config, const PartitionSpec& spec) {
  Topology topo(config);
  auto cuts = cut_links(topo, spec);
  std::vector<SerdesPlacement> placements;
  for (const auto& c : cuts) {
    placements.push_back({c.a, c.a_port, spec.lane_width});
    placements.push_back({c.b, c.b_port, spec.lane_width});
  }
  PartitionedNetwork pn{Network(config, placements), {}, std::move(cuts), 0, 0};
  const auto codec =
      FlitCodec::for_network(topo.endpoint_count(), topo.vc_count(), config.flit_width);
  pn.bundle_width = codec.bundle_width();
  pn.beats_per_bundle = beats_per_bundle(pn.bundle_width, spec.lane_width);
  pn.parts.resize(spec.partition_count());
  for (std::uint32_t p = 0; p < pn.parts.size(); ++p) pn.parts[p].id = p;
  for (RouterId r = 0; r < topo.router_count(); ++r) pn.parts[spec.assignment[r]].routers.push_back(r);
  for (EndpointId e = 0; e < topo.endpoint_count(); ++e)
    pn.parts[spec.assignment[topo.attachment(e).first]].endpoints.push_back(e);
  return pn;
}

std::string PartitionedNetwork::report() const {
  std::ostringstream os;
  os << parts.size() << " partition(s), " << cuts.size() << " cut link(s), bundle "
     << bundle_width << " bits, " << beats_per_bundle << " beats per bundle\n";
  for (const auto& c : cuts)
    os << "  cut R" << c.a << ":" << c.a_port << " (P" << c.a_part << ") <-> R" << c.b << ":"
       << c.b_port << " (P" << c.b_part << ")\n";
  return os.str();
}

}  // namespace nocmap
