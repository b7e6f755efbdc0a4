#include "nocmap/topology.hpp"

#include <cmath>
#include <sstream>

#include "nocmap/error.hpp"

namespace nocmap {

std::string_view to_string(TopologyKind kind) noexcept {
  switch (kind) {
    case TopologyKind::ring: return "ring";
    case TopologyKind::mesh: return "mesh";
    case TopologyKind::torus: return "torus";
    case TopologyKind::fat_tree: return "fat_tree";
  }
  return "?";
}

TopologyKind parse_topology_kind(std::string_view text) {
  if (text == "ring") return TopologyKind::ring;
  if (text == "mesh") return TopologyKind::mesh;
  if (text == "torus") return TopologyKind::torus;
  if (text == "fat_tree" || text == "fattree" || text == "fat-tree")
    return TopologyKind::fat_tree;
  throw ConfigError("unknown topology '" + std::string(text) + "'");
}

TopologyConfig TopologyConfig::fitted(TopologyKind kind, std::uint32_t min_endpoints) {
  if (min_endpoints == 0) throw ConfigError("topology needs at least one endpoint");
  TopologyConfig c;
  c.kind = kind;
  switch (kind) {
    case TopologyKind::ring:
      c.endpoint_count = min_endpoints;
      c.rows = c.cols = 0;
      break;
    case TopologyKind::mesh:
    case TopologyKind::torus: {
      auto cols = static_cast<std::uint32_t>(std::ceil(std::sqrt(double(min_endpoints))));
      auto rows = (min_endpoints + cols - 1) / cols;
      c.rows = rows;
      c.cols = cols;
      c.endpoint_count = rows * cols;
      break;
    }
    case TopologyKind::fat_tree: {
      c.rows = c.cols = 0;
      c.arity = min_endpoints <= 2 ? 2 : 4;
      c.levels = 1;
      std::uint64_t cap = c.arity;
      while (cap < min_endpoints) {
        cap *= c.arity;
        ++c.levels;
      }
      c.endpoint_count = static_cast<std::uint32_t>(cap);
      break;
    }
  }
  return c;
}

std::uint32_t TopologyConfig::effective_vc_count() const noexcept {
  if (vc_count != 0) return vc_count;
  return (kind == TopologyKind::ring || kind == TopologyKind::torus) ? 2 : 1;
}

std::uint32_t TopologyConfig::router_count() const noexcept {
  switch (kind) {
    case TopologyKind::ring: return endpoint_count;
    case TopologyKind::mesh:
    case TopologyKind::torus: return rows * cols;
    case TopologyKind::fat_tree: {
      std::uint64_t per_level = 1;
      for (std::uint32_t i = 0; i + 1 < levels; ++i) per_level *= arity;
      return static_cast<std::uint32_t>(per_level * levels);
    }
  }
  return 0;
}

void TopologyConfig::validate() const {
  if (endpoint_count < 1) throw ConfigError("endpoint_count must be >= 1");
  if (buffer_depth < 1) throw ConfigError("buffer_depth must be >= 1");
  if (flit_width < 1 || flit_width > 64)
    throw ConfigError("flit_width must be in [1, 64]");
  const auto vcs = effective_vc_count();
  if (vcs < 1 || vcs > 16) throw ConfigError("vc_count must be in [1, 16]");
  switch (kind) {
    case TopologyKind::ring:
      if (vcs < 2) throw ConfigError("ring needs 2 virtual channels for the dateline");
      break;
    case TopologyKind::mesh:
    case TopologyKind::torus:
      if (rows < 1 || cols < 1) throw ConfigError("mesh/torus dimensions must be >= 1");
      if (std::uint64_t(rows) * cols != endpoint_count) {
        std::ostringstream os;
        os << to_string(kind) << " " << rows << "x" << cols << " has " << rows * cols
           << " routers but endpoint_count is " << endpoint_count;
        throw ConfigError(os.str());
      }
      if (kind == TopologyKind::torus && vcs < 2)
        throw ConfigError("torus needs 2 virtual channels for the dateline");
      break;
    case TopologyKind::fat_tree: {
      if (arity < 2 || arity > 32) throw ConfigError("fat tree arity must be in [2, 32]");
      if (levels < 1) throw ConfigError("fat tree levels must be >= 1");
      std::uint64_t cap = 1;
      for (std::uint32_t i = 0; i < levels; ++i) {
        cap *= arity;
        if (cap > (1u << 20)) throw ConfigError("fat tree too large");
      }
      if (cap != endpoint_count) {
        std::ostringstream os;
        os << "fat tree " << arity << "-ary " << levels << "-level has " << cap
           << " endpoints but endpoint_count is " << endpoint_count;
        throw ConfigError(os.str());
      }
      break;
    }
  }
}

std::string TopologyConfig::describe() const {
  std::ostringstream os;
  os << to_string(kind);
  switch (kind) {
    case TopologyKind::ring: os << " " << endpoint_count; break;
    case TopologyKind::mesh:
    case TopologyKind::torus: os << " " << rows << "x" << cols; break;
    case TopologyKind::fat_tree: os << " " << arity << "-ary " << levels << "-level"; break;
  }
  return os.str();
}

Topology::Topology(const TopologyConfig& config) : config_(config) {
  config_.validate();
  vcs_ = config_.effective_vc_count();
  routers_ = config_.router_count();
  attach_.resize(config_.endpoint_count);

  switch (config_.kind) {
    case TopologyKind::ring: {
      ports_ = 3;
      targets_.resize(std::size_t(routers_) * ports_);
      for (RouterId r = 0; r < routers_; ++r) {
        targets_[r * ports_ + ports::local] = {PortTarget::Kind::endpoint, r, 0};
        attach_[r] = {r, ports::local};
      }
      if (routers_ > 1) {
        for (RouterId r = 0; r < routers_; ++r)
          connect(r, ports::cw, (r + 1) % routers_, ports::ccw);
      }
      break;
    }
    case TopologyKind::mesh:
    case TopologyKind::torus: {
      ports_ = 5;
      targets_.resize(std::size_t(routers_) * ports_);
      const bool wrap = config_.kind == TopologyKind::torus;
      const auto rows = config_.rows, cols = config_.cols;
      for (RouterId r = 0; r < routers_; ++r) {
        targets_[r * ports_ + ports::local] = {PortTarget::Kind::endpoint, r, 0};
        attach_[r] = {r, ports::local};
      }
      for (std::uint32_t y = 0; y < rows; ++y) {
        for (std::uint32_t x = 0; x < cols; ++x) {
          const RouterId r = y * cols + x;
          if (x + 1 < cols) connect(r, ports::east, r + 1, ports::west);
          else if (wrap && cols > 1) connect(r, ports::east, y * cols, ports::west);
          if (y + 1 < rows) connect(r, ports::south, r + cols, ports::north);
          else if (wrap && rows > 1) connect(r, ports::south, x, ports::north);
        }
      }
      break;
    }
    case TopologyKind::fat_tree: {
      const std::uint32_t k = config_.arity, n = config_.levels;
      ports_ = 2 * k;
      pow_.assign(n + 1, 1);
      for (std::uint32_t i = 1; i <= n; ++i) pow_[i] = pow_[i - 1] * k;
      const auto per_level = static_cast<std::uint32_t>(pow_[n - 1]);
      targets_.resize(std::size_t(routers_) * ports_);
      for (std::uint32_t s = 0; s < per_level; ++s) {
        for (std::uint32_t c = 0; c < k; ++c) {
          const EndpointId e = s * k + c;
          targets_[s * ports_ + c] = {PortTarget::Kind::endpoint, e, 0};
          attach_[e] = {s, c};
        }
      }
      for (std::uint32_t l = 0; l + 1 < n; ++l) {
        for (std::uint32_t s = 0; s < per_level; ++s) {
          const std::uint64_t g = s / pow_[l], rep = s % pow_[l];
          const RouterId self = l * per_level + s;
          for (std::uint32_t j = 0; j < k; ++j) {
            const auto parent_s =
                static_cast<std::uint32_t>((g / k) * pow_[l + 1] + rep + j * pow_[l]);
            const RouterId parent = (l + 1) * per_level + parent_s;
            connect(self, k + j, parent, static_cast<PortId>(g % k));
          }
        }
      }
      break;
    }
  }
}

void Topology::connect(RouterId a, PortId pa, RouterId b, PortId pb) {
  targets_[std::size_t(a) * ports_ + pa] = {PortTarget::Kind::router, b, pb};
  targets_[std::size_t(b) * ports_ + pb] = {PortTarget::Kind::router, a, pa};
}

std::uint32_t Topology::neighbor_links(RouterId r) const {
  std::uint32_t n = 0;
  for (PortId p = 0; p < ports_; ++p)
    if (port(r, p).kind == PortTarget::Kind::router) ++n;
  return n;
}

std::uint32_t Topology::endpoint_links(RouterId r) const {
  std::uint32_t n = 0;
  for (PortId p = 0; p < ports_; ++p)
    if (port(r, p).kind == PortTarget::Kind::endpoint) ++n;
  return n;
}

std::vector<std::pair<std::pair<RouterId, PortId>, std::pair<RouterId, PortId>>>
Topology::links() const {
  std::vector<std::pair<std::pair<RouterId, PortId>, std::pair<RouterId, PortId>>> out;
  for (RouterId r = 0; r < routers_; ++r) {
    for (PortId p = 0; p < ports_; ++p) {
      const auto& t = port(r, p);
      if (t.kind != PortTarget::Kind::router) continue;
      if (std::pair(r, p) < std::pair(t.id, t.port)) out.push_back({{r, p}, {t.id, t.port}});
    }
  }
  return out;
}

// One dimension of a ring/torus. The hop uses VC 0 while the wrap link still
// lies ahead in this dimension and VC 1 once it no longer does, which breaks
// the cyclic channel dependence of each ring.
RouteDecision Topology::route_ring_dim(std::uint32_t pos, std::uint32_t target,
                                       std::uint32_t size, PortId plus,
                                       PortId minus) const {
  const std::uint32_t fwd = (target + size - pos) % size;
  const std::uint32_t bwd = (pos + size - target) % size;
  // ties alternate by source parity so both directions carry half of them
  if (fwd < bwd || (fwd == bwd && pos % 2 == 0)) {
    const std::uint32_t next = (pos + 1) % size;
    return {plus, next > target ? 0u : 1u};
  }
  const std::uint32_t next = (pos + size - 1) % size;
  return {minus, next < target ? 0u : 1u};
}

RouteDecision Topology::route_fat_tree(RouterId r, EndpointId dst) const {
  const std::uint32_t k = config_.arity;
  const auto per_level = static_cast<std::uint32_t>(pow_[config_.levels - 1]);
  const std::uint32_t l = r / per_level, s = r % per_level;
  const std::uint64_t g = s / pow_[l];
  const std::uint64_t digit = (dst / pow_[l]) % k;
  if (dst / pow_[l + 1] == g) return {static_cast<PortId>(digit), 0};
  return {static_cast<PortId>(k + digit), 0};
}

RouteDecision Topology::route(RouterId r, EndpointId dst, std::uint32_t vc) const {
  (void)vc;  // routing is minimal and oblivious; the next VC is position-derived
  const auto [dst_router, dst_port] = attach_[dst];
  if (dst_router == r) return {dst_port, 0};
  switch (config_.kind) {
    case TopologyKind::ring:
      return route_ring_dim(r, dst_router, routers_, ports::cw, ports::ccw);
    case TopologyKind::mesh: {
      const auto cols = config_.cols;
      const std::uint32_t x = r % cols, y = r / cols;
      const std::uint32_t dx = dst_router % cols, dy = dst_router / cols;
      if (dx > x) return {ports::east, 0};
      if (dx < x) return {ports::west, 0};
      if (dy > y) return {ports::south, 0};
      return {ports::north, 0};
    }
    case TopologyKind::torus: {
      const auto cols = config_.cols, rows = config_.rows;
      const std::uint32_t x = r % cols, y = r / cols;
      const std::uint32_t dx = dst_router % cols, dy = dst_router / cols;
      if (dx != x) return route_ring_dim(x, dx, cols, ports::east, ports::west);
      return route_ring_dim(y, dy, rows, ports::south, ports::north);
    }
    case TopologyKind::fat_tree:
      return route_fat_tree(r, dst);
  }
  return {};
}

std::vector<RouterId> Topology::path(EndpointId src, EndpointId dst) const {
  std::vector<RouterId> out;
  RouterId r = attach_[src].first;
  std::uint32_t vc = 0;
  out.push_back(r);
  for (std::uint32_t guard = 0; guard <= routers_ * 2 + 2; ++guard) {
    const auto d = route(r, dst, vc);
    const auto& t = port(r, d.port);
    if (t.kind == PortTarget::Kind::endpoint) return out;
    r = t.id;
    vc = d.vc;
    out.push_back(r);
  }
  throw Error(ErrorKind::runtime, "routing loop detected");
}

}  // namespace nocmap
