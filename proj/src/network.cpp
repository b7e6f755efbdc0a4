#include "nocmap/network.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <string>

#include "nocmap/error.hpp"
#include "nocmap/rng.hpp"

namespace nocmap {

void FlitFifo::push(const Flit& f) {
  if (full()) throw Error(ErrorKind::runtime, "input queue overflow");
  buf_[(head_ + size_) % buf_.size()] = f;
  ++size_;
}

Flit FlitFifo::pop() {
  Flit f = buf_[head_];
  head_ = (head_ + 1) % static_cast<std::uint32_t>(buf_.size());
  --size_;
  return f;
}

namespace {

constexpr Cycle never = std::numeric_limits<Cycle>::max();

struct InputState {
  bool routed = false;  // wormhole: body flits follow the head's route
  RouteDecision route;
};

struct RouterState {
  std::vector<FlitFifo> queues;  // [port * vcs + vc]
  std::vector<InputState> inputs;
  std::vector<std::int32_t> owner;  // output (port, vc) -> input index or -1
  RoundRobinState rr;
  std::uint32_t occupancy = 0;
};

struct Channel {
  bool used = false;
  RouterId peer = 0;
  PortId peer_port = 0;
  std::optional<Flit> reg;
  std::unique_ptr<SerdesLink> serdes;
  SerdesLink::Plan plan;
};

struct EndpointState {
  RouterId router = 0;
  PortId port = 0;
  std::optional<Flit> eject_reg;
  FlitFifo eject_q;
  Cycle last_inject = never;
  Cycle last_eject = never;
  bool mid_packet = false;
};

struct Move {
  RouterId router;
  std::uint32_t input;
  RouteDecision out;
};

}  // namespace

struct Network::Impl {
  Topology topo;
  std::uint32_t ports, vcs, depth;
  Cycle cycle = 0;
  NetworkStats stats;
  std::uint64_t next_id = 0;
  std::vector<RouterState> routers;
  std::vector<Channel> channels;  // [router * ports + port]
  std::vector<std::uint32_t> used_channels;
  std::vector<EndpointState> endpoints;
  std::vector<RouterId> order;

  std::vector<AllocRequest> requests;
  std::vector<AllocGrant> grants;
  std::vector<RouteDecision> decisions;
  std::vector<Move> moves;

  explicit Impl(const TopologyConfig& cfg)
      : topo(cfg), ports(topo.port_count()), vcs(topo.vc_count()), depth(cfg.buffer_depth) {}

  FlitFifo& queue(RouterId r, PortId p, std::uint32_t vc) {
    return routers[r].queues[p * vcs + vc];
  }

  void push_queue(RouterId r, PortId p, const Flit& f) {
    auto& rs = routers[r];
    auto& q = rs.queues[p * vcs + f.vc];
    q.push(f);
    ++rs.occupancy;
    if (q.size() > stats.max_queue_occupancy) stats.max_queue_occupancy = q.size();
  }

  bool has_space(RouterId r, const RouteDecision& out) const {
    const auto& t = topo.port(r, out.port);
    if (t.kind == PortTarget::Kind::endpoint) {
      const auto& ep = endpoints[t.id];
      return ep.eject_q.size() + (ep.eject_reg ? 1u : 0u) < depth;
    }
    const auto& ch = channels[std::size_t(r) * ports + out.port];
    const auto occ = routers[t.id].queues[t.port * vcs + out.vc].size();
    if (ch.serdes) return ch.plan.latch_free && occ + ch.serdes->in_flight_on_vc(out.vc) < depth;
    return occ + ((ch.reg && ch.reg->vc == out.vc) ? 1u : 0u) < depth;
  }

  void plan_router(RouterId r) {
    auto& rs = routers[r];
    if (rs.occupancy == 0) return;
    requests.clear();
    const std::uint32_t n = ports * vcs;
    for (std::uint32_t idx = 0; idx < n; ++idx) {
      const auto& q = rs.queues[idx];
      if (q.empty()) continue;
      const Flit& f = q.front();
      RouteDecision out;
      if (rs.inputs[idx].routed) {
        out = rs.inputs[idx].route;
      } else {
        if (!f.head) throw ProtocolError("body flit without a routed head");
        out = topo.route(r, f.dst, f.vc);
      }
      const auto o = rs.owner[out.port * vcs + out.vc];
      if (o >= 0 && std::uint32_t(o) != idx) continue;
      if (!has_space(r, out)) continue;
      decisions[idx] = out;
      requests.push_back({idx / vcs, idx % vcs, out.port});
    }
    if (requests.empty()) return;
    allocate(rs.rr, requests, grants);
    for (const auto& g : grants) {
      const std::uint32_t idx = g.input * vcs + g.vc;
      moves.push_back({r, idx, decisions[idx]});
    }
  }

  void apply_move(const Move& m) {
    auto& rs = routers[m.router];
    Flit f = rs.queues[m.input].pop();
    --rs.occupancy;
    auto& in = rs.inputs[m.input];
    auto& owner = rs.owner[m.out.port * vcs + m.out.vc];
    if (f.tail) {
      in.routed = false;
      owner = -1;
    } else {
      in.routed = true;
      in.route = m.out;
      owner = static_cast<std::int32_t>(m.input);
    }
    f.vc = m.out.vc;
    const auto& t = topo.port(m.router, m.out.port);
    if (t.kind == PortTarget::Kind::endpoint) {
      f.vc = 0;
      endpoints[t.id].eject_reg = f;
      return;
    }
    auto& ch = channels[std::size_t(m.router) * ports + m.out.port];
    if (ch.serdes) ch.serdes->present(f);
    else ch.reg = f;
  }

  void step() {
    moves.clear();
    // Phase A: every decision is taken from the pre-cycle state.
    for (auto c : used_channels) {
      auto& ch = channels[c];
      if (!ch.serdes) continue;
      bool space = true;
      if (const auto& held = ch.serdes->rx_held(); held)
        space = routers[ch.peer].queues[ch.peer_port * vcs + held->vc].size() < depth;
      ch.plan = ch.serdes->plan(space);
    }
    for (auto r : order) plan_router(r);

    // Phase B: commit.
    for (auto c : used_channels) {
      auto& ch = channels[c];
      if (ch.serdes) {
        if (auto f = ch.serdes->commit(ch.plan)) push_queue(ch.peer, ch.peer_port, *f);
      } else if (ch.reg) {
        push_queue(ch.peer, ch.peer_port, *ch.reg);
        ch.reg.reset();
      }
    }
    for (auto& ep : endpoints) {
      if (ep.eject_reg) {
        ep.eject_q.push(*ep.eject_reg);
        ep.eject_reg.reset();
      }
    }
    for (const auto& m : moves) apply_move(m);
    ++cycle;
    stats.cycles = cycle;
  }
};

Network::Network(const TopologyConfig& config, std::vector<SerdesPlacement> serdes)
    : impl_(std::make_unique<Impl>(config)) {
  auto& s = *impl_;
  const auto& topo = s.topo;
  const std::uint32_t n = s.ports * s.vcs;
  if (s.ports > max_allocator_ports) throw ConfigError("too many router ports");
  s.routers.resize(topo.router_count());
  for (auto& rs : s.routers) {
    rs.queues.assign(n, FlitFifo(s.depth));
    rs.inputs.assign(n, {});
    rs.owner.assign(n, -1);
    rs.rr = RoundRobinState(s.ports, s.vcs);
  }
  s.channels.resize(std::size_t(topo.router_count()) * s.ports);
  for (RouterId r = 0; r < topo.router_count(); ++r) {
    for (PortId p = 0; p < s.ports; ++p) {
      const auto& t = topo.port(r, p);
      if (t.kind != PortTarget::Kind::router) continue;
      auto& ch = s.channels[std::size_t(r) * s.ports + p];
      ch.used = true;
      ch.peer = t.id;
      ch.peer_port = t.port;
      s.used_channels.push_back(static_cast<std::uint32_t>(r * s.ports + p));
    }
  }
  const auto codec = FlitCodec::for_network(topo.endpoint_count(), s.vcs, config.flit_width);
  for (const auto& sp : serdes) {
    if (sp.router >= topo.router_count() || sp.port >= s.ports)
      throw ConfigError("serdes placement outside the network");
    auto& ch = s.channels[std::size_t(sp.router) * s.ports + sp.port];
    if (!ch.used) throw ConfigError("serdes placement on a port without a router link");
    if (ch.serdes) throw ConfigError("duplicate serdes placement");
    if (sp.lane_width < 1 || sp.lane_width > 64) throw ConfigError("lane width must be in [1, 64]");
    ch.serdes = std::make_unique<SerdesLink>(codec, sp.lane_width);
  }
  s.endpoints.resize(topo.endpoint_count());
  for (EndpointId e = 0; e < topo.endpoint_count(); ++e) {
    auto& ep = s.endpoints[e];
    std::tie(ep.router, ep.port) = topo.attachment(e);
    ep.eject_q = FlitFifo(s.depth);
  }
  s.order.resize(topo.router_count());
  std::iota(s.order.begin(), s.order.end(), 0u);
  s.decisions.resize(n);
}

Network::~Network() = default;
Network::Network(Network&&) noexcept = default;
Network& Network::operator=(Network&&) noexcept = default;

const Topology& Network::topology() const noexcept { return impl_->topo; }
Cycle Network::cycle() const noexcept { return impl_->cycle; }
const NetworkStats& Network::stats() const noexcept { return impl_->stats; }

bool Network::can_inject(EndpointId e, std::uint32_t vc) const {
  const auto& s = *impl_;
  if (e >= s.endpoints.size() || vc >= s.vcs) return false;
  const auto& ep = s.endpoints[e];
  return ep.last_inject != s.cycle && !s.routers[ep.router].queues[ep.port * s.vcs + vc].full();
}

bool Network::inject(EndpointId e, const Flit& f) {
  auto& s = *impl_;
  const auto E = s.endpoints.size();
  if (e >= E) throw ValidationError("source endpoint " + std::to_string(e) + " out of range");
  if (f.dst >= E) throw ValidationError("destination endpoint " + std::to_string(f.dst) + " out of range");
  if (f.vc >= s.vcs) throw ValidationError("virtual channel " + std::to_string(f.vc) + " out of range");
  if ((f.payload & ~low_mask(s.topo.config().flit_width)) != 0)
    throw ValidationError("payload wider than the flit width");
  if (!f.valid) throw ValidationError("injected flit is not valid");
  auto& ep = s.endpoints[e];
  if (ep.mid_packet == f.head)
    throw ValidationError(f.head ? "head flit inside an open packet" : "body flit without a head");
  if (ep.last_inject == s.cycle)
    throw UsageError("second injection at endpoint " + std::to_string(e) + " in one cycle");
  ep.last_inject = s.cycle;
  auto& q = s.queue(ep.router, ep.port, f.vc);
  if (q.full()) return false;
  Flit g = f;
  g.src = e;
  g.id = s.next_id++;
  g.inject_cycle = s.cycle;
  s.push_queue(ep.router, ep.port, g);
  ep.mid_packet = !f.tail;
  ++s.stats.flits_injected;
  return true;
}

std::optional<Flit> Network::eject(EndpointId e) {
  auto& s = *impl_;
  if (e >= s.endpoints.size()) throw ValidationError("endpoint out of range");
  auto& ep = s.endpoints[e];
  if (ep.last_eject == s.cycle || ep.eject_q.empty()) return std::nullopt;
  ep.last_eject = s.cycle;
  Flit f = ep.eject_q.pop();
  const auto lat = s.cycle - f.inject_cycle;
  ++s.stats.flits_ejected;
  s.stats.latency_sum += lat;
  if (lat > s.stats.latency_max) s.stats.latency_max = lat;
  return f;
}

const Flit* Network::peek_eject(EndpointId e) const {
  const auto& s = *impl_;
  if (e >= s.endpoints.size()) throw ValidationError("endpoint out of range");
  const auto& ep = s.endpoints[e];
  if (ep.last_eject == s.cycle || ep.eject_q.empty()) return nullptr;
  return &ep.eject_q.front();
}

void Network::step() { impl_->step(); }

std::uint64_t Network::in_flight() const noexcept {
  return impl_->stats.flits_injected - impl_->stats.flits_ejected;
}

std::uint64_t Network::count_flits() const {
  const auto& s = *impl_;
  std::uint64_t n = 0;
  for (const auto& rs : s.routers)
    for (const auto& q : rs.queues) n += q.size();
  for (auto c : s.used_channels) {
    const auto& ch = s.channels[c];
    n += ch.serdes ? ch.serdes->in_flight() : (ch.reg ? 1 : 0);
  }
  for (const auto& ep : s.endpoints) n += ep.eject_q.size() + (ep.eject_reg ? 1 : 0);
  return n;
}

std::uint32_t Network::queue_occupancy(RouterId r, PortId p, std::uint32_t vc) const {
  return impl_->routers.at(r).queues.at(p * impl_->vcs + vc).size();
}

std::uint32_t Network::eject_queue_occupancy(EndpointId e) const {
  return impl_->endpoints.at(e).eject_q.size();
}

std::vector<Network::SerdesView> Network::serdes_links() const {
  std::vector<SerdesView> out;
  const auto& s = *impl_;
  for (auto c : s.used_channels) {
    const auto& ch = s.channels[c];
    if (ch.serdes) out.push_back({c / s.ports, c % s.ports, ch.peer, ch.peer_port, ch.serdes.get()});
  }
  return out;
}

void Network::set_update_order(std::vector<RouterId> order) {
  auto sorted = order;
  std::sort(sorted.begin(), sorted.end());
  std::vector<RouterId> ident(impl_->routers.size());
  std::iota(ident.begin(), ident.end(), 0u);
  if (sorted != ident) throw UsageError("update order must be a permutation of the routers");
  impl_->order = std::move(order);
}

std::uint64_t Network::state_digest() const {
  const auto& s = *impl_;
  std::uint64_t h = 0x6e6f63;
  auto add = [&](std::uint64_t v) { h = mix64(h ^ v); };
  auto add_flit = [&](const Flit& f) {
    add(f.id);
    add(f.payload);
    add((std::uint64_t(f.dst) << 8) | (f.vc << 3) | (f.head << 1) | f.tail);
  };
  add(s.cycle);
  add(s.stats.flits_injected);
  add(s.stats.flits_ejected);
  add(s.stats.latency_sum);
  for (const auto& rs : s.routers) {
    for (const auto& q : rs.queues) {
      add(q.size());
      for (std::uint32_t i = 0; i < q.size(); ++i) add_flit(q.at(i));
    }
    for (const auto& in : rs.inputs) add(in.routed ? (in.route.port << 8 | in.route.vc) : 0xffff);
    for (auto o : rs.owner) add(static_cast<std::uint64_t>(o));
    for (auto p : rs.rr.input_ptr) add(p);
    for (auto p : rs.rr.output_ptr) add(p);
  }
  for (auto c : s.used_channels) {
    const auto& ch = s.channels[c];
    if (ch.serdes) add(ch.serdes->state_hash());
    else if (ch.reg) add_flit(*ch.reg);
    else add(0);
  }
  for (const auto& ep : s.endpoints) {
    add(ep.eject_q.size());
    for (std::uint32_t i = 0; i < ep.eject_q.size(); ++i) add_flit(ep.eject_q.at(i));
    if (ep.eject_reg) add_flit(*ep.eject_reg);
  }
  return h;
}

}  // namespace nocmap
