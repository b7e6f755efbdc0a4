#include <doctest.h>

#include <algorithm>
#include <deque>
#include <map>

#include "nocmap/error.hpp"
#include "nocmap/partition.hpp"
#include "nocmap/network.hpp"
#include "nocmap/rng.hpp"

using namespace nocmap;

namespace {

Flit to(EndpointId dst, std::uint64_t payload = 0) {
  Flit f;
  f.dst = dst;
  f.payload = payload;
  return f;
}

// Steps until a flit pops out at `e`; returns the cycle it was ejected.
Cycle first_eject_cycle(Network& net, EndpointId e, int limit = 100) {
  for (int i = 0; i < limit; ++i) {
    net.step();
    if (net.eject(e)) return net.cycle();
  }
  return 0;
}

}  // namespace

TEST_SUITE("network") {
TEST_CASE("empty network: step only advances the cycle") {
  Network net(TopologyConfig::fitted(TopologyKind::mesh, 16));
  const auto d0 = net.state_digest();
  net.step();
  CHECK(net.cycle() == 1);
  Network ref(TopologyConfig::fitted(TopologyKind::mesh, 16));
  CHECK(d0 == ref.state_digest());
  CHECK(net.count_flits() == 0);
}

TEST_CASE("adjacent-router latency is 4 cycles, 2 per hop beyond that") {
  // measured once on this simulator and frozen
  Network net(TopologyConfig::fitted(TopologyKind::mesh, 16));
  REQUIRE(net.inject(0, to(1, 7)));
  CHECK(first_eject_cycle(net, 1) == 4);
  CHECK(net.stats().latency_max == 4);

  for (auto kind : {TopologyKind::ring, TopologyKind::mesh, TopologyKind::torus,
                    TopologyKind::fat_tree}) {
    const auto cfg = TopologyConfig::fitted(kind, 16);
    for (EndpointId dst : {0u, 1u, 5u, 15u}) {
      Network n(cfg);
      REQUIRE(n.inject(0, to(dst)));
      const auto hops = n.topology().path(0, dst).size() - 1;
      CHECK(first_eject_cycle(n, dst) == 2 * (hops + 1));
    }
  }
}

TEST_CASE("full injection queue rejects, the caller retries") {
  auto cfg = TopologyConfig::fitted(TopologyKind::mesh, 4);
  Network net(cfg);
  // fill endpoint 0's queue without stepping the routers far enough to drain:
  // destination 3 cannot eject because nobody calls eject.
  int accepted = 0, rejected = 0;
  for (int i = 0; i < 200; ++i) {
    if (net.inject(0, to(3, i & 0xff))) ++accepted;
    else ++rejected;
    net.step();
  }
  CHECK(rejected > 0);
  CHECK(net.stats().max_queue_occupancy <= cfg.buffer_depth);
  CHECK(net.in_flight() == static_cast<std::uint64_t>(accepted));
  CHECK(net.count_flits() == net.in_flight());
}

TEST_CASE("invalid flits are validation errors; double injection is a usage error") {
  Network net(TopologyConfig::fitted(TopologyKind::mesh, 16));
  CHECK_THROWS_AS(net.inject(0, to(16)), ValidationError);
  Flit wide = to(1, 1u << 16);
  CHECK_THROWS_AS(net.inject(0, wide), ValidationError);
  Flit badvc = to(1);
  badvc.vc = 1;
  CHECK_THROWS_AS(net.inject(0, badvc), ValidationError);
  CHECK(net.inject(0, to(1)));
  CHECK_THROWS_AS(net.inject(0, to(2)), UsageError);
  net.step();
  CHECK(net.inject(0, to(2)));
}

TEST_CASE("nothing in flight: eject returns nothing") {
  Network net(TopologyConfig::fitted(TopologyKind::torus, 16));
  for (int i = 0; i < 5; ++i) {
    net.step();
    for (EndpointId e = 0; e < 16; ++e) CHECK_FALSE(net.eject(e));
  }
}

TEST_CASE("two flits for one endpoint are ejected on consecutive cycles") {
  Network net(TopologyConfig::fitted(TopologyKind::mesh, 16));
  REQUIRE(net.inject(1, to(0, 1)));
  REQUIRE(net.inject(4, to(0, 2)));
  for (int i = 0; i < 10; ++i) net.step();
  CHECK(net.eject_queue_occupancy(0) == 2);
  CHECK(net.eject(0));
  CHECK_FALSE(net.eject(0));
  net.step();
  CHECK(net.eject(0));
  CHECK_FALSE(net.eject(0));
  CHECK(net.idle());
}

TEST_CASE("downstream full: the upstream flit waits") {
  auto cfg = TopologyConfig::fitted(TopologyKind::mesh, 4);
  cfg.buffer_depth = 2;
  Network net(cfg);
  for (int i = 0; i < 40; ++i) {
    net.inject(0, to(1, i));
    net.step();
    CHECK(net.queue_occupancy(1, ports::west, 0) <= 2);
  }
  // endpoint 1 never ejects: eject queue (2) + router 1 west queue (2) + link
  // + router 0 local queue (2) bound what can be in flight
  CHECK(net.in_flight() <= 7);
  CHECK(net.eject_queue_occupancy(1) == 2);
}

TEST_CASE("multi-flit packets are not interleaved at the destination") {
  Network net(TopologyConfig::fitted(TopologyKind::mesh, 16));
  std::map<EndpointId, int> sent;
  std::vector<Flit> got;
  std::vector<EndpointId> srcs{1, 4, 5, 6};
  for (int c = 0; c < 400; ++c) {
    for (auto s : srcs) {
      int k = sent[s];
      if (k >= 30) continue;
      Flit f = to(0, (s << 8) | k);
      f.head = (k % 3 == 0);
      f.tail = (k % 3 == 2);
      if (net.inject(s, f)) ++sent[s];
    }
    net.step();
    if (auto f = net.eject(0)) got.push_back(*f);
  }
  REQUIRE(got.size() == 120);
  for (std::size_t i = 0; i < got.size(); i += 3) {
    CHECK(got[i].head);
    CHECK(got[i + 2].tail);
    CHECK(got[i].src == got[i + 1].src);
    CHECK(got[i].src == got[i + 2].src);
  }
}
}

TEST_SUITE("network_properties") {
// Random uniform traffic at `rate`, then drain. Checks conservation, per-pair
// order and capacity as it goes.
struct TrafficResult {
  bool drained = false;
  std::uint64_t injected = 0;
  bool conserved = true;
  bool ordered = true;
  bool bounded = true;
};

TrafficResult run_traffic(const TopologyConfig& cfg, double rate, Cycle cycles,
                          std::uint64_t seed, std::vector<SerdesPlacement> serdes = {}) {
  Network net(cfg, std::move(serdes));
  const auto E = net.topology().endpoint_count();
  CounterRng rng(seed, "traffic");
  std::map<std::pair<EndpointId, EndpointId>, std::deque<std::uint64_t>> expect;
  std::vector<std::deque<Flit>> pending(E);
  TrafficResult res;
  std::uint64_t seq = 0;
  const auto mask = low_mask(cfg.flit_width);
  auto eject_all = [&] {
    for (EndpointId e = 0; e < E; ++e) {
      if (auto f = net.eject(e)) {
        auto& q = expect[{f->src, e}];
        if (q.empty() || q.front() != f->payload) res.ordered = false;
        else q.pop_front();
      }
    }
  };
  for (Cycle c = 0; c < cycles; ++c) {
    for (EndpointId e = 0; e < E; ++e) {
      if (rng.uniform(c, e) < rate) {
        Flit f = to(static_cast<EndpointId>(rng.below(c, E, e + 100000)), seq++ & mask);
        pending[e].push_back(f);
      }
      if (!pending[e].empty() && net.inject(e, pending[e].front())) {
        expect[{e, pending[e].front().dst}].push_back(pending[e].front().payload);
        pending[e].pop_front();
        ++res.injected;
      }
    }
    net.step();
    eject_all();
    if ((c & 1023) == 0 && net.count_flits() != net.in_flight()) res.conserved = false;
  }
  auto backlog = [&] {
    for (auto& q : pending)
      if (!q.empty()) return true;
    return false;
  };
  for (Cycle c = 0; c < 400000 && (!net.idle() || backlog()); ++c) {
    for (EndpointId e = 0; e < E; ++e)
      if (!pending[e].empty() && net.inject(e, pending[e].front())) {
        expect[{e, pending[e].front().dst}].push_back(pending[e].front().payload);
        pending[e].pop_front();
        ++res.injected;
      }
    net.step();
    eject_all();
  }
  bool left = false;
  for (auto& q : pending) left |= !q.empty();
  res.drained = net.idle() && !left;
  for (auto& [k, q] : expect) res.conserved &= q.empty();
  res.conserved &= net.stats().flits_injected == net.stats().flits_ejected + net.in_flight();
  res.bounded = net.stats().max_queue_occupancy <= cfg.buffer_depth;
  return res;
}

TEST_CASE("random traffic drains with conservation, order and capacity on every topology") {
  for (auto kind : {TopologyKind::ring, TopologyKind::mesh, TopologyKind::torus,
                    TopologyKind::fat_tree}) {
    CAPTURE(to_string(kind));
    auto r = run_traffic(TopologyConfig::fitted(kind, 16), 0.1, 5000, 11);
    CHECK(r.drained);
    CHECK(r.conserved);
    CHECK(r.ordered);
    CHECK(r.bounded);
    CHECK(r.injected > 5000);
  }
}

TEST_CASE("saturating traffic still drains") {
  for (auto kind : {TopologyKind::ring, TopologyKind::mesh, TopologyKind::torus,
                    TopologyKind::fat_tree}) {
    CAPTURE(to_string(kind));
    auto r = run_traffic(TopologyConfig::fitted(kind, 16), 0.9, 2000, 5);
    CHECK(r.drained);
    CHECK(r.conserved);
    CHECK(r.ordered);
  }
}

TEST_CASE("router update order does not change the state") {
  for (auto kind : {TopologyKind::ring, TopologyKind::mesh, TopologyKind::torus,
                    TopologyKind::fat_tree}) {
    const auto cfg = TopologyConfig::fitted(kind, 16);
    Network a(cfg), b(cfg);
    std::vector<RouterId> order(a.topology().router_count());
    for (RouterId r = 0; r < order.size(); ++r) order[r] = RouterId(order.size() - 1 - r);
    std::rotate(order.begin(), order.begin() + 3, order.end());
    b.set_update_order(order);
    CounterRng rng(3, "perm");
    for (Cycle c = 0; c < 2000; ++c) {
      for (EndpointId e = 0; e < 16; ++e)
        if (rng.uniform(c, e) < 0.4) {
          Flit f = to(static_cast<EndpointId>(rng.below(c, 16, 99 + e)), c & 0xffff);
          a.inject(e, f);
          b.inject(e, f);
        }
      a.step();
      b.step();
      for (EndpointId e = 0; e < 16; ++e)
        if (rng.uniform(c, 500 + e) < 0.7) {
          a.eject(e);
          b.eject(e);
        }
      REQUIRE(a.state_digest() == b.state_digest());
    }
  }
}

TEST_CASE("cut links keep conservation and per-pair order under load") {
  for (auto kind : {TopologyKind::ring, TopologyKind::mesh, TopologyKind::torus,
                    TopologyKind::fat_tree})
    for (auto preset : {"halves", "stripes"})
      for (std::uint32_t lane : {3u, 8u}) {
        CAPTURE(to_string(kind));
        CAPTURE(std::string(preset));
        CAPTURE(lane);
        const auto cfg = TopologyConfig::fitted(kind, 16);
        Topology t(cfg);
        auto spec = preset_partition(t, preset);
        std::vector<SerdesPlacement> sp;
        for (const auto& c : cut_links(t, spec)) {
          sp.push_back({c.a, c.a_port, lane});
          sp.push_back({c.b, c.b_port, lane});
        }
        auto r = run_traffic(cfg, 0.3, 2000, 21, sp);
        CHECK(r.drained);
        CHECK(r.conserved);
        CHECK(r.ordered);
        CHECK(r.bounded);
      }
}
}
