#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "nocmap/error.hpp"
#include "nocmap/pe.hpp"
#include "nocmap/rng.hpp"
#include "nocmap/runtime.hpp"

using namespace nocmap;

namespace {

CollectorSpec gather(std::vector<std::uint32_t> expected, std::uint32_t width = 8) {
  CollectorSpec s;
  s.mode = CollectorMode::gather;
  for (std::uint32_t i = 0; i < expected.size(); ++i) s.slots.push_back({i, expected[i], width});
  return s;
}

CollectorSpec reduce_xor(std::uint32_t slots, std::uint32_t expected, std::uint32_t width = 8) {
  CollectorSpec s;
  s.mode = CollectorMode::reduce;
  for (std::uint32_t i = 0; i < slots; ++i) s.slots.push_back({i, expected, width, FoldOp::bit_xor});
  return s;
}

PEDescriptor identity_pe(CollectorSpec spec) {
  PEDescriptor pe;
  pe.name = "id";
  pe.collector = std::move(spec);
  pe.output_widths = {8};
  pe.processor = [](const Inputs& in) { return Results{in.at(0).at(0)}; };
  return pe;
}

}  // namespace

TEST_SUITE("pe") {
TEST_CASE("gather: third of three words sets start") {
  CollectorState st(gather({3}));
  st.accept({false, 0, 1});
  st.accept({false, 0, 2});
  CHECK_FALSE(st.start_pending());
  st.accept({false, 0, 3});
  CHECK(st.start_pending());
}

TEST_CASE("reduce: XOR identity leaves the accumulator, counts the arrival") {
  CollectorState st(reduce_xor(1, 2));
  st.accept({false, 0, 0x5a});
  st.accept({false, 0, 0x00});
  CHECK(st.start_pending());
  CHECK(st.take_inputs().at(0).at(0) == 0x5a);
}

TEST_CASE("delivery order of one round does not change processor inputs") {
  // slot 0 expects 2, slot 1 expects 1
  std::vector<MessageEnvelope> msgs{{false, 0, 11}, {false, 1, 22}, {false, 0, 33}};
  std::vector<int> perm{0, 1, 2};
  std::optional<Inputs> first;
  int n = 0;
  do {
    CollectorState st(gather({2, 1}));
    for (int i : perm) st.accept(msgs[i]);
    REQUIRE(st.start_pending());
    auto in = st.take_inputs();
    // per-slot order is arrival order of that slot; words 11 and 33 share a slot
    std::sort(in[0].begin(), in[0].end());
    if (!first) first = in;
    CHECK(in == *first);
    ++n;
  } while (std::next_permutation(perm.begin(), perm.end()));
  CHECK(n == 6);
  // reduce slots are fully order-free
  std::optional<Inputs> red;
  perm = {0, 1, 2};
  do {
    CollectorSpec sp = reduce_xor(2, 1);
    sp.slots[0].expected_count = 2;
    CollectorState s2(sp);
    for (int i : perm) s2.accept(msgs[i]);
    auto in = s2.take_inputs();
    if (!red) red = in;
    CHECK(in == *red);
  } while (std::next_permutation(perm.begin(), perm.end()));
}

TEST_CASE("unknown tag is a protocol error; overflow backpressures") {
  CollectorState st(gather({1}));
  CHECK_THROWS_AS(st.accept({false, 3, 1}), ProtocolError);
  CHECK(st.accept({false, 0, 1}) == AcceptResult::accepted);
  CHECK(st.accept({false, 0, 2}) == AcceptResult::accepted);
  CHECK(st.accept({false, 0, 3}) == AcceptResult::backpressure);
  CHECK_THROWS_AS(st.accept({false, 0, 0x100}), ValidationError);
}

TEST_CASE("identity processor returns its word and empties storage") {
  auto pe = identity_pe(gather({1}));
  CollectorState st(pe.collector);
  st.accept({false, 0, 0x77});
  auto r = fire_processor(pe, st);
  CHECK(r.at(0) == 0x77u);
  CHECK(st.empty());
  CHECK_FALSE(st.start_pending());
}

TEST_CASE("firing without start is a usage error") {
  auto pe = identity_pe(gather({1}));
  CollectorState st(pe.collector);
  CHECK_THROWS_AS(fire_processor(pe, st), UsageError);
}

TEST_CASE("reduce XOR over a, b, c gives a^b^c") {
  CollectorState st(reduce_xor(1, 3));
  for (auto w : {0x13, 0x37, 0xc4}) st.accept({false, 0, std::uint64_t(w)});
  CHECK(st.take_inputs().at(0).at(0) == std::uint64_t(0x13 ^ 0x37 ^ 0xc4));
  CHECK(st.parity());
}

TEST_CASE("two rounds queued in a gather slot fire one round at a time") {
  CollectorState st(gather({2}));
  for (auto w : {1, 2, 3, 4}) st.accept({false, 0, std::uint64_t(w)});
  CHECK(st.take_inputs().at(0) == std::vector<std::uint64_t>{1, 2});
  CHECK(st.start_pending());
  CHECK(st.take_inputs().at(0) == std::vector<std::uint64_t>{3, 4});
  CHECK_FALSE(st.start_pending());
}

TEST_CASE("persistent slot is read every firing") {
  CollectorSpec s = gather({2, 1});
  s.slots[0].persistent = true;
  CollectorState st(s);
  st.accept({false, 0, 9});
  st.accept({false, 0, 8});
  st.accept({false, 1, 1});
  CHECK(st.take_inputs() == Inputs{{9, 8}, {1}});
  st.accept({false, 1, 2});
  CHECK(st.take_inputs() == Inputs{{9, 8}, {2}});
}

TEST_CASE("parity keeps rounds apart") {
  CollectorState st(reduce_xor(1, 2));
  st.accept({false, 0, 0x01});
  st.accept({true, 0, 0x10});  // next round arrives early
  st.accept({true, 0, 0x20});
  CHECK_FALSE(st.start_pending());
  st.accept({false, 0, 0x02});
  CHECK(st.take_inputs().at(0).at(0) == 0x03);
  CHECK(st.start_pending());
  CHECK(st.take_inputs().at(0).at(0) == 0x30);
}

TEST_CASE("parity safety under random interleavings") {
  CounterRng rng(4, "parity");
  for (int trial = 0; trial < 200; ++trial) {
    // round r words from 4 sources; sources may run one round ahead
    const std::uint32_t srcs = 4, rounds = 6;
    std::vector<std::uint32_t> next(srcs, 0);
    CollectorState st(reduce_xor(1, srcs));
    std::uint32_t fired = 0;
    std::uint64_t c = 0;
    while (fired < rounds) {
      const auto s = static_cast<std::uint32_t>(rng.below(trial * 1000 + c++, srcs));
      if (next[s] < rounds && next[s] <= fired + 1) {
        const std::uint64_t w = (next[s] * 16 + s) & 0xff;
        if (st.accept({bool(next[s] & 1), 0, w}) == AcceptResult::accepted) ++next[s];
      }
      if (st.start_pending()) {
        const auto got = st.take_inputs().at(0).at(0);
        std::uint64_t want = 0;
        for (std::uint32_t k = 0; k < srcs; ++k) want ^= (fired * 16 + k) & 0xff;
        CHECK(got == want);
        ++fired;
      }
    }
  }
}

TEST_CASE("fold operators are commutative and associative") {
  CounterRng rng(2, "fold");
  for (auto op : {FoldOp::bit_xor, FoldOp::bit_or, FoldOp::bit_and, FoldOp::add})
    for (std::uint64_t i = 0; i < 500; ++i) {
      const std::uint32_t w = 1 + std::uint32_t(rng.below(i, 64, 9));
      const auto m = low_mask(w);
      const auto a = rng.bits(i, 1) & m, b = rng.bits(i, 2) & m, c = rng.bits(i, 3) & m;
      CHECK(fold(op, a, b, w) == fold(op, b, a, w));
      CHECK(fold(op, fold(op, a, b, w), c, w) == fold(op, a, fold(op, b, c, w), w));
      CHECK(fold(op, a, fold_identity(op, w), w) == a);
    }
}

TEST_CASE("distribute: an 8-bit word in a 16-bit flit is one packet") {
  auto pe = identity_pe(gather({1}));
  pe.table = {{0, 5, 0}};
  auto flits = distribute(pe, {0xab}, {16, 1});
  REQUIRE(flits.size() == 1);
  CHECK(flits[0].head);
  CHECK(flits[0].tail);
  CHECK(flits[0].dst == 5);
}

TEST_CASE("distribute: three table entries give three packets") {
  PEDescriptor pe;
  pe.name = "bit";
  pe.collector = gather({1});
  pe.output_widths = {8, 8, 8};
  pe.processor = [](const Inputs&) { return Results{1, 2, 3}; };
  pe.table = {{0, 7, 0}, {1, 8, 1}, {2, 9, 2}};
  CHECK(distribute(pe, {1, 2, 3}, {16, 3}).size() == 3);
}

TEST_CASE("30-bit word over 16-bit flits with a 5-bit tag: 3 fragments, MSB first") {
  EnvelopeLayout lay{16, 5};
  CHECK(lay.data_bits() == 10);
  const std::uint64_t w = 0x2abcdef1 & low_mask(30);
  auto frags = encode_fragments(lay, {true, 17, w}, 30);
  REQUIRE(frags.size() == 3);
  CHECK((frags[0] & 0x3ff) == (w >> 20));
  CHECK((frags[2] & 0x3ff) == (w & 0x3ff));
  CHECK((frags[0] >> 15) == 1);
  CHECK(((frags[0] >> 10) & 0x1f) == 17);
  EnvelopeAssembler as(lay);
  std::optional<MessageEnvelope> env;
  for (std::size_t i = 0; i < 3; ++i) {
    Flit f;
    f.head = i == 0;
    f.tail = i == 2;
    f.payload = frags[i];
    env = as.push(f);
  }
  REQUIRE(env);
  CHECK(env->data == w);
  CHECK(env->tag == 17);
  CHECK(env->parity);
}

TEST_CASE("result wider than its declared width is a validation error") {
  auto pe = identity_pe(gather({1}));
  pe.table = {{0, 1, 0}};
  CHECK_THROWS_AS(distribute(pe, {0x1ff}, {16, 1}), ValidationError);
}

TEST_CASE("graph dump lists slots and destinations") {
  auto pe = identity_pe(gather({3}));
  pe.table = {{0, 4, 2}};
  const auto s = describe_graph({pe});
  CHECK(s.find("slot 0: expects 3") != std::string::npos);
  CHECK(s.find("-> endpoint 4 slot 2") != std::string::npos);
}
}

TEST_SUITE("runtime") {
TEST_CASE("ping pong between two PEs and a host over the mesh") {
  Network net(TopologyConfig::fitted(TopologyKind::mesh, 4));
  Runtime rt(net);
  // host at 0 sends x to PE at 3; PE adds one and sends to PE at 1 (and to
  // itself, via loopback, as a counter); PE at 1 doubles and reports to host.
  PEDescriptor a;
  a.name = "inc";
  a.endpoint = 3;
  a.collector = gather({1}, 12);
  a.output_widths = {12};
  a.processor = [](const Inputs& in) { return Results{in[0][0] + 1}; };
  a.table = {{0, 1, 0}};
  PEDescriptor b;
  b.name = "dbl";
  b.endpoint = 1;
  b.collector = gather({1}, 12);
  b.output_widths = {12};
  b.processor = [](const Inputs& in) { return Results{in[0][0] * 2}; };
  b.table = {{0, 0, 0}};
  rt.add(3, std::make_unique<PeAgent>(a));
  rt.add(1, std::make_unique<PeAgent>(b));
  CollectorSpec hs = gather({1}, 12);
  auto& host = rt.emplace(0, std::make_unique<HostAgent>(
                                 "host", hs, std::vector<OutgoingMessage>{{3, {false, 0, 20}, 12}}));
  std::vector<SendEvent> sends;
  rt.on_send([&](const SendEvent& e) { sends.push_back(e); });
  auto res = rt.run();
  REQUIRE(host.finished());
  CHECK(host.collected().at(0).at(0).at(0) == 42);
  CHECK(sends.size() == 3);
  CHECK(res.cycles() > 10);
  CHECK(net.idle());
}

TEST_CASE("multi-fragment words and loopback") {
  auto cfg = TopologyConfig::fitted(TopologyKind::ring, 3);
  Network net(cfg);
  Runtime rt(net);
  PEDescriptor p;
  p.name = "echo";
  p.endpoint = 2;
  p.collector = gather({1}, 40);
  p.output_widths = {40, 40};
  p.processor = [](const Inputs& in) { return Results{in[0][0] ^ 0xff00ff00ffULL, std::nullopt}; };
  p.table = {{0, 0, 1}, {1, 2, 0}};
  rt.add(2, std::make_unique<PeAgent>(p));
  CollectorSpec hs;
  hs.slots = {{1, 1, 40}};
  auto& host = rt.emplace(0, std::make_unique<HostAgent>(
                                 "host", hs,
                                 std::vector<OutgoingMessage>{{2, {false, 0, 0x123456789aULL}, 40}}));
  rt.run();
  CHECK(host.collected().at(0).at(0).at(0) == (0x123456789aULL ^ 0xff00ff00ffULL));
  CHECK(net.stats().flits_injected == 2 * EnvelopeLayout{16, 1}.fragments(40));
}

TEST_CASE("a message nobody consumes is reported as a stall") {
  Network net(TopologyConfig::fitted(TopologyKind::mesh, 4));
  Runtime rt(net);
  CollectorSpec hs = gather({2});
  rt.add(0, std::make_unique<HostAgent>("host", hs, std::vector<OutgoingMessage>{{0, {false, 0, 1}, 8}}));
  RunOptions o;
  o.stall_limit = 100;
  CHECK_THROWS_AS(rt.run(o), RuntimeError);
}

TEST_CASE("overlapping tags at one endpoint are rejected") {
  Network net(TopologyConfig::fitted(TopologyKind::mesh, 4));
  Runtime rt(net);
  rt.add(0, std::make_unique<HostAgent>("a", gather({1}), std::vector<OutgoingMessage>{}));
  CHECK_THROWS_AS(rt.add(0, std::make_unique<HostAgent>("b", gather({1}), std::vector<OutgoingMessage>{})),
                  ConfigError);
}
}
