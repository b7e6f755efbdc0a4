#include <doctest.h>

#include <set>

#include "nocmap/allocator.hpp"

using namespace nocmap;

TEST_SUITE("allocator") {
TEST_CASE("single request is granted") {
  RoundRobinState rr(5, 1);
  std::vector<AllocRequest> req{{2, 0, 4}};
  auto g = allocate(rr, req);
  REQUIRE(g.size() == 1);
  CHECK(g[0] == AllocGrant{2, 0, 4});
  CHECK(rr.output_ptr[4] == 3);
}

TEST_CASE("two inputs on one output alternate") {
  RoundRobinState rr(5, 1);
  std::vector<AllocRequest> req{{1, 0, 3}, {2, 0, 3}};
  std::vector<std::uint32_t> winners;
  for (int i = 0; i < 6; ++i) winners.push_back(allocate(rr, req).at(0).input);
  CHECK(winners == std::vector<std::uint32_t>{1, 2, 1, 2, 1, 2});
}

TEST_CASE("no requests: no grants and pointers unchanged") {
  RoundRobinState rr(5, 2);
  rr.output_ptr[1] = 3;
  const auto before = rr;
  CHECK(allocate(rr, {}).empty());
  CHECK(rr == before);
}

TEST_CASE("at most one grant per input and per output") {
  RoundRobinState rr(4, 2);
  std::vector<AllocRequest> req{{0, 0, 1}, {0, 1, 2}, {1, 0, 1}, {2, 1, 1}, {3, 0, 2}};
  for (int i = 0; i < 10; ++i) {
    auto g = allocate(rr, req);
    std::set<std::uint32_t> ins, outs;
    for (auto& x : g) {
      CHECK(ins.insert(x.input).second);
      CHECK(outs.insert(x.output).second);
    }
  }
}

TEST_CASE("input stage rotates over VCs") {
  RoundRobinState rr(2, 2);
  std::vector<AllocRequest> req{{0, 0, 1}, {0, 1, 1}};
  CHECK(allocate(rr, req).at(0).vc == 0);
  CHECK(allocate(rr, req).at(0).vc == 1);
  CHECK(allocate(rr, req).at(0).vc == 0);
}

TEST_CASE("persistent 2-way contention: grant counts differ by at most 1 in any window") {
  RoundRobinState rr(5, 2);
  std::vector<AllocRequest> req{{0, 1, 2}, {4, 0, 2}};
  std::vector<std::uint32_t> w;
  for (int i = 0; i < 200; ++i) w.push_back(allocate(rr, req).at(0).input);
  for (std::size_t a = 0; a < w.size(); ++a) {
    int c0 = 0, c4 = 0;
    for (std::size_t b = a; b < w.size(); ++b) {
      (w[b] == 0 ? c0 : c4)++;
      CHECK(std::abs(c0 - c4) <= 1);
    }
  }
}
}
