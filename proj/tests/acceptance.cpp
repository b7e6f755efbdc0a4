// Acceptance suite: one PASS/FAIL line per criterion.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "nocmap/bits.hpp"
#include "nocmap/bmvm.hpp"
#include "nocmap/error.hpp"
#include "nocmap/harness.hpp"
#include "nocmap/ldpc.hpp"
#include "nocmap/network.hpp"
#include "nocmap/partition.hpp"
#include "nocmap/rng.hpp"
#include "nocmap/serdes.hpp"
#include "nocmap/tracker.hpp"

using namespace nocmap;
using Clock = std::chrono::steady_clock;

namespace {

// Pinned limits.
constexpr double kCrit1Seconds = 300.0;
constexpr double kCrit3Seconds = 120.0;
constexpr double kCrit8Seconds = 300.0;
constexpr std::uint32_t kCrit1Samples = 200;
constexpr std::uint32_t kCrit5Bundles = 10000;
constexpr std::uint32_t kCrit6Vectors = 1000;
constexpr Cycle kCrit8Cycles = 100000;
constexpr double kCrit8Rate = 0.1;  // flits per endpoint per cycle
constexpr double kCrit7StaticPixels = 1.0;

int failures = 0;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void report(int n, const char* what, bool ok, const std::string& detail) {
  std::printf("criterion %d: %s  %s  (%s)\n", n, ok ? "PASS" : "FAIL", what, detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

template <class F>
void guarded(int n, const char* what, F&& body) {
  try {
    body();
  } catch (const std::exception& e) {
    report(n, what, false, std::string("exception: ") + e.what());
  }
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// Bit-by-bit GF(2) product.
Gf2Vector slow_matvec(const Gf2Matrix& a, const Gf2Vector& v) {
  const auto n = a.n();
  Gf2Vector out(n);
  for (std::uint32_t r = 0; r < n; ++r) {
    bool acc = false;
    for (std::uint32_t c = 0; c < n; ++c) acc ^= a.get(r, c) && v.get(c);
    out.set(r, acc);
  }
  return out;
}

Network make_network(TopologyKind kind, std::uint32_t endpoints, bool split) {
  const auto cfg = TopologyConfig::fitted(kind, endpoints);
  if (!split) return Network(cfg);
  return partition_network(cfg, preset_partition(Topology(cfg), "halves")).network;
}

const TopologyKind kKinds[] = {TopologyKind::ring, TopologyKind::mesh, TopologyKind::torus,
                               TopologyKind::fat_tree};

void criterion1() {
  guarded(1, "BMVM oracle equivalence", [] {
    const auto t0 = Clock::now();
    std::uint64_t runs = 0, mismatches = 0, combos = 0;
    for (std::uint32_t n : {16u, 64u, 128u})
      for (std::uint32_t k : {2u, 4u, 8u})
        for (std::uint32_t f : {1u, 2u, 4u}) {
          if (n % k || (n / k) % f) continue;
          ++combos;
          const BmvmShape shape{n, k, f, 1, Checkpoints::final_only};
          const auto endpoints = std::max(shape.pe_count() + 1, 4u);
          std::vector<Network> nets;
          for (auto kind : kKinds)
            for (bool split : {false, true}) nets.push_back(make_network(kind, endpoints, split));
          for (std::uint32_t s = 0; s < kCrit1Samples; ++s) {
            const std::uint64_t seed = (std::uint64_t(n) << 40) ^ (std::uint64_t(k) << 32) ^ (std::uint64_t(f) << 24) ^ s;
            const auto a = Gf2Matrix::random(n, 0.5, seed);
            const auto v = Gf2Vector::random(n, seed);
            const auto want = slow_matvec(a, v);
            const auto bank = preprocess(a, k);
            const std::vector<Gf2Vector> vs{v};
            for (auto& net : nets) {
              const auto got = bmvm_iterate(bank, shape, vs, net);
              ++runs;
              if (got.columns.at(0).back() != want) ++mismatches;
            }
          }
        }
    const double secs = seconds_since(t0);
    report(1, "BMVM oracle equivalence", mismatches == 0 && secs < kCrit1Seconds && combos == 26,
           fmt("%u combos, %llu runs over 4 topologies x {1,2} chips, %llu mismatches, %.1f s (limit %.0f s)",
               unsigned(combos), (unsigned long long)runs, (unsigned long long)mismatches, secs, kCrit1Seconds));
  });
}

void criterion2() {
  guarded(2, "iterated products and PE counts", [] {
    const BmvmShape base{64, 8, 2, 1, Checkpoints::all};
    const auto a = Gf2Matrix::random(64, 0.5, 2024);
    const auto v = Gf2Vector::random(64, 2024);
    const auto bank = preprocess(a, 8);
    bool ok = true;
    std::string detail;
    for (std::uint32_t r : {1u, 10u, 100u}) {
      auto shape = base;
      shape.r = r;
      Network net(TopologyConfig::fitted(TopologyKind::mesh, shape.pe_count() + 1));
      const std::vector<Gf2Vector> vs{v};
      const auto got = bmvm_iterate(bank, shape, vs, net);
      Gf2Vector x = v;
      std::uint32_t bad = 0;
      const auto& cps = got.columns.at(0);
      if (cps.size() != r) ok = false;
      for (std::uint32_t i = 0; i < r && i < cps.size(); ++i) {
        x = slow_matvec(a, x);
        bad += cps[i] != x;
      }
      ok &= bad == 0;
      detail += fmt("r=%u: %u bad checkpoints, %llu cycles; ", r, bad, (unsigned long long)got.cycles);
    }
    const auto pes_small = build_bmvm_graph({64, 8, 2, 1, Checkpoints::final_only}, 5).pes.size();
    const auto pes_large = build_bmvm_graph({1024, 4, 4, 1, Checkpoints::final_only}, 65).pes.size();
    ok &= pes_small == 4 && pes_large == 64;
    detail += fmt("PEs n=64,k=8,f=2: %zu; n=1024,k=4,f=4: %zu", pes_small, pes_large);
    report(2, "iterated products and PE counts", ok, detail);
  });
}

void criterion3() {
  guarded(3, "topology trend", [] {
    const auto t0 = Clock::now();
    auto cfg = parse_config("app=bmvm\nn=256\nk=4\nf=4\nr=10\nseed=1\n");
    const auto rows = run_sweep(cfg, {kKinds[0], kKinds[1], kKinds[2], kKinds[3]});
    const double secs = seconds_since(t0);
    const auto c = [&](int i) { return rows[i].stats.cycles; };
    const bool ordered = c(0) >= c(1) && c(1) >= c(2) && c(2) >= c(3) && c(0) > c(3);
    report(3, "topology trend", ordered && secs < kCrit3Seconds,
           fmt("cycles ring %llu >= mesh %llu >= torus %llu >= fat_tree %llu, %.2f s (limit %.0f s)",
               (unsigned long long)c(0), (unsigned long long)c(1), (unsigned long long)c(2),
               (unsigned long long)c(3), secs, kCrit3Seconds));
  });
}

void criterion4() {
  guarded(4, "partition transparency", [] {
    bool ok = true;
    std::string detail;
    for (const char* app : {"bmvm", "ldpc", "track"}) {
      std::uint32_t specs = 0;
      for (auto kind : kKinds) {
        auto cfg = parse_config(std::string("app=") + app + "\n");
        cfg.topology = kind;
        const auto mono = run_experiment(cfg);
        for (const char* part : {"halves", "quadrants", "stripes", "router0"}) {
          cfg.partition = part;
          const auto p = run_experiment(cfg);
          ++specs;
          if (p.stats.result_digest != mono.stats.result_digest || p.stats.cycles < mono.stats.cycles) {
            ok = false;
            detail += fmt("%s/%s/%s differs; ", app, std::string(to_string(kind)).c_str(), part);
          }
        }
      }
      ok &= specs >= 3;
      detail += fmt("%s: %u partitioned runs; ", app, specs);
    }
    report(4, "partition transparency", ok, detail + "presets halves, quadrants, stripes, router0 on 4 topologies");
  });
}

void criterion5() {
  guarded(5, "quasi-SERDES round trip and latency", [] {
    std::uint64_t trips = 0, bad_trips = 0;
    for (std::uint32_t bw = 1; bw <= 64; ++bw)
      for (std::uint32_t lw = 1; lw <= bw; ++lw) {
        const CounterRng rng(5, "bundles", (std::uint64_t(bw) << 8) | lw);
        const auto beats_expected = (bw + lw - 1) / lw;
        for (std::uint32_t i = 0; i < kCrit5Bundles; ++i) {
          const Bits b(bw, bw == 64 ? rng.bits(i) : rng.bits(i) & ((1ULL << bw) - 1));
          const auto beats = serdes_serialize(b, lw);
          ++trips;
          if (beats.size() != beats_expected || serdes_deserialize(beats, bw, lw) != b) ++bad_trips;
        }
      }
    std::uint64_t probes = 0, bad_latency = 0;
    for (std::uint32_t fw = 1; fw <= 64; ++fw) {
      TopologyConfig cfg = TopologyConfig::fitted(TopologyKind::mesh, 2);
      cfg.flit_width = fw;
      std::uint32_t bundle = 0;
      {
        Network probe(cfg, {{0, ports::east, 1}});
        bundle = probe.serdes_links().at(0).link->bundle_width();
      }
      for (std::uint32_t lw = 1; lw <= std::min(bundle, 64u); ++lw) {  // lanes cap at 64
        Network plain(cfg);
        Network cut(cfg, {{0, ports::east, lw}, {1, ports::west, lw}});
        Flit f;
        f.dst = 1;
        f.payload = fw == 64 ? ~0ULL : (1ULL << fw) - 1;
        plain.inject(0, f);
        cut.inject(0, f);
        Cycle ta = 0, tb = 0;
        for (int c = 0; c < 400 && !(ta && tb); ++c) {
          plain.step();
          cut.step();
          if (!ta && plain.eject(1)) ta = plain.cycle();
          if (!tb && cut.eject(1)) tb = cut.cycle();
        }
        ++probes;
        const Cycle expected = (bundle + lw - 1) / lw + 1;
        if (!ta || !tb || tb - ta != expected) ++bad_latency;
      }
    }
    report(5, "quasi-SERDES round trip and latency", bad_trips == 0 && bad_latency == 0,
           fmt("%llu round trips, %llu wrong; %llu (flit width, lane) latency probes, %llu not ceil(W/L)+1",
               (unsigned long long)trips, (unsigned long long)bad_trips, (unsigned long long)probes,
               (unsigned long long)bad_latency));
  });
}

void criterion6() {
  guarded(6, "LDPC decoding", [] {
    const auto code = fano_parity_matrix();
    bool structure = gf2_rank(code) == 4;
    for (std::uint32_t c = 0; c < 7; ++c) {
      int w = 0;
      for (std::uint32_t b = 0; b < 7; ++b) w += code.h(c, b);
      structure &= w == 3;
    }
    for (std::uint32_t b = 0; b < 7; ++b) {
      int w = 0;
      for (std::uint32_t c = 0; c < 7; ++c) w += code.h(c, b);
      structure &= w == 3;
    }
    for (std::uint32_t x = 0; x < 7; ++x)
      for (std::uint32_t y = x + 1; y < 7; ++y) {
        int common = 0;
        for (std::uint32_t b = 0; b < 7; ++b) common += code.h(x, b) && code.h(y, b);
        structure &= common == 1;
      }
    const auto words = enumerate_codewords(code);
    std::uint32_t noiseless_ok = 0;
    for (const auto& cw : words) {
      std::vector<Llr> llr(7);
      for (int b = 0; b < 7; ++b) llr[b] = cw[b] ? -10 : 10;
      Network net(TopologyConfig::fitted(TopologyKind::mesh, 16));
      noiseless_ok += decode(code, llr, {10, true, false}).bits == cw &&
                      decode_on_noc(code, llr, {10, true, false}, net).bits == cw;
    }
    std::uint32_t mismatches = 0, runs = 0;
    Network net(TopologyConfig::fitted(TopologyKind::mesh, 16));
    const CounterRng rng(6, "llr");
    for (bool sm : {true, false})
      for (std::uint32_t i = 0; i < kCrit6Vectors; ++i) {
        std::vector<Llr> llr(7);
        for (std::uint32_t b = 0; b < 7; ++b) llr[b] = static_cast<Llr>(rng.bits(i, b) & 0xff);
        const DecodeOptions o{10, sm, false};
        ++runs;
        mismatches += decode_on_noc(code, llr, o, net).bits != decode(code, llr, o).bits;
      }
    report(6, "LDPC decoding", structure && words.size() == 8 && noiseless_ok == 8 && mismatches == 0,
           fmt("Fano checks %s; %zu codewords, %u decode to themselves; %u NoC decodes, %u mismatches",
               structure ? "ok" : "FAILED", words.size(), noiseless_ok, runs, mismatches));
  });
}

void criterion7() {
  guarded(7, "particle-filter tracking", [] {
    VideoParams vp;  // 64x64, 30 frames, speed 2 px/frame, half-width 5
    const auto moving = generate_video(vp);
    std::uint32_t equal = 0, runs = 0;
    double worst_mean = 0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      TrackerParams p;  // 16 particles on 16 workers
      p.seed = seed;
      const auto init = to_fixed(vp.x0, vp.y0);
      const auto ref = track_reference(moving.frames, init, p);
      Network net(TopologyConfig::fitted(TopologyKind::mesh, p.workers + 1));
      const auto noc = track_on_noc(moving.frames, init, p, net);
      ++runs;
      equal += noc.centers == ref.centers && ref.centers.size() == 30;
      double sum = 0;
      for (std::size_t k = 0; k < 30; ++k)
        sum += std::hypot(from_fixed(noc.centers[k].x) - moving.truth[k].first,
                          from_fixed(noc.centers[k].y) - moving.truth[k].second);
      worst_mean = std::max(worst_mean, sum / 30);
    }
    VideoParams sp = vp;
    sp.vx = sp.vy = 0;
    sp.x0 = 31;
    sp.y0 = 30;
    const auto still = generate_video(sp);
    double worst_static = 0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      TrackerParams p;
      p.particles = 64;  // 4 per worker
      p.seed = seed;
      Network net(TopologyConfig::fitted(TopologyKind::mesh, p.workers + 1));
      const auto noc = track_on_noc(still.frames, to_fixed(31, 30), p, net);
      for (const auto& c : noc.centers)
        worst_static = std::max(worst_static, std::hypot(from_fixed(c.x) - 31, from_fixed(c.y) - 30));
    }
    report(7, "particle-filter tracking",
           equal == runs && worst_mean < vp.square_half && worst_static < kCrit7StaticPixels,
           fmt("NoC == reference on %u/%u 30-frame runs; moving mean error %.3f px (< %u); "
               "static worst error %.3f px (< %.0f)",
               equal, runs, worst_mean, vp.square_half, worst_static, kCrit7StaticPixels));
  });
}

struct PropertyOutcome {
  bool conserved = true, ordered = true, bounded = true, deterministic = true, drained = false;
  std::uint64_t flits = 0;
};

PropertyOutcome traffic_properties(TopologyKind kind) {
  const auto cfg = TopologyConfig::fitted(kind, 16);
  Network net(cfg), shadow(cfg);
  std::vector<RouterId> order(net.topology().router_count());
  std::iota(order.begin(), order.end(), RouterId(0));
  std::reverse(order.begin(), order.end());
  std::rotate(order.begin(), order.begin() + order.size() / 3, order.end());
  shadow.set_update_order(order);

  const auto E = net.topology().endpoint_count();
  const auto vcs = cfg.effective_vc_count();
  const CounterRng rng(8, "acceptance-traffic", std::uint64_t(kind));
  const std::uint64_t mask = cfg.flit_width >= 64 ? ~0ULL : (1ULL << cfg.flit_width) - 1;
  std::vector<std::deque<Flit>> pending(E);
  std::map<std::pair<EndpointId, EndpointId>, std::deque<std::uint64_t>> expect;
  std::vector<std::int64_t> open_src(E, -1);  // packet in progress per destination
  std::uint64_t seq = 0, injected = 0, ejected = 0;
  PropertyOutcome out;

  auto inject_one = [&](EndpointId e) {
    if (pending[e].empty()) return;
    const Flit f = pending[e].front();
    const bool a = net.inject(e, f);
    const bool b = shadow.inject(e, f);
    if (a != b) out.deterministic = false;
    if (a) {
      expect[{e, f.dst}].push_back(f.payload);
      pending[e].pop_front();
      ++injected;
    }
  };
  auto eject_all = [&] {
    for (EndpointId e = 0; e < E; ++e) {
      auto f = net.eject(e);
      auto g = shadow.eject(e);
      if (f.has_value() != g.has_value() || (f && !f->same_wire(*g))) out.deterministic = false;
      if (!f) continue;
      ++ejected;
      auto& q = expect[{f->src, e}];
      if (q.empty() || q.front() != f->payload) out.ordered = false;
      else q.pop_front();
      if (open_src[e] >= 0 && open_src[e] != std::int64_t(f->src)) out.ordered = false;
      open_src[e] = f->tail ? -1 : std::int64_t(f->src);
    }
  };
  auto check_state = [&](Cycle c) {
    if (injected != ejected + net.in_flight()) out.conserved = false;
    if (net.state_digest() != shadow.state_digest()) out.deterministic = false;
    if ((c & 63) == 0) {
      if (net.count_flits() != net.in_flight()) out.conserved = false;
      for (RouterId r = 0; r < net.topology().router_count(); ++r)
        for (PortId p = 0; p < net.topology().port_count(); ++p)
          for (std::uint32_t v = 0; v < vcs; ++v)
            if (net.queue_occupancy(r, p, v) > cfg.buffer_depth) out.bounded = false;
      for (EndpointId e = 0; e < E; ++e)
        if (net.eject_queue_occupancy(e) > cfg.buffer_depth) out.bounded = false;
    }
  };

  const double packet_rate = kCrit8Rate / 2.0;  // mean packet length 2 flits
  for (Cycle c = 0; c < kCrit8Cycles; ++c) {
    for (EndpointId e = 0; e < E; ++e) {
      if (rng.uniform(c, e) < packet_rate) {
        const auto dst = static_cast<EndpointId>(rng.below(c, E, 1000 + e));
        const auto len = 1 + std::uint32_t(rng.below(c, 3, 2000 + e));
        for (std::uint32_t i = 0; i < len; ++i) {
          Flit f;
          f.dst = dst;
          f.head = i == 0;
          f.tail = i + 1 == len;
          f.payload = seq++ & mask;
          pending[e].push_back(f);
        }
      }
      inject_one(e);
    }
    net.step();
    shadow.step();
    eject_all();
    check_state(c);
  }
  auto backlog = [&] {
    for (auto& q : pending)
      if (!q.empty()) return true;
    return false;
  };
  for (Cycle c = 0; c < kCrit8Cycles && (!net.idle() || backlog()); ++c) {
    for (EndpointId e = 0; e < E; ++e) inject_one(e);
    net.step();
    shadow.step();
    eject_all();
    check_state(c);
  }
  out.drained = net.idle() && shadow.idle() && !backlog();
  for (auto& [k, q] : expect) out.conserved &= q.empty();
  out.conserved &= injected == ejected && net.stats().flits_injected == net.stats().flits_ejected;
  out.bounded &= net.stats().max_queue_occupancy <= cfg.buffer_depth;
  out.flits = injected;
  return out;
}

void criterion8() {
  guarded(8, "simulator properties", [] {
    const auto t0 = Clock::now();
    bool ok = true;
    std::string detail;
    for (auto kind : kKinds) {
      const auto r = traffic_properties(kind);
      const bool good = r.conserved && r.ordered && r.bounded && r.deterministic && r.drained;
      ok &= good;
      detail += fmt("%s: %llu flits%s%s%s%s%s; ", std::string(to_string(kind)).c_str(),
                    (unsigned long long)r.flits, r.conserved ? "" : " NOT-CONSERVED",
                    r.ordered ? "" : " OUT-OF-ORDER", r.bounded ? "" : " OVERFULL",
                    r.deterministic ? "" : " ORDER-DEPENDENT", r.drained ? "" : " NOT-DRAINED");
    }
    const double secs = seconds_since(t0);
    report(8, "simulator properties", ok && secs < kCrit8Seconds,
           detail + fmt("rate %.2f for %llu cycles, %.1f s (limit %.0f s)", kCrit8Rate,
                        (unsigned long long)kCrit8Cycles, secs, kCrit8Seconds));
  });
}

void criterion9() {
  guarded(9, "determinism", [] {
    const std::string configs[] = {
        "app=bmvm\nn=64\nk=8\nf=2\nseed=1\n",
        "app=bmvm\nn=128\nk=4\nf=2\nr=5\ncheckpoints=all\ncolumns=3\ntopology=torus\npartition=quadrants\nseed=9\n",
        "app=ldpc\nblocks=20\nsign_mode=false\ntopology=ring\nseed=4\n",
        "app=ldpc\nblocks=20\npartition=halves\nseed=5\n",
        "app=track\nnoise=15\nseed=3\n",
        "app=track\ntopology=fat_tree\npartition=stripes\nparticles=48\nseed=8\n",
    };
    const auto dir = std::filesystem::temp_directory_path() / "nocmap_acceptance";
    std::filesystem::create_directories(dir);
    std::uint32_t same = 0, total = 0;
    for (const auto& text : configs) {
      std::string files[2];
      ExperimentResult res[2];
      for (int i = 0; i < 2; ++i) {
        auto cfg = parse_config(text);
        cfg.out = (dir / fmt("out%d.csv", i)).string();
        cfg.stats_out = (dir / fmt("stats%d.csv", i)).string();
        std::filesystem::remove(cfg.stats_out);
        res[i] = run_experiment(cfg);
        write_outputs(cfg, {res[i]});
        files[i] = read_text_file(cfg.out) + "|" + read_text_file(cfg.stats_out);
      }
      ++total;
      same += res[0].output == res[1].output && res[0].stats.csv_row() == res[1].stats.csv_row() &&
              files[0] == files[1] && !files[0].empty();
    }
    std::filesystem::remove_all(dir);
    auto sweep_cfg = parse_config("app=ldpc\nblocks=5\nseed=2\n");
    const std::vector<TopologyKind> kinds(std::begin(kKinds), std::end(kKinds));
    const auto s1 = run_sweep(sweep_cfg, kinds), s2 = run_sweep(sweep_cfg, kinds);
    bool sweep_same = s1.size() == s2.size();
    for (std::size_t i = 0; sweep_same && i < s1.size(); ++i)
      sweep_same = s1[i].stats.csv_row() == s2[i].stats.csv_row() && s1[i].output == s2[i].output;
    report(9, "determinism", same == total && sweep_same,
           fmt("%u/%u experiments byte-identical on rerun (output, stats row, written files); sweep %s", same, total,
               sweep_same ? "identical" : "DIFFERS"));
  });
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::function<void()>> all = {criterion1, criterion2, criterion3, criterion4, criterion5,
                                            criterion6, criterion7, criterion8, criterion9};
  if (argc > 1) {
    for (int i = 1; i < argc; ++i) {
      const int n = std::atoi(argv[i]);
      if (n < 1 || n > 9) {
        std::fprintf(stderr, "usage: %s [criterion numbers 1-9]\n", argv[0]);
        return 2;
      }
      all[n - 1]();
    }
  } else {
    for (auto& c : all) c();
  }
  std::printf("acceptance: %d failing criteria\n", failures);
  return failures == 0 ? 0 : 1;
}
