#include "nocmap/ldpc.hpp"

#include <algorithm>
#include <cstdlib>

#include "nocmap/error.hpp"

namespace nocmap {

Llr saturate_llr(int v) noexcept { return static_cast<Llr>(std::clamp(v, -128, 127)); }

bool LdpcCode::h(std::uint32_t check, std::uint32_t bit) const {
  const auto& c = checks.at(check);
  return std::find(c.begin(), c.end(), bit) != c.end();
}

bool LdpcCode::satisfied(std::span<const std::uint8_t> bits) const {
  for (const auto& c : checks) {
    std::uint8_t p = 0;
    for (auto b : c) p ^= bits[b];
    if (p) return false;
  }
  return true;
}

LdpcCode fano_parity_matrix() {
  LdpcCode code;
  code.n = 7;
  // lines {1,2,3},{1,4,5},{1,6,7},{2,4,6},{2,5,7},{3,4,7},{3,5,6}
  code.checks = {{0, 1, 2}, {0, 3, 4}, {0, 5, 6}, {1, 3, 5}, {1, 4, 6}, {2, 3, 6}, {2, 4, 5}};
  code.bit_checks.assign(code.n, {});
  for (std::uint32_t c = 0; c < code.m(); ++c)
    for (auto b : code.checks[c]) code.bit_checks[b].push_back(c);
  return code;
}

std::uint32_t gf2_rank(const LdpcCode& code) {
  std::vector<std::uint64_t> rows;
  for (const auto& c : code.checks) {
    std::uint64_t r = 0;
    for (auto b : c) r |= 1ULL << b;
    rows.push_back(r);
  }
  std::uint32_t rank = 0;
  for (std::uint32_t col = 0; col < code.n && rank < rows.size(); ++col) {
    auto it = std::find_if(rows.begin() + rank, rows.end(), [&](auto r) { return (r >> col) & 1; });
    if (it == rows.end()) continue;
    std::swap(*it, rows[rank]);
    for (std::size_t i = 0; i < rows.size(); ++i)
      if (i != rank && ((rows[i] >> col) & 1)) rows[i] ^= rows[rank];
    ++rank;
  }
  return rank;
}

std::vector<std::vector<std::uint8_t>> enumerate_codewords(const LdpcCode& code) {
  if (code.n > 24) throw ConfigError("codeword enumeration is limited to 24 bits");
  std::vector<std::vector<std::uint8_t>> out;
  std::vector<std::uint8_t> w(code.n);
  for (std::uint32_t x = 0; x < (1u << code.n); ++x) {
    for (std::uint32_t b = 0; b < code.n; ++b) w[b] = (x >> b) & 1;
    if (code.satisfied(w)) out.push_back(w);
  }
  return out;
}

std::array<Llr, 3> check_node_update(Llr u1, Llr u2, Llr u3, bool sign_mode) {
  const std::array<int, 3> u{u1, u2, u3};
  std::array<Llr, 3> v{};
  for (int i = 0; i < 3; ++i) {
    const int a = u[(i + 1) % 3], b = u[(i + 2) % 3];
    if (!sign_mode) {
      v[i] = static_cast<Llr>(std::min(a, b));
    } else {
      const int mag = std::min(std::abs(a), std::abs(b));
      const bool neg = (a < 0) != (b < 0);
      v[i] = saturate_llr(neg ? -mag : mag);
    }
  }
  return v;
}

BitNodeOut bit_node_update(Llr u0, Llr v1, Llr v2, Llr v3) {
  BitNodeOut o;
  o.sum = saturate_llr(int(u0) + v1 + v2 + v3);
  o.u = {saturate_llr(int(o.sum) - v1), saturate_llr(int(o.sum) - v2), saturate_llr(int(o.sum) - v3)};
  return o;
}

namespace {

void check_degrees(const LdpcCode& code) {
  for (const auto& c : code.checks)
    if (c.size() != 3) throw ConfigError("check nodes must have degree 3");
  for (const auto& b : code.bit_checks)
    if (b.size() != 3) throw ConfigError("bit nodes must have degree 3");
}

// position of `x` in `v`
std::uint32_t slot_of(const std::vector<std::uint32_t>& v, std::uint32_t x) {
  return static_cast<std::uint32_t>(std::find(v.begin(), v.end(), x) - v.begin());
}

}  // namespace

DecodeResult decode(const LdpcCode& code, std::span<const Llr> llr, const DecodeOptions& opts) {
  check_degrees(code);
  if (llr.size() != code.n)
    throw ValidationError("expected " + std::to_string(code.n) + " LLRs, got " + std::to_string(llr.size()));
  if (opts.iterations < 1) throw ConfigError("iterations must be >= 1");
  std::vector<std::vector<Llr>> u(code.n), v(code.m());
  for (std::uint32_t b = 0; b < code.n; ++b) u[b].assign(3, llr[b]);
  DecodeResult res;
  res.sum.assign(code.n, 0);
  for (std::uint32_t it = 0; it < opts.iterations; ++it) {
    for (std::uint32_t c = 0; c < code.m(); ++c) {
      std::array<Llr, 3> in{};
      for (int s = 0; s < 3; ++s) {
        const auto b = code.checks[c][s];
        in[s] = u[b][slot_of(code.bit_checks[b], c)];
      }
      const auto out = check_node_update(in[0], in[1], in[2], opts.sign_mode);
      v[c].assign(out.begin(), out.end());
    }
    for (std::uint32_t b = 0; b < code.n; ++b) {
      std::array<Llr, 3> in{};
      for (int s = 0; s < 3; ++s) {
        const auto c = code.bit_checks[b][s];
        in[s] = v[c][slot_of(code.checks[c], b)];
      }
      const auto o = bit_node_update(llr[b], in[0], in[1], in[2]);
      res.sum[b] = o.sum;
      u[b].assign(o.u.begin(), o.u.end());
    }
    res.trace.push_back({u, v, res.sum});
    res.iterations = it + 1;
    res.bits.resize(code.n);
    for (std::uint32_t b = 0; b < code.n; ++b) res.bits[b] = hard_decision(res.sum[b]);
    if (opts.early_exit && code.satisfied(res.bits)) break;
  }
  return res;
}

namespace {
constexpr std::uint32_t state_width = 24;  // u0 (8) | iterations done (16)
}

LdpcGraph build_ldpc_noc(const LdpcCode& code, std::uint32_t endpoint_count,
                         std::span<const Llr> llr, const DecodeOptions& opts) {
  check_degrees(code);
  if (opts.iterations < 1 || opts.iterations > 65535) throw ConfigError("iterations must be in [1, 65535]");
  if (opts.early_exit) throw ConfigError("early exit is not available on the NoC decoder");
  if (!llr.empty() && llr.size() != code.n) throw ValidationError("LLR count does not match the code");
  const std::uint32_t used = code.n + code.m();
  if (endpoint_count < used)
    throw ConfigError("LDPC needs " + std::to_string(used) + " endpoints, topology has " +
                      std::to_string(endpoint_count));
  LdpcGraph g;
  if (endpoint_count > used) {
    g.host = used;
    g.host_tag_base = 0;
  } else {
    g.host = 0;
    g.host_tag_base = 4;
  }
  const std::uint32_t iters = opts.iterations;
  const bool sign_mode = opts.sign_mode;
  for (std::uint32_t b = 0; b < code.n; ++b) {
    PEDescriptor pe;
    pe.name = "bit" + std::to_string(b);
    pe.endpoint = b;
    pe.collector.mode = CollectorMode::gather;
    for (std::uint32_t s = 0; s < 3; ++s) pe.collector.slots.push_back({s, 1, 8});
    pe.collector.slots.push_back({3, 1, state_width});
    pe.output_widths = {8, 8, 8, state_width, 1};
    for (std::uint32_t s = 0; s < 3; ++s) {
      const auto c = code.bit_checks[b][s];
      pe.table.push_back({s, code.n + c, slot_of(code.checks[c], b)});
    }
    pe.table.push_back({3, b, 3});
    pe.table.push_back({4, g.host, g.host_tag_base + b});
    pe.processor = [iters](const Inputs& in) {
      const auto state = in[3][0];
      const auto u0 = static_cast<Llr>(static_cast<std::uint8_t>(state >> 16));
      const auto done = static_cast<std::uint32_t>(state & 0xffff) + 1;
      const auto o = bit_node_update(u0, static_cast<Llr>(in[0][0]), static_cast<Llr>(in[1][0]),
                                     static_cast<Llr>(in[2][0]));
      Results r(5);
      if (done == iters) {
        r[4] = hard_decision(o.sum);
      } else {
        for (int s = 0; s < 3; ++s) r[s] = static_cast<std::uint8_t>(o.u[s]);
        r[3] = (state & 0xff0000) | done;
      }
      return r;
    };
    g.pes.push_back(std::move(pe));
  }
  for (std::uint32_t c = 0; c < code.m(); ++c) {
    PEDescriptor pe;
    pe.name = "check" + std::to_string(c);
    pe.endpoint = code.n + c;
    pe.collector.mode = CollectorMode::gather;
    for (std::uint32_t s = 0; s < 3; ++s) pe.collector.slots.push_back({s, 1, 8});
    pe.output_widths = {8, 8, 8};
    for (std::uint32_t s = 0; s < 3; ++s) {
      const auto b = code.checks[c][s];
      pe.table.push_back({s, b, slot_of(code.bit_checks[b], c)});
    }
    pe.processor = [sign_mode](const Inputs& in) {
      const auto v = check_node_update(static_cast<Llr>(in[0][0]), static_cast<Llr>(in[1][0]),
                                       static_cast<Llr>(in[2][0]), sign_mode);
      return Results{static_cast<std::uint8_t>(v[0]), static_cast<std::uint8_t>(v[1]),
                     static_cast<std::uint8_t>(v[2])};
    };
    g.pes.push_back(std::move(pe));
  }
  for (std::uint32_t b = 0; b < code.n; ++b) g.host_spec.slots.push_back({g.host_tag_base + b, 1, 1});
  if (!llr.empty()) {
    // first-iteration bit-to-check messages are the channel LLRs
    for (std::uint32_t c = 0; c < code.m(); ++c)
      for (std::uint32_t s = 0; s < 3; ++s)
        g.initial.push_back({code.n + c, {false, s, static_cast<std::uint8_t>(llr[code.checks[c][s]])}, 8});
    for (std::uint32_t b = 0; b < code.n; ++b)
      g.initial.push_back({b, {false, 3, std::uint64_t(static_cast<std::uint8_t>(llr[b])) << 16}, state_width});
  }
  return g;
}

LdpcNocResult decode_on_noc(const LdpcCode& code, std::span<const Llr> llr,
                            const DecodeOptions& opts, Network& net,
                            std::function<void(const SendEvent&)> on_send) {
  if (llr.size() != code.n) throw ValidationError("LLR count does not match the code");
  auto g = build_ldpc_noc(code, net.topology().endpoint_count(), llr, opts);
  Runtime rt(net);
  for (auto& pe : g.pes) {
    const auto e = pe.endpoint;
    rt.add(e, std::make_unique<PeAgent>(std::move(pe)));
  }
  auto& host = rt.emplace(g.host, std::make_unique<HostAgent>("host", g.host_spec, g.initial));
  if (on_send) rt.on_send(std::move(on_send));
  const auto run = rt.run();
  LdpcNocResult res;
  res.cycles = run.cycles();
  for (std::uint32_t b = 0; b < code.n; ++b)
    res.bits.push_back(static_cast<std::uint8_t>(host.collected().at(0).at(b).at(0)));
  return res;
}

}  // namespace nocmap
