#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "nocmap/network.hpp"
#include "nocmap/pe.hpp"
#include "nocmap/runtime.hpp"

namespace nocmap {

using Llr = std::int8_t;

Llr saturate_llr(int v) noexcept;

struct LdpcCode {
  std::uint32_t n = 0;                          // bits
  std::vector<std::vector<std::uint32_t>> checks;      // check -> bits, ascending
  std::vector<std::vector<std::uint32_t>> bit_checks;  // bit -> checks, ascending

  std::uint32_t m() const noexcept { return static_cast<std::uint32_t>(checks.size()); }
  bool h(std::uint32_t check, std::uint32_t bit) const;
  bool satisfied(std::span<const std::uint8_t> bits) const;
};

// Incidence code of the Fano plane, points and lines numbered from 0.
LdpcCode fano_parity_matrix();
std::uint32_t gf2_rank(const LdpcCode& code);
std::vector<std::vector<std::uint8_t>> enumerate_codewords(const LdpcCode& code);

std::array<Llr, 3> check_node_update(Llr u1, Llr u2, Llr u3, bool sign_mode);

struct BitNodeOut {
  Llr sum;
  std::array<Llr, 3> u;
};
BitNodeOut bit_node_update(Llr u0, Llr v1, Llr v2, Llr v3);

inline std::uint8_t hard_decision(Llr sum) noexcept { return sum > 0 ? 0 : 1; }

struct DecodeOptions {
  std::uint32_t iterations = 10;
  bool sign_mode = true;
  bool early_exit = false;  // sequential decoder only
};

// Messages of one iteration, per edge: u[b][i] from bit b to its i-th check,
// v[c][i] from check c to its i-th bit.
struct IterationTrace {
  std::vector<std::vector<Llr>> u;
  std::vector<std::vector<Llr>> v;
  std::vector<Llr> sum;
};

struct DecodeResult {
  std::vector<std::uint8_t> bits;
  std::vector<Llr> sum;
  std::uint32_t iterations = 0;
  std::vector<IterationTrace> trace;
};

DecodeResult decode(const LdpcCode& code, std::span<const Llr> llr, const DecodeOptions& opts);

struct LdpcGraph {
  std::vector<PEDescriptor> pes;  // bit nodes first, then check nodes
  EndpointId host = 0;
  std::uint32_t host_tag_base = 0;
  std::vector<OutgoingMessage> initial;
  CollectorSpec host_spec;
};

// Bit node b on endpoint b, check node c on endpoint n + c, host on the next
// free endpoint or beside bit node 0.
LdpcGraph build_ldpc_noc(const LdpcCode& code, std::uint32_t endpoint_count,
                         std::span<const Llr> llr, const DecodeOptions& opts);

struct LdpcNocResult {
  std::vector<std::uint8_t> bits;
  Cycle cycles = 0;
};

LdpcNocResult decode_on_noc(const LdpcCode& code, std::span<const Llr> llr,
                            const DecodeOptions& opts, Network& net,
                            std::function<void(const SendEvent&)> on_send = {});

}  // namespace nocmap
