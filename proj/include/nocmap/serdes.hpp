#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "nocmap/bits.hpp"
#include "nocmap/flit.hpp"

namespace nocmap {

// Quasi-SERDES framing: a bundle is padded at its least-significant end to a
// multiple of the lane width and sent most-significant beat first.
std::uint32_t beats_per_bundle(std::uint32_t bundle_width, std::uint32_t lane_width);
std::vector<std::uint64_t> serdes_serialize(const Bits& bundle, std::uint32_t lane_width);
Bits serdes_deserialize(std::span<const std::uint64_t> beats, std::uint32_t bundle_width,
                        std::uint32_t lane_width);

// Wire bundle of one router port: valid | head | tail | dst | vc | payload,
// most significant field first.
struct FlitCodec {
  std::uint32_t dst_bits = 1;
  std::uint32_t vc_bits = 0;
  std::uint32_t payload_bits = 16;

  static FlitCodec for_network(std::uint32_t endpoints, std::uint32_t vcs,
                               std::uint32_t flit_width);
  std::uint32_t bundle_width() const noexcept { return 3 + dst_bits + vc_bits + payload_bits; }
  Bits encode(const Flit& f) const;
  Flit decode(const Bits& bundle) const;  // bookkeeping fields left default
};

// One direction of a cut link: a transmitter on the upstream partition and a
// receiver on the downstream one, joined by a lane of `lane_width` wires.
//
// Per cycle the link is first planned against pre-cycle state, then
// committed. A flit presented at cycle t is loaded into the shift register at
// t+1, its beats cross at t+2 .. t+1+B and the rebuilt flit is handed to the
// downstream queue at t+2+B, i.e. B+1 cycles later than a plain link. The
// latch accepts a new flit whenever the previous one is being loaded, so
// back-to-back flits cross at one per B cycles. When the downstream queue is
// full the receiver holds the rebuilt flit and the transmitter stalls on its
// final beat.
class SerdesLink {
 public:
  SerdesLink(FlitCodec codec, std::uint32_t lane_width);

  struct Plan {
    bool deliver = false;
    bool beat = false;
    bool final_beat = false;
    bool load = false;
    bool latch_free = true;
  };

  Plan plan(bool downstream_has_space) const;
  // Applies a plan. Returns the flit handed to the downstream router, if any.
  std::optional<Flit> commit(const Plan& p);
  // Upstream router output; only legal when the committed plan had latch_free.
  void present(const Flit& f);

  // plan + commit + present in one call, for driving a link standalone.
  struct StepResult {
    std::optional<Flit> delivered;
    bool accepted = false;  // presented flit was latched
  };
  StepResult step(const std::optional<Flit>& presented, bool downstream_has_space);

  std::uint32_t lane_width() const noexcept { return lane_width_; }
  std::uint32_t bundle_width() const noexcept { return codec_.bundle_width(); }
  std::uint32_t beats() const noexcept { return beats_; }
  const FlitCodec& codec() const noexcept { return codec_; }

  std::uint32_t in_flight() const noexcept;
  std::uint32_t in_flight_on_vc(std::uint32_t vc) const noexcept;
  bool idle() const noexcept { return in_flight() == 0; }
  bool tx_busy() const noexcept { return shifting_.has_value(); }
  const std::optional<Flit>& rx_held() const noexcept { return rx_ready_; }

  std::uint64_t beats_sent() const noexcept { return beats_sent_total_; }
  std::uint64_t stall_cycles() const noexcept { return stall_cycles_; }
  std::uint64_t state_hash() const noexcept;

 private:
  FlitCodec codec_;
  std::uint32_t lane_width_;
  std::uint32_t beats_;

  std::optional<Flit> latch_;
  std::optional<Flit> shifting_;
  std::vector<std::uint64_t> tx_beats_;
  std::uint32_t tx_sent_ = 0;
  std::vector<std::uint64_t> rx_beats_;
  std::optional<Flit> rx_ready_;

  std::uint64_t beats_sent_total_ = 0;
  std::uint64_t stall_cycles_ = 0;
};

}  // namespace nocmap
