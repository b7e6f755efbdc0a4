#include "nocmap/serdes.hpp"

#include <algorithm>
#include <string>

#include "nocmap/error.hpp"
#include "nocmap/rng.hpp"

namespace nocmap {

std::uint32_t beats_per_bundle(std::uint32_t bundle_width, std::uint32_t lane_width) {
  if (bundle_width == 0) throw FramingError("bundle width must be positive");
  if (lane_width == 0 || lane_width > 64) throw FramingError("lane width must be in [1, 64]");
  return (bundle_width + lane_width - 1) / lane_width;
}

std::vector<std::uint64_t> serdes_serialize(const Bits& bundle, std::uint32_t lane_width) {
  const std::uint32_t width = bundle.width();
  const std::uint32_t beats = beats_per_bundle(width, lane_width);
  std::vector<std::uint64_t> out(beats);
  for (std::uint32_t b = 0; b < beats; ++b) {
    const auto hi = static_cast<std::int64_t>(width) - std::int64_t(b) * lane_width;
    const auto lo = hi - lane_width;
    if (lo >= 0) {
      out[b] = bundle.field(static_cast<std::uint32_t>(lo), lane_width);
    } else {
      out[b] = bundle.field(0, static_cast<std::uint32_t>(hi)) << (-lo);
    }
  }
  return out;
}

Bits serdes_deserialize(std::span<const std::uint64_t> beats, std::uint32_t bundle_width,
                        std::uint32_t lane_width) {
  const std::uint32_t expected = beats_per_bundle(bundle_width, lane_width);
  if (beats.size() != expected)
    throw FramingError("expected " + std::to_string(expected) + " beats, got " +
                       std::to_string(beats.size()));
  Bits out(bundle_width);
  const std::uint64_t lane_mask = low_mask(lane_width);
  for (std::uint32_t b = 0; b < expected; ++b) {
    if (beats[b] & ~lane_mask) throw FramingError("beat wider than the lane");
    const auto hi = static_cast<std::int64_t>(bundle_width) - std::int64_t(b) * lane_width;
    const auto lo = hi - lane_width;
    if (lo >= 0) {
      out.set_field(static_cast<std::uint32_t>(lo), lane_width, beats[b]);
    } else {
      out.set_field(0, static_cast<std::uint32_t>(hi), beats[b] >> (-lo));
    }
  }
  return out;
}

FlitCodec FlitCodec::for_network(std::uint32_t endpoints, std::uint32_t vcs,
                                 std::uint32_t flit_width) {
  FlitCodec c;
  c.dst_bits = std::max<std::uint32_t>(1, index_bits(endpoints));
  c.vc_bits = index_bits(vcs);
  c.payload_bits = flit_width;
  return c;
}

Bits FlitCodec::encode(const Flit& f) const {
  Bits b(bundle_width());
  std::uint32_t pos = bundle_width();
  auto put = [&](std::uint32_t n, std::uint64_t v) {
    pos -= n;
    if ((v & ~low_mask(n)) != 0) throw ValidationError("flit field does not fit its wire width");
    b.set_field(pos, n, v);
  };
  put(1, f.valid);
  put(1, f.head);
  put(1, f.tail);
  put(dst_bits, f.dst);
  put(vc_bits, f.vc);
  put(payload_bits, f.payload);
  return b;
}

Flit FlitCodec::decode(const Bits& bundle) const {
  if (bundle.width() != bundle_width()) throw FramingError("bundle width mismatch");
  Flit f;
  std::uint32_t pos = bundle_width();
  auto take = [&](std::uint32_t n) {
    pos -= n;
    return bundle.field(pos, n);
  };
  f.valid = take(1);
  f.head = take(1);
  f.tail = take(1);
  f.dst = static_cast<EndpointId>(take(dst_bits));
  f.vc = static_cast<std::uint32_t>(take(vc_bits));
  f.payload = take(payload_bits);
  return f;
}

SerdesLink::SerdesLink(FlitCodec codec, std::uint32_t lane_width)
    : codec_(codec),
      lane_width_(lane_width),
      beats_(beats_per_bundle(codec.bundle_width(), lane_width)) {}

SerdesLink::Plan SerdesLink::plan(bool downstream_has_space) const {
  Plan p;
  p.deliver = rx_ready_.has_value() && downstream_has_space;
  const bool rx_free = !rx_ready_.has_value() || p.deliver;
  if (shifting_) {
    const bool last = tx_sent_ + 1 == beats_;
    p.beat = !last || rx_free;
    p.final_beat = last && p.beat;
  }
  const bool shifter_free = !shifting_ || p.final_beat;
  p.load = latch_.has_value() && shifter_free;
  p.latch_free = !latch_.has_value() || p.load;
  return p;
}

std::optional<Flit> SerdesLink::commit(const Plan& p) {
  std::optional<Flit> delivered;
  if (p.deliver) {
    delivered = std::move(rx_ready_);
    rx_ready_.reset();
  }
  if (shifting_ && !p.beat) ++stall_cycles_;
  if (p.beat) {
    rx_beats_.push_back(tx_beats_[tx_sent_++]);
    ++beats_sent_total_;
    if (p.final_beat) {
      Flit rebuilt =
          codec_.decode(serdes_deserialize(rx_beats_, codec_.bundle_width(), lane_width_));
      if (!rebuilt.same_wire(*shifting_)) throw Error(ErrorKind::runtime, "serdes corrupted a flit");
      rebuilt.src = shifting_->src;
      rebuilt.id = shifting_->id;
      rebuilt.inject_cycle = shifting_->inject_cycle;
      rx_ready_ = rebuilt;
      rx_beats_.clear();
      shifting_.reset();
    }
  }
  if (p.load) {
    shifting_ = std::move(latch_);
    latch_.reset();
    tx_beats_ = serdes_serialize(codec_.encode(*shifting_), lane_width_);
    tx_sent_ = 0;
  }
  return delivered;
}

void SerdesLink::present(const Flit& f) {
  if (latch_) throw UsageError("serdes latch is occupied");
  latch_ = f;
}

SerdesLink::StepResult SerdesLink::step(const std::optional<Flit>& presented,
                                        bool downstream_has_space) {
  const Plan p = plan(downstream_has_space);
  StepResult r;
  r.delivered = commit(p);
  if (presented && p.latch_free) {
    present(*presented);
    r.accepted = true;
  }
  return r;
}

std::uint32_t SerdesLink::in_flight() const noexcept {
  return std::uint32_t(latch_.has_value()) + std::uint32_t(shifting_.has_value()) +
         std::uint32_t(rx_ready_.has_value());
}

std::uint32_t SerdesLink::in_flight_on_vc(std::uint32_t vc) const noexcept {
  std::uint32_t n = 0;
  if (latch_ && latch_->vc == vc) ++n;
  if (shifting_ && shifting_->vc == vc) ++n;
  if (rx_ready_ && rx_ready_->vc == vc) ++n;
  return n;
}

std::uint64_t SerdesLink::state_hash() const noexcept {
  std::uint64_t h = 0x51ed;
  auto add = [&](std::uint64_t v) { h = mix64(h ^ v); };
  auto add_flit = [&](const std::optional<Flit>& f) {
    add(f.has_value());
    if (f) {
      add(f->id);
      add(f->payload);
      add(f->vc);
    }
  };
  add_flit(latch_);
  add_flit(shifting_);
  add_flit(rx_ready_);
  add(tx_sent_);
  for (auto b : rx_beats_) add(b);
  return h;
}

}  // namespace nocmap
