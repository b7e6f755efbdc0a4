#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "nocmap/flit.hpp"

namespace nocmap {

enum class CollectorMode { gather, reduce };
enum class FoldOp { bit_xor, bit_or, bit_and, add };

std::uint64_t fold(FoldOp op, std::uint64_t a, std::uint64_t b, std::uint32_t width) noexcept;
std::uint64_t fold_identity(FoldOp op, std::uint32_t width) noexcept;

struct ArgumentSlot {
  std::uint32_t slot_id = 0;  // tag on the wire
  std::uint32_t expected_count = 1;
  std::uint32_t word_width = 16;
  FoldOp fold = FoldOp::bit_xor;  // reduce mode
  bool persistent = false;        // gather mode: kept across firings once filled
};

struct CollectorSpec {
  CollectorMode mode = CollectorMode::gather;
  std::vector<ArgumentSlot> slots;

  void validate() const;
  std::uint32_t max_tag() const;
};

struct MessageEnvelope {
  bool parity = false;
  std::uint32_t tag = 0;
  std::uint64_t data = 0;
};

enum class AcceptResult { accepted, backpressure };

// Argument storage of one PE. Gather slots queue words (bounded at twice the
// expected count); reduce slots fold into one of two accumulators picked by
// the envelope parity.
class CollectorState {
 public:
  explicit CollectorState(CollectorSpec spec);

  const CollectorSpec& spec() const noexcept { return spec_; }
  // `cycle` guards the one-fold-per-slot-per-cycle rule.
  AcceptResult accept(const MessageEnvelope& env, Cycle cycle = ~Cycle{0});
  // Out-of-band load into the current round: a gather slot queues the word,
  // a reduce slot takes it as its completed value.
  void preload(std::uint32_t tag, std::uint64_t word);
  bool start_pending() const noexcept;
  // Consumes one round: expected_count words per gather slot (a persistent
  // slot is read, not consumed), or the completed accumulator per reduce slot.
  std::vector<std::vector<std::uint64_t>> take_inputs();
  bool parity() const noexcept { return parity_; }
  std::uint32_t queued(std::uint32_t tag) const;
  bool empty() const noexcept;

 private:
  std::size_t index_of(std::uint32_t tag) const;

  struct Slot {
    std::deque<std::uint64_t> fifo;
    std::uint64_t acc[2] = {0, 0};
    std::uint32_t count[2] = {0, 0};
    Cycle last_fold = ~Cycle{0};
  };
  CollectorSpec spec_;
  std::vector<Slot> slots_;
  std::vector<std::int32_t> by_tag_;
  bool parity_ = false;
};

CollectorState collector_accept(CollectorState state, const MessageEnvelope& env);

// Per-output-slot results; an empty slot sends nothing this firing.
using Results = std::vector<std::optional<std::uint64_t>>;
using Inputs = std::vector<std::vector<std::uint64_t>>;
using Processor = std::function<Results(const Inputs&)>;

struct DistributorEntry {
  std::uint32_t output_slot = 0;
  EndpointId dst = 0;
  std::uint32_t dst_slot = 0;
};

struct PEDescriptor {
  std::string name;
  EndpointId endpoint = 0;
  CollectorSpec collector;
  std::vector<std::uint32_t> output_widths;
  Processor processor;
  std::vector<DistributorEntry> table;
  std::uint32_t latency = 1;  // cycles per firing

  void validate(std::uint32_t endpoint_count) const;
};

Results fire_processor(const PEDescriptor& pe, CollectorState& state);

// Flit payload = parity(1) | tag(tag_bits) | data fragment, most significant
// fragment first.
struct EnvelopeLayout {
  std::uint32_t payload_bits = 16;
  std::uint32_t tag_bits = 1;

  std::uint32_t data_bits() const noexcept { return payload_bits - 1 - tag_bits; }
  std::uint32_t fragments(std::uint32_t word_width) const noexcept;
  void validate() const;
};

std::vector<std::uint64_t> encode_fragments(const EnvelopeLayout& layout,
                                            const MessageEnvelope& env,
                                            std::uint32_t word_width);

// Incremental reassembly of one packet.
class EnvelopeAssembler {
 public:
  explicit EnvelopeAssembler(EnvelopeLayout layout) : layout_(layout) {}
  // Returns the envelope on the tail fragment.
  std::optional<MessageEnvelope> push(const Flit& f);
  bool open() const noexcept { return open_; }

 private:
  EnvelopeLayout layout_;
  bool open_ = false;
  MessageEnvelope cur_;
  std::uint32_t frags_ = 0;
};

struct OutgoingMessage {
  EndpointId dst = 0;
  MessageEnvelope env;
  std::uint32_t word_width = 0;
};

std::vector<OutgoingMessage> distribute_messages(const PEDescriptor& pe, const Results& results,
                                                 bool parity);
// Flits for every table entry, in table order.
std::vector<Flit> distribute(const PEDescriptor& pe, const Results& results,
                             const EnvelopeLayout& layout, bool parity = false);

std::string describe_graph(const std::vector<PEDescriptor>& pes);

}  // namespace nocmap
