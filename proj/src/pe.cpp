#include "nocmap/pe.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "nocmap/bits.hpp"
#include "nocmap/error.hpp"

namespace nocmap {

std::uint64_t fold(FoldOp op, std::uint64_t a, std::uint64_t b, std::uint32_t width) noexcept {
  switch (op) {
    case FoldOp::bit_xor: return a ^ b;
    case FoldOp::bit_or: return a | b;
    case FoldOp::bit_and: return a & b;
    case FoldOp::add: return (a + b) & low_mask(width);
  }
  return a;
}

std::uint64_t fold_identity(FoldOp op, std::uint32_t width) noexcept {
  return op == FoldOp::bit_and ? low_mask(width) : 0;
}

void CollectorSpec::validate() const {
  if (slots.empty()) throw ConfigError("collector needs at least one slot");
  std::set<std::uint32_t> seen;
  for (const auto& s : slots) {
    if (!seen.insert(s.slot_id).second)
      throw ConfigError("duplicate slot id " + std::to_string(s.slot_id));
    if (s.expected_count < 1) throw ConfigError("expected_count must be >= 1");
    if (s.word_width < 1 || s.word_width > 64) throw ConfigError("word width must be in [1, 64]");
    if (mode == CollectorMode::reduce && s.persistent)
      throw ConfigError("persistent slots are gather-only");
  }
}

std::uint32_t CollectorSpec::max_tag() const {
  std::uint32_t m = 0;
  for (const auto& s : slots) m = std::max(m, s.slot_id);
  return m;
}

CollectorState::CollectorState(CollectorSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  slots_.resize(spec_.slots.size());
  by_tag_.assign(spec_.max_tag() + 1, -1);
  for (std::size_t i = 0; i < spec_.slots.size(); ++i) {
    by_tag_[spec_.slots[i].slot_id] = static_cast<std::int32_t>(i);
    const auto& s = spec_.slots[i];
    slots_[i].acc[0] = slots_[i].acc[1] = fold_identity(s.fold, s.word_width);
  }
}

std::size_t CollectorState::index_of(std::uint32_t tag) const {
  if (tag >= by_tag_.size() || by_tag_[tag] < 0)
    throw ProtocolError("unknown slot tag " + std::to_string(tag));
  return static_cast<std::size_t>(by_tag_[tag]);
}

AcceptResult CollectorState::accept(const MessageEnvelope& env, Cycle cycle) {
  const auto i = index_of(env.tag);
  const auto& s = spec_.slots[i];
  auto& st = slots_[i];
  if (env.data & ~low_mask(s.word_width))
    throw ValidationError("word wider than slot " + std::to_string(s.slot_id));
  if (spec_.mode == CollectorMode::gather) {
    if (st.fifo.size() >= 2ull * s.expected_count) return AcceptResult::backpressure;
    st.fifo.push_back(env.data);
    return AcceptResult::accepted;
  }
  const int p = env.parity;
  if (st.count[p] >= s.expected_count) return AcceptResult::backpressure;
  if (cycle != ~Cycle{0}) {
    if (st.last_fold == cycle) throw Error(ErrorKind::runtime, "two folds into one slot in one cycle");
    st.last_fold = cycle;
  }
  st.acc[p] = fold(s.fold, st.acc[p], env.data, s.word_width);
  ++st.count[p];
  return AcceptResult::accepted;
}

void CollectorState::preload(std::uint32_t tag, std::uint64_t word) {
  const auto i = index_of(tag);
  const auto& s = spec_.slots[i];
  if (word & ~low_mask(s.word_width)) throw ValidationError("preloaded word too wide");
  if (spec_.mode == CollectorMode::gather) {
    if (accept({parity_, tag, word}) != AcceptResult::accepted)
      throw UsageError("preload overflows slot");
    return;
  }
  auto& st = slots_[i];
  if (st.count[parity_] != 0) throw UsageError("preload into a slot that already has data");
  st.acc[parity_] = word;
  st.count[parity_] = s.expected_count;
}

bool CollectorState::start_pending() const noexcept {
  for (std::size_t i = 0; i < slots_.size(); ++i) {
    const auto& s = spec_.slots[i];
    if (spec_.mode == CollectorMode::gather) {
      if (slots_[i].fifo.size() < s.expected_count) return false;
    } else if (slots_[i].count[parity_] != s.expected_count) {
      return false;
    }
  }
  return true;
}

std::vector<std::vector<std::uint64_t>> CollectorState::take_inputs() {
  if (!start_pending()) throw UsageError("processor fired before its inputs were complete");
  std::vector<std::vector<std::uint64_t>> out(slots_.size());
  for (std::size_t i = 0; i < slots_.size(); ++i) {
    const auto& s = spec_.slots[i];
    auto& st = slots_[i];
    if (spec_.mode == CollectorMode::gather) {
      auto end = st.fifo.begin() + s.expected_count;
      out[i].assign(st.fifo.begin(), end);
      if (!s.persistent) st.fifo.erase(st.fifo.begin(), end);
    } else {
      out[i].push_back(st.acc[parity_]);
      st.acc[parity_] = fold_identity(s.fold, s.word_width);
      st.count[parity_] = 0;
    }
  }
  if (spec_.mode == CollectorMode::reduce) parity_ = !parity_;
  return out;
}

std::uint32_t CollectorState::queued(std::uint32_t tag) const {
  const auto& st = slots_[index_of(tag)];
  if (spec_.mode == CollectorMode::gather) return static_cast<std::uint32_t>(st.fifo.size());
  return st.count[0] + st.count[1];
}

bool CollectorState::empty() const noexcept {
  for (std::size_t i = 0; i < slots_.size(); ++i) {
    const auto& st = slots_[i];
    if (spec_.slots[i].persistent) continue;
    if (!st.fifo.empty() || st.count[0] || st.count[1]) return false;
  }
  return true;
}

CollectorState collector_accept(CollectorState state, const MessageEnvelope& env) {
  if (state.accept(env) != AcceptResult::accepted) throw ResourceError("collector slot full");
  return state;
}

void PEDescriptor::validate(std::uint32_t endpoint_count) const {
  collector.validate();
  if (!processor) throw ConfigError("PE " + name + " has no processor");
  if (endpoint >= endpoint_count) throw ConfigError("PE " + name + " endpoint out of range");
  for (auto w : output_widths)
    if (w < 1 || w > 64) throw ConfigError("PE " + name + " output width must be in [1, 64]");
  for (const auto& t : table) {
    if (t.output_slot >= output_widths.size())
      throw ConfigError("PE " + name + " distributes an undeclared output slot");
    if (t.dst >= endpoint_count) throw ConfigError("PE " + name + " sends outside the network");
  }
}

Results fire_processor(const PEDescriptor& pe, CollectorState& state) {
  auto inputs = state.take_inputs();
  auto results = pe.processor(inputs);
  if (results.size() != pe.output_widths.size())
    throw ValidationError("PE " + pe.name + " returned the wrong number of results");
  return results;
}

std::uint32_t EnvelopeLayout::fragments(std::uint32_t word_width) const noexcept {
  const auto d = data_bits();
  return std::max<std::uint32_t>(1, (word_width + d - 1) / d);
}

void EnvelopeLayout::validate() const {
  if (payload_bits < tag_bits + 2)
    throw ConfigError("flit payload of " + std::to_string(payload_bits) +
                      " bits leaves no room for data after parity and a " +
                      std::to_string(tag_bits) + "-bit tag");
}

std::vector<std::uint64_t> encode_fragments(const EnvelopeLayout& layout,
                                            const MessageEnvelope& env,
                                            std::uint32_t word_width) {
  if (word_width < 64 && (env.data >> word_width) != 0)
    throw ValidationError("result word wider than its declared width");
  if (env.tag >> layout.tag_bits) throw ValidationError("slot tag does not fit the envelope");
  const auto d = layout.data_bits();
  const auto n = layout.fragments(word_width);
  const std::uint64_t header = (std::uint64_t(env.parity) << layout.tag_bits | env.tag) << d;
  std::vector<std::uint64_t> out(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    const std::uint32_t shift = (n - 1 - i) * d;
    const std::uint64_t chunk = shift >= 64 ? 0 : (env.data >> shift) & low_mask(d);
    out[i] = header | chunk;
  }
  return out;
}

std::optional<MessageEnvelope> EnvelopeAssembler::push(const Flit& f) {
  const auto d = layout_.data_bits();
  const bool parity = (f.payload >> (d + layout_.tag_bits)) & 1;
  const auto tag = static_cast<std::uint32_t>((f.payload >> d) & low_mask(layout_.tag_bits));
  const auto chunk = f.payload & low_mask(d);
  if (f.head) {
    if (open_) throw ProtocolError("head fragment inside an open packet");
    open_ = true;
    cur_ = {parity, tag, 0};
    frags_ = 0;
  } else {
    if (!open_) throw ProtocolError("body fragment without a head");
    if (parity != cur_.parity || tag != cur_.tag)
      throw ProtocolError("fragment header changed inside a packet");
  }
  cur_.data = (d >= 64 ? 0 : cur_.data << d) | chunk;
  if (++frags_ > 64) throw ProtocolError("packet too long");
  if (!f.tail) return std::nullopt;
  open_ = false;
  return cur_;
}

std::vector<OutgoingMessage> distribute_messages(const PEDescriptor& pe, const Results& results,
                                                 bool parity) {
  std::vector<OutgoingMessage> out;
  for (const auto& t : pe.table) {
    if (t.output_slot >= results.size())
      throw ValidationError("PE " + pe.name + " has no result for output slot " +
                            std::to_string(t.output_slot));
    const auto& r = results[t.output_slot];
    if (!r) continue;
    const auto w = pe.output_widths.at(t.output_slot);
    if (w < 64 && (*r >> w) != 0)
      throw ValidationError("PE " + pe.name + " result wider than " + std::to_string(w) + " bits");
    out.push_back({t.dst, {parity, t.dst_slot, *r}, w});
  }
  return out;
}

std::vector<Flit> distribute(const PEDescriptor& pe, const Results& results,
                             const EnvelopeLayout& layout, bool parity) {
  std::vector<Flit> flits;
  for (const auto& m : distribute_messages(pe, results, parity)) {
    const auto frags = encode_fragments(layout, m.env, m.word_width);
    for (std::size_t i = 0; i < frags.size(); ++i) {
      Flit f;
      f.dst = m.dst;
      f.head = i == 0;
      f.tail = i + 1 == frags.size();
      f.payload = frags[i];
      flits.push_back(f);
    }
  }
  return flits;
}

std::string describe_graph(const std::vector<PEDescriptor>& pes) {
  std::ostringstream os;
  for (const auto& pe : pes) {
    os << "endpoint " << pe.endpoint << " " << pe.name << " ("
       << (pe.collector.mode == CollectorMode::gather ? "gather" : "reduce") << ", latency "
       << pe.latency << ")\n";
    for (const auto& s : pe.collector.slots)
      os << "  slot " << s.slot_id << ": expects " << s.expected_count << " x " << s.word_width
         << " bits" << (s.persistent ? " persistent" : "") << "\n";
    for (const auto& t : pe.table)
      os << "  out " << t.output_slot << " -> endpoint " << t.dst << " slot " << t.dst_slot << "\n";
  }
  return os.str();
}

}  // namespace nocmap
