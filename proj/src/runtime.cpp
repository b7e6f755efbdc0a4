#include "nocmap/runtime.hpp"

#include <algorithm>
#include <map>
#include <sstream>

#include "nocmap/bits.hpp"
#include "nocmap/error.hpp"

namespace nocmap {

PeAgent::PeAgent(PEDescriptor pe) : pe_(std::move(pe)), state_(pe_.collector) {}

std::vector<std::uint32_t> PeAgent::tags() const {
  std::vector<std::uint32_t> t;
  for (const auto& s : pe_.collector.slots) t.push_back(s.slot_id);
  return t;
}

AcceptResult PeAgent::accept(const MessageEnvelope& env, Cycle now) {
  return state_.accept(env, now);
}

void PeAgent::tick(Cycle now, Outbox& out) {
  auto flush = [&] {
    for (const auto& m : distribute_messages(pe_, *pending_, firings_ & 1))
      out.send(m.dst, m.env, m.word_width);
    pending_.reset();
  };
  if (pending_ && now >= done_at_) flush();
  if (!pending_ && state_.start_pending()) {
    pending_ = fire_processor(pe_, state_);
    ++firings_;
    done_at_ = now + pe_.latency;
    if (pe_.latency == 0) flush();
  }
}

std::string PeAgent::describe() const { return describe_graph({pe_}); }

HostAgent::HostAgent(std::string name, CollectorSpec spec, std::vector<OutgoingMessage> initial,
                     std::uint32_t firings)
    : name_(std::move(name)), state_(std::move(spec)), initial_(std::move(initial)),
      firings_(firings) {}

std::vector<std::uint32_t> HostAgent::tags() const {
  std::vector<std::uint32_t> t;
  for (const auto& s : state_.spec().slots) t.push_back(s.slot_id);
  return t;
}

AcceptResult HostAgent::accept(const MessageEnvelope& env, Cycle now) {
  return state_.accept(env, now);
}

void HostAgent::tick(Cycle now, Outbox& out) {
  if (!started_) {
    started_ = true;
    for (const auto& m : initial_) out.send(m.dst, m.env, m.word_width);
  }
  while (collected_.size() < firings_ && state_.start_pending()) {
    collected_.push_back(state_.take_inputs());
    if (collected_.size() == firings_) finished_at_ = now;
  }
}

struct Runtime::Nic {
  EndpointId id = 0;
  std::vector<Agent*> agents;
  std::map<std::uint32_t, Agent*> by_tag;
  std::deque<Flit> tx;
  std::deque<MessageEnvelope> loopback;
  std::optional<EnvelopeAssembler> assembler;
  std::optional<MessageEnvelope> from_noc;
  bool prefer_loopback = false;

  bool quiet() const {
    return tx.empty() && loopback.empty() && !from_noc && !(assembler && assembler->open());
  }
};

class Runtime::NicOutbox : public Outbox {
 public:
  NicOutbox(Runtime& rt, EnvelopeLayout layout) : rt_(rt), layout_(layout) {}
  void bind(Nic* nic, Cycle now) {
    nic_ = nic;
    now_ = now;
  }
  void send(EndpointId dst, const MessageEnvelope& env, std::uint32_t width) override {
    if (dst >= rt_.nics_.size() || !rt_.nics_[dst])
      throw ProtocolError("message to endpoint " + std::to_string(dst) + " which hosts no agent");
    if (!rt_.nics_[dst]->by_tag.count(env.tag))
      throw ProtocolError("message to endpoint " + std::to_string(dst) + " with unknown tag " +
                          std::to_string(env.tag));
    const bool local = dst == nic_->id;
    if (rt_.hook_) rt_.hook_({now_, nic_->id, dst, env, local});
    if (local) {
      if (width < 64 && (env.data >> width) != 0)
        throw ValidationError("result word wider than its declared width");
      nic_->loopback.push_back(env);
      ++events;
      return;
    }
    const auto frags = encode_fragments(layout_, env, width);
    for (std::size_t i = 0; i < frags.size(); ++i) {
      Flit f;
      f.dst = dst;
      f.head = i == 0;
      f.tail = i + 1 == frags.size();
      f.payload = frags[i];
      nic_->tx.push_back(f);
    }
    ++events;
  }
  std::uint64_t events = 0;

 private:
  Runtime& rt_;
  EnvelopeLayout layout_;
  Nic* nic_ = nullptr;
  Cycle now_ = 0;
};

Runtime::Runtime(Network& net) : net_(net) { nics_.resize(net.topology().endpoint_count()); }
Runtime::~Runtime() = default;

Agent& Runtime::add(EndpointId e, std::unique_ptr<Agent> agent) {
  if (e >= nics_.size())
    throw ConfigError("agent " + agent->name() + " placed on missing endpoint " + std::to_string(e));
  if (!nics_[e]) {
    nics_[e] = std::make_unique<Nic>();
    nics_[e]->id = e;
  }
  auto& nic = *nics_[e];
  for (auto t : agent->tags()) {
    if (!nic.by_tag.emplace(t, agent.get()).second)
      throw ConfigError("tag " + std::to_string(t) + " used twice at endpoint " + std::to_string(e));
  }
  nic.agents.push_back(agent.get());
  agents_.emplace_back(e, std::move(agent));
  return *agents_.back().second;
}

EnvelopeLayout Runtime::layout() const {
  EnvelopeLayout l;
  l.payload_bits = net_.topology().config().flit_width;
  std::uint32_t max_tag = 0;
  for (const auto& n : nics_)
    if (n && !n->by_tag.empty()) max_tag = std::max(max_tag, n->by_tag.rbegin()->first);
  l.tag_bits = tag_bits_override_ ? *tag_bits_override_
                                  : std::max<std::uint32_t>(1, index_bits(std::uint64_t(max_tag) + 1));
  if (max_tag >> l.tag_bits) throw ConfigError("tag width too small for the slots in use");
  l.validate();
  return l;
}

RunResult Runtime::run(const RunOptions& opts) {
  const auto lay = layout();
  for (auto& n : nics_)
    if (n) {
      n->assembler.emplace(lay);
    }
  NicOutbox out(*this, lay);
  RunResult res;
  res.start = net_.cycle();
  std::vector<Nic*> active;
  for (auto& n : nics_)
    if (n) active.push_back(n.get());

  auto done = [&] {
    for (const auto& [e, a] : agents_)
      if (!a->finished()) return false;
    for (auto* n : active)
      if (!n->quiet()) return false;
    return net_.idle();
  };

  Cycle last_event = net_.cycle();
  std::uint64_t prev_stats = 0;
  std::uint64_t prev_out = 0;
  for (bool first = true;; first = false) {
    const Cycle now = net_.cycle();
    if (!first && done()) break;
    if (now - res.start > opts.max_cycles) throw RuntimeError("cycle budget exhausted");

    std::uint64_t delivered = 0;
    for (auto* n : active) {
      if (!n->from_noc) {
        if (auto f = net_.eject(n->id)) n->from_noc = n->assembler->push(*f);
      }
      auto try_deliver = [&](bool loop) -> bool {
        const MessageEnvelope* env = loop ? (n->loopback.empty() ? nullptr : &n->loopback.front())
                                          : (n->from_noc ? &*n->from_noc : nullptr);
        if (!env) return false;
        auto it = n->by_tag.find(env->tag);
        if (it == n->by_tag.end())
          throw ProtocolError("endpoint " + std::to_string(n->id) + " got unknown tag " +
                              std::to_string(env->tag));
        if (it->second->accept(*env, now) != AcceptResult::accepted) return false;
        if (loop) {
          n->loopback.pop_front();
          ++res.loopback_envelopes;
        } else {
          n->from_noc.reset();
        }
        n->prefer_loopback = !loop;
        ++delivered;
        return true;
      };
      const bool pl = n->prefer_loopback;
      if (!try_deliver(pl)) try_deliver(!pl);
    }
    res.envelopes += delivered;

    for (auto& [e, a] : agents_) {
      out.bind(nics_[e].get(), now);
      a->tick(now, out);
    }
    for (auto* n : active) {
      if (!n->tx.empty() && net_.can_inject(n->id, 0)) {
        if (net_.inject(n->id, n->tx.front())) n->tx.pop_front();
      }
    }
    net_.step();

    const auto& st = net_.stats();
    const std::uint64_t stats_now = st.flits_injected + st.flits_ejected;
    if (delivered || stats_now != prev_stats || out.events != prev_out) last_event = net_.cycle();
    prev_stats = stats_now;
    prev_out = out.events;
    if (net_.cycle() - last_event > opts.stall_limit) {
      std::ostringstream os;
      os << "no progress for " << opts.stall_limit << " cycles at cycle " << net_.cycle()
         << " (" << net_.in_flight() << " flits in flight)";
      throw RuntimeError(os.str());
    }
  }
  res.end = net_.cycle();
  return res;
}

std::string Runtime::describe() const {
  std::ostringstream os;
  for (const auto& [e, a] : agents_) os << "[" << e << "] " << a->describe();
  return os.str();
}

}  // namespace nocmap
