#include "nocmap/bmvm.hpp"

#include <bit>
#include <sstream>

#include "nocmap/error.hpp"
#include "nocmap/rng.hpp"

namespace nocmap {

Gf2Matrix::Gf2Matrix(std::uint32_t n)
    : n_(n), words_((n + 63) / 64), rows_(std::size_t(n) * ((n + 63) / 64), 0) {}

Gf2Matrix Gf2Matrix::identity(std::uint32_t n) {
  Gf2Matrix m(n);
  for (std::uint32_t i = 0; i < n; ++i) m.set(i, i, true);
  return m;
}

Gf2Matrix Gf2Matrix::random(std::uint32_t n, double density, std::uint64_t seed, std::uint64_t sub) {
  Gf2Matrix m(n);
  CounterRng rng(seed, "matrix", sub);
  for (std::uint32_t r = 0; r < n; ++r) {
    for (std::uint32_t w = 0; w < m.words_; ++w) {
      const std::uint32_t lo = w * 64;
      const std::uint32_t cnt = std::min<std::uint32_t>(64, n - lo);
      std::uint64_t bits = 0;
      if (density == 0.5) {
        bits = rng.bits(std::uint64_t(r) * m.words_ + w) & low_mask(cnt);
      } else {
        for (std::uint32_t b = 0; b < cnt; ++b)
          if (rng.uniform(std::uint64_t(r) * n + lo + b, 1) < density) bits |= 1ULL << b;
      }
      m.rows_[std::size_t(r) * m.words_ + w] = bits;
    }
  }
  return m;
}

void Gf2Matrix::set(std::uint32_t r, std::uint32_t c, bool v) {
  auto& w = rows_[std::size_t(r) * words_ + c / 64];
  const std::uint64_t bit = 1ULL << (c % 64);
  w = v ? (w | bit) : (w & ~bit);
}

Gf2Matrix Gf2Matrix::parse(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::uint32_t n = 0;
  if (!(in >> n) || n == 0) throw ValidationError("matrix file: first line must be a positive n");
  std::getline(in, line);
  Gf2Matrix m(n);
  for (std::uint32_t r = 0; r < n; ++r) {
    if (!std::getline(in, line)) throw ValidationError("matrix file: missing row " + std::to_string(r));
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.size() != n)
      throw ValidationError("matrix file: row " + std::to_string(r) + " has " +
                            std::to_string(line.size()) + " characters, expected " + std::to_string(n));
    for (std::uint32_t c = 0; c < n; ++c) {
      if (line[c] != '0' && line[c] != '1')
        throw ValidationError("matrix file: row " + std::to_string(r) + " has a character other than 0/1");
      m.set(r, c, line[c] == '1');
    }
  }
  return m;
}

std::string Gf2Matrix::format() const {
  std::string s = std::to_string(n_) + "\n";
  for (std::uint32_t r = 0; r < n_; ++r) {
    for (std::uint32_t c = 0; c < n_; ++c) s += get(r, c) ? '1' : '0';
    s += '\n';
  }
  return s;
}

Gf2Vector Gf2Vector::random(std::uint32_t n, std::uint64_t seed, std::uint64_t sub) {
  Gf2Vector v(n);
  CounterRng rng(seed, "vector", sub);
  for (std::uint32_t w = 0; w < v.w_.size(); ++w)
    v.w_[w] = rng.bits(w) & low_mask(std::min<std::uint32_t>(64, n - w * 64));
  return v;
}

void Gf2Vector::set(std::uint32_t i, bool v) {
  const std::uint64_t bit = 1ULL << (i % 64);
  w_[i / 64] = v ? (w_[i / 64] | bit) : (w_[i / 64] & ~bit);
}

std::uint32_t Gf2Vector::sub(std::uint32_t i, std::uint32_t k) const {
  std::uint32_t v = 0;
  for (std::uint32_t b = 0; b < k; ++b) v |= std::uint32_t(get(i * k + b)) << b;
  return v;
}

void Gf2Vector::set_sub(std::uint32_t i, std::uint32_t k, std::uint32_t value) {
  for (std::uint32_t b = 0; b < k; ++b) set(i * k + b, (value >> b) & 1);
}

Gf2Vector Gf2Vector::operator^(const Gf2Vector& o) const {
  if (o.n_ != n_) throw ValidationError("vector length mismatch");
  Gf2Vector r = *this;
  for (std::size_t i = 0; i < w_.size(); ++i) r.w_[i] ^= o.w_[i];
  return r;
}

Gf2Vector Gf2Vector::parse(const std::string& text) {
  std::string line = text;
  while (!line.empty() && (line.back() == '\n' || line.back() == '\r')) line.pop_back();
  if (line.empty()) throw ValidationError("vector file is empty");
  Gf2Vector v(static_cast<std::uint32_t>(line.size()));
  for (std::uint32_t i = 0; i < line.size(); ++i) {
    if (line[i] != '0' && line[i] != '1') throw ValidationError("vector has a character other than 0/1");
    v.set(i, line[i] == '1');
  }
  return v;
}

std::string Gf2Vector::format() const {
  std::string s(n_, '0');
  for (std::uint32_t i = 0; i < n_; ++i)
    if (get(i)) s[i] = '1';
  return s;
}

Gf2Vector naive_matvec_gf2(const Gf2Matrix& a, const Gf2Vector& v) {
  if (a.n() != v.n())
    throw ValidationError("matrix is " + std::to_string(a.n()) + "x" + std::to_string(a.n()) +
                          " but vector has " + std::to_string(v.n()) + " components");
  Gf2Vector out(a.n());
  const auto vw = v.words();
  for (std::uint32_t r = 0; r < a.n(); ++r) {
    const auto row = a.row(r);
    std::uint64_t acc = 0;
    for (std::size_t w = 0; w < row.size(); ++w) acc ^= row[w] & vw[w];
    out.set(r, std::popcount(acc) & 1);
  }
  return out;
}

LutBank preprocess(const Gf2Matrix& a, std::uint32_t k, std::uint64_t budget_bits) {
  const auto n = a.n();
  if (k < 1 || k > 16) throw ConfigError("tile size k must be in [1, 16]");
  if (n % k != 0) throw ConfigError("k = " + std::to_string(k) + " does not divide n = " + std::to_string(n));
  const std::uint32_t m = n / k;
  const std::uint64_t total = (std::uint64_t(1) << k) * m * k * m;
  if (total > budget_bits)
    throw ResourceError("lookup tables need " + std::to_string(total) + " bits, budget is " +
                        std::to_string(budget_bits));
  LutBank bank;
  bank.n_ = n;
  bank.k_ = k;
  bank.tables_.resize(m);
  const std::uint32_t parts = 1u << k;
  std::vector<std::uint16_t> cols(k);
  for (std::uint32_t i = 0; i < m; ++i) {
    auto& t = bank.tables_[i];
    t.assign(std::size_t(parts) * m, 0);
    for (std::uint32_t j = 0; j < m; ++j) {
      for (std::uint32_t b = 0; b < k; ++b) {
        std::uint16_t c = 0;
        for (std::uint32_t r = 0; r < k; ++r) c |= std::uint16_t(a.get(j * k + r, i * k + b)) << r;
        cols[b] = c;
      }
      for (std::uint32_t p = 1; p < parts; ++p)
        t[std::size_t(p) * m + j] = t[std::size_t(p & (p - 1)) * m + j] ^ cols[std::countr_zero(p)];
    }
  }
  return bank;
}

std::span<const std::uint16_t> LutBank::lookup(std::uint32_t i, std::uint32_t v_i) const {
  const auto m = tiles();
  if (i >= m) throw ValidationError("sub-vector index out of range");
  if (v_i >> k_) throw ValidationError("sub-vector wider than k");
  return {tables_[i].data() + std::size_t(v_i) * m, m};
}

std::span<const std::uint16_t> lut_lookup(const LutBank& bank, std::uint32_t i, std::uint32_t v_i) {
  return bank.lookup(i, v_i);
}

FoldedBank coalesce_luts(std::shared_ptr<const LutBank> bank, std::uint32_t f) {
  if (f == 0 || bank->tiles() % f != 0)
    throw ConfigError("folding factor " + std::to_string(f) + " does not divide n/k = " +
                      std::to_string(bank->tiles()));
  return {std::move(bank), f};
}

void BmvmShape::validate() const {
  if (n == 0) throw ConfigError("n must be positive");
  if (k < 1 || k > 16) throw ConfigError("tile size k must be in [1, 16]");
  if (n % k) throw ConfigError("k = " + std::to_string(k) + " does not divide n = " + std::to_string(n));
  if (f == 0 || tiles() % f)
    throw ConfigError("folding factor f = " + std::to_string(f) + " does not divide n/k = " +
                      std::to_string(tiles()));
  if (r < 1 || r > 65535) throw ConfigError("iteration count r must be in [1, 65535]");
}

std::uint32_t BmvmGraph::checkpoint_count() const noexcept {
  return shape.checkpoints == Checkpoints::all ? shape.r : 1;
}

namespace {
constexpr std::uint32_t counter_width = 16;
}

BmvmGraph build_bmvm_graph(const BmvmShape& shape, std::uint32_t endpoint_count,
                           std::shared_ptr<const LutBank> bank) {
  shape.validate();
  const std::uint32_t m = shape.tiles(), f = shape.f, k = shape.k, P = shape.pe_count();
  if (P > endpoint_count)
    throw ConfigError("BMVM needs " + std::to_string(P) + " PEs but the topology has " +
                      std::to_string(endpoint_count) + " endpoints");
  if (bank && (bank->n() != shape.n || bank->k() != shape.k))
    throw ConfigError("lookup tables were built for a different n or k");
  BmvmGraph g;
  g.shape = shape;
  if (endpoint_count > P) {
    g.host = P;
    g.host_tag_base = 0;
  } else {
    g.host = 0;
    g.host_tag_base = f + 1;
  }
  const bool all = shape.checkpoints == Checkpoints::all;
  const std::uint32_t r = shape.r;
  for (std::uint32_t p = 0; p < P; ++p) {
    PEDescriptor pe;
    pe.name = "bmvm" + std::to_string(p);
    pe.endpoint = p;
    pe.collector.mode = CollectorMode::reduce;
    for (std::uint32_t l = 0; l < f; ++l) pe.collector.slots.push_back({l, m, k, FoldOp::bit_xor});
    pe.collector.slots.push_back({f, 1, counter_width, FoldOp::bit_xor});
    // outputs: f*m contributions, state, f results
    pe.output_widths.assign(f * m, k);
    pe.output_widths.push_back(counter_width);
    pe.output_widths.insert(pe.output_widths.end(), f, k);
    // staggered so that PEs start on different destinations
    for (std::uint32_t s = 0; s < m; ++s)
      for (std::uint32_t l = 0; l < f; ++l) {
        const std::uint32_t j = (p * f + l + s) % m;
        pe.table.push_back({l * m + j, j / f, j % f});
      }
    pe.table.push_back({f * m, p, f});
    for (std::uint32_t l = 0; l < f; ++l)
      pe.table.push_back({f * m + 1 + l, g.host, g.host_tag_base + p * f + l});
    pe.processor = [bank, p, f, m, r, all](const Inputs& in) {
      if (!bank) throw UsageError("dry-run BMVM graph cannot fire");
      Results out(f * m + 1 + f);
      const auto t = static_cast<std::uint32_t>(in[f][0]);
      if (t < r) {
        for (std::uint32_t l = 0; l < f; ++l) {
          const auto words = bank->lookup(p * f + l, static_cast<std::uint32_t>(in[l][0]));
          for (std::uint32_t j = 0; j < m; ++j) out[l * m + j] = words[j];
        }
        out[f * m] = t + 1;
      }
      if (t == r || (all && t >= 1))
        for (std::uint32_t l = 0; l < f; ++l) out[f * m + 1 + l] = in[l][0];
      return out;
    };
    g.pes.push_back(std::move(pe));
  }
  return g;
}

BmvmResult bmvm_iterate(const LutBank& bank, const BmvmShape& shape, std::span<const Gf2Vector> vs,
                        Network& net, const BmvmRunOptions& opts) {
  std::shared_ptr<const LutBank> alias(std::shared_ptr<const LutBank>{}, &bank);
  auto g = build_bmvm_graph(shape, net.topology().endpoint_count(), alias);
  const std::uint32_t m = shape.tiles(), f = shape.f, k = shape.k;
  if (!opts.pe_latency.empty() && opts.pe_latency.size() != g.pes.size())
    throw ConfigError("one latency per PE expected");
  BmvmResult res;
  for (const auto& v : vs) {
    if (v.n() != shape.n) throw ValidationError("vector length does not match n");
    Runtime rt(net);
    for (std::uint32_t p = 0; p < g.pes.size(); ++p) {
      auto pe = g.pes[p];
      if (!opts.pe_latency.empty()) pe.latency = opts.pe_latency[p];
      auto& a = rt.emplace(pe.endpoint, std::make_unique<PeAgent>(std::move(pe)));
      for (std::uint32_t l = 0; l < f; ++l) a.preload(l, v.sub(p * f + l, k));
      a.preload(f, 0);
    }
    CollectorSpec hs;
    for (std::uint32_t j = 0; j < m; ++j) hs.slots.push_back({g.host_tag_base + j, g.checkpoint_count(), k});
    auto& host = rt.emplace(g.host, std::make_unique<HostAgent>("host", hs, std::vector<OutgoingMessage>{}));
    const auto run = rt.run(opts.run);
    const auto& got = host.collected().at(0);
    std::vector<Gf2Vector> cps(g.checkpoint_count(), Gf2Vector(shape.n));
    for (std::uint32_t j = 0; j < m; ++j)
      for (std::uint32_t c = 0; c < cps.size(); ++c)
        cps[c].set_sub(j, k, static_cast<std::uint32_t>(got[j][c]));
    res.columns.push_back(std::move(cps));
    res.column_cycles.push_back(run.cycles());
    res.cycles += run.cycles();
  }
  return res;
}

std::vector<Gf2Vector> bmvm_reference(const Gf2Matrix& a, const Gf2Vector& v, const BmvmShape& shape) {
  std::vector<Gf2Vector> out;
  Gf2Vector cur = v;
  for (std::uint32_t t = 1; t <= shape.r; ++t) {
    cur = naive_matvec_gf2(a, cur);
    if (shape.checkpoints == Checkpoints::all || t == shape.r) out.push_back(cur);
  }
  return out;
}

}  // namespace nocmap
