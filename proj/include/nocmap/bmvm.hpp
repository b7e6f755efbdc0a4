#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nocmap/network.hpp"
#include "nocmap/pe.hpp"
#include "nocmap/runtime.hpp"

namespace nocmap {

class RngStream;

// Square bit matrix, rows packed into 64-bit words; bit c of a row is column c.
class Gf2Matrix {
 public:
  Gf2Matrix() = default;
  explicit Gf2Matrix(std::uint32_t n);
  static Gf2Matrix identity(std::uint32_t n);
  static Gf2Matrix random(std::uint32_t n, double density, std::uint64_t seed, std::uint64_t sub = 0);

  std::uint32_t n() const noexcept { return n_; }
  bool get(std::uint32_t r, std::uint32_t c) const {
    return (rows_[std::size_t(r) * words_ + c / 64] >> (c % 64)) & 1;
  }
  void set(std::uint32_t r, std::uint32_t c, bool v);
  std::span<const std::uint64_t> row(std::uint32_t r) const {
    return {rows_.data() + std::size_t(r) * words_, words_};
  }
  std::uint32_t words_per_row() const noexcept { return words_; }

  // Line 1 `n`, then n lines of n characters in {0,1}.
  static Gf2Matrix parse(const std::string& text);
  std::string format() const;
  friend bool operator==(const Gf2Matrix&, const Gf2Matrix&) = default;

 private:
  std::uint32_t n_ = 0;
  std::uint32_t words_ = 0;
  std::vector<std::uint64_t> rows_;
};

class Gf2Vector {
 public:
  Gf2Vector() = default;
  explicit Gf2Vector(std::uint32_t n) : n_(n), w_((n + 63) / 64, 0) {}
  static Gf2Vector random(std::uint32_t n, std::uint64_t seed, std::uint64_t sub = 0);

  std::uint32_t n() const noexcept { return n_; }
  bool get(std::uint32_t i) const { return (w_[i / 64] >> (i % 64)) & 1; }
  void set(std::uint32_t i, bool v);
  // k bits starting at component i*k; bit b is component i*k + b.
  std::uint32_t sub(std::uint32_t i, std::uint32_t k) const;
  void set_sub(std::uint32_t i, std::uint32_t k, std::uint32_t value);
  std::span<const std::uint64_t> words() const noexcept { return w_; }

  Gf2Vector operator^(const Gf2Vector& o) const;
  static Gf2Vector parse(const std::string& line);
  std::string format() const;  // n characters, component 0 first
  friend bool operator==(const Gf2Vector&, const Gf2Vector&) = default;

 private:
  std::uint32_t n_ = 0;
  std::vector<std::uint64_t> w_;
};

Gf2Vector naive_matvec_gf2(const Gf2Matrix& a, const Gf2Vector& v);

// LUT_i part p word j = A_{j,i} * b_p, where b_p bit b is bit b of p and a
// word's bit a is row j*k + a of the tile product.
class LutBank {
 public:
  std::uint32_t n() const noexcept { return n_; }
  std::uint32_t k() const noexcept { return k_; }
  std::uint32_t tiles() const noexcept { return n_ / k_; }
  std::uint64_t bits_per_lut() const noexcept {
    return (std::uint64_t(1) << k_) * tiles() * k_;
  }
  std::span<const std::uint16_t> lookup(std::uint32_t i, std::uint32_t v_i) const;
  friend bool operator==(const LutBank&, const LutBank&) = default;

 private:
  friend LutBank preprocess(const Gf2Matrix&, std::uint32_t, std::uint64_t);
  std::uint32_t n_ = 0;
  std::uint32_t k_ = 0;
  std::vector<std::vector<std::uint16_t>> tables_;  // [i][p * tiles + j]
};

inline constexpr std::uint64_t default_lut_budget_bits = std::uint64_t(1) << 31;

LutBank preprocess(const Gf2Matrix& a, std::uint32_t k,
                   std::uint64_t budget_bits = default_lut_budget_bits);
std::span<const std::uint16_t> lut_lookup(const LutBank& bank, std::uint32_t i, std::uint32_t v_i);

// PE p owns sub-vectors [p*f, (p+1)*f) and their tables.
struct FoldedBank {
  std::shared_ptr<const LutBank> bank;
  std::uint32_t f = 1;
  std::uint32_t pe_count() const noexcept { return bank->tiles() / f; }
  std::uint32_t owner(std::uint32_t i) const noexcept { return i / f; }
  std::span<const std::uint16_t> lookup(std::uint32_t pe, std::uint32_t local,
                                        std::uint32_t v_i) const {
    return bank->lookup(pe * f + local, v_i);
  }
};

FoldedBank coalesce_luts(std::shared_ptr<const LutBank> bank, std::uint32_t f);

enum class Checkpoints { final_only, all };

struct BmvmShape {
  std::uint32_t n = 64;
  std::uint32_t k = 8;
  std::uint32_t f = 2;
  std::uint32_t r = 1;
  Checkpoints checkpoints = Checkpoints::final_only;

  std::uint32_t tiles() const noexcept { return n / k; }
  std::uint32_t pe_count() const noexcept { return n / (k * f); }
  void validate() const;  // ConfigError
};

struct BmvmGraph {
  BmvmShape shape;
  std::vector<PEDescriptor> pes;
  EndpointId host = 0;
  std::uint32_t host_tag_base = 0;
  std::uint32_t checkpoint_count() const noexcept;
};

// PE graph on `endpoint_count` endpoints. `bank` may be null for a dry run;
// its processors then refuse to fire.
BmvmGraph build_bmvm_graph(const BmvmShape& shape, std::uint32_t endpoint_count,
                           std::shared_ptr<const LutBank> bank = nullptr);

struct BmvmResult {
  std::vector<std::vector<Gf2Vector>> columns;  // [column][checkpoint]
  Cycle cycles = 0;
  std::vector<Cycle> column_cycles;
};

struct BmvmRunOptions {
  std::vector<std::uint32_t> pe_latency;  // per PE; empty means 1
  RunOptions run;
};

// Runs every column of `vs` through r rounds on `net`, one column after the
// other.
BmvmResult bmvm_iterate(const LutBank& bank, const BmvmShape& shape, std::span<const Gf2Vector> vs,
                        Network& net, const BmvmRunOptions& opts = {});

// Sequential reference: r-fold naive product, with the same checkpoints.
std::vector<Gf2Vector> bmvm_reference(const Gf2Matrix& a, const Gf2Vector& v, const BmvmShape& shape);

}  // namespace nocmap
