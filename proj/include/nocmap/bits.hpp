#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace nocmap {

// Fixed-width bit vector; bit 0 is the least significant bit.
class Bits {
 public:
  Bits() = default;
  explicit Bits(std::uint32_t width);
  Bits(std::uint32_t width, std::uint64_t value);

  std::uint32_t width() const noexcept { return width_; }
  bool get(std::uint32_t index) const;
  void set(std::uint32_t index, bool value);

  // Reads/writes `count` (<= 64) bits starting at bit `lsb`.
  std::uint64_t field(std::uint32_t lsb, std::uint32_t count) const;
  void set_field(std::uint32_t lsb, std::uint32_t count, std::uint64_t value);

  std::uint64_t to_u64() const;  // requires width <= 64
  std::string to_string() const; // MSB first

  friend bool operator==(const Bits&, const Bits&) = default;

 private:
  std::uint32_t width_ = 0;
  std::vector<std::uint64_t> words_;
};

inline std::uint64_t low_mask(std::uint32_t bits) noexcept {
  return bits >= 64 ? ~0ULL : ((1ULL << bits) - 1);
}

// Number of bits needed to index `count` distinct values (0 for count <= 1).
inline std::uint32_t index_bits(std::uint64_t count) noexcept {
  std::uint32_t b = 0;
  while ((1ULL << b) < count) ++b;
  return b;
}

}  // namespace nocmap
