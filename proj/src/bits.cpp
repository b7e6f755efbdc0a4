#include "nocmap/bits.hpp"

#include "nocmap/error.hpp"

namespace nocmap {

Bits::Bits(std::uint32_t width) : width_(width), words_((width + 63) / 64, 0) {}

Bits::Bits(std::uint32_t width, std::uint64_t value) : Bits(width) {
  if (width == 0) return;
  words_[0] = value & low_mask(width < 64 ? width : 64);
}

bool Bits::get(std::uint32_t index) const {
  if (index >= width_) throw UsageError("bit index out of range");
  return (words_[index / 64] >> (index % 64)) & 1u;
}

void Bits::set(std::uint32_t index, bool value) {
  if (index >= width_) throw UsageError("bit index out of range");
  auto& w = words_[index / 64];
  const std::uint64_t m = 1ULL << (index % 64);
  w = value ? (w | m) : (w & ~m);
}

std::uint64_t Bits::field(std::uint32_t lsb, std::uint32_t count) const {
  if (count == 0) return 0;
  if (count > 64 || lsb + count > width_) throw UsageError("bit field out of range");
  const std::uint32_t wi = lsb / 64, off = lsb % 64;
  std::uint64_t v = words_[wi] >> off;
  if (off != 0 && off + count > 64) v |= words_[wi + 1] << (64 - off);
  return v & low_mask(count);
}

void Bits::set_field(std::uint32_t lsb, std::uint32_t count, std::uint64_t value) {
  if (count == 0) return;
  if (count > 64 || lsb + count > width_) throw UsageError("bit field out of range");
  value &= low_mask(count);
  const std::uint32_t wi = lsb / 64, off = lsb % 64;
  const std::uint64_t m = low_mask(count);
  words_[wi] = (words_[wi] & ~(m << off)) | (value << off);
  if (off != 0 && off + count > 64) {
    const std::uint32_t spill = off + count - 64;
    const std::uint64_t hm = low_mask(spill);
    words_[wi + 1] = (words_[wi + 1] & ~hm) | (value >> (64 - off));
  }
}

std::uint64_t Bits::to_u64() const {
  if (width_ > 64) throw UsageError("bit vector wider than 64 bits");
  return width_ == 0 ? 0 : words_[0];
}

std::string Bits::to_string() const {
  std::string s;
  s.reserve(width_);
  for (std::uint32_t i = width_; i-- > 0;) s.push_back(get(i) ? '1' : '0');
  return s;
}

}  // namespace nocmap
