#include "bma/model_space.hpp"

#include <bit>
#include <cmath>
#include <stdexcept>

namespace bma {

InclusionMask::InclusionMask(int size) : size_(size) {
  if (size < 0 || size > kMaxBits)
    throw std::invalid_argument("InclusionMask: size must be in [0, 64]");
}

InclusionMask InclusionMask::from_bits(std::uint64_t bits, int size) {
  InclusionMask m(size);
  if (size < kMaxBits && (bits >> size) != 0)
    throw std::invalid_argument("InclusionMask: bits beyond size");
  m.bits_ = bits;
  return m;
}

InclusionMask InclusionMask::from_string(const std::string& s) {
  InclusionMask m(static_cast<int>(s.size()));
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '1')
      m.bits_ |= (std::uint64_t{1} << i);
    else if (s[i] != '0')
      throw std::invalid_argument("InclusionMask: string must be 0/1");
  }
  return m;
}

int InclusionMask::popcount() const { return std::popcount(bits_); }

InclusionMask InclusionMask::with_flipped(int i) const {
  if (i < 0 || i >= size_) throw std::out_of_range("InclusionMask: flip index");
  InclusionMask m = *this;
  m.bits_ ^= (std::uint64_t{1} << i);
  return m;
}

std::string InclusionMask::to_string() const {
  std::string s(static_cast<std::size_t>(size_), '0');
  for (int i = 0; i < size_; ++i)
    if (test(i)) s[static_cast<std::size_t>(i)] = '1';
  return s;
}

double uniform_log_prior(int size) {
  if (size < 0) throw std::invalid_argument("uniform_log_prior: negative size");
  return -static_cast<double>(size) * std::log(2.0);
}

InclusionMask propose_flip(const InclusionMask& mask, Rng& rng) {
  if (mask.size() < 1) throw std::invalid_argument("propose_flip: empty space");
  const int idx = static_cast<int>(rng.below(static_cast<std::uint64_t>(mask.size())));
  return mask.with_flipped(idx);
}

std::vector<InclusionMask> enumerate_all(int size, int cap) {
  if (size < 0) throw std::invalid_argument("enumerate_all: negative size");
  if (size > cap)
    throw std::invalid_argument(
        "enumerate_all: K=" + std::to_string(size) + " exceeds the enumeration cap " +
        std::to_string(cap) + "; use the MC3 sampler (bma-mc3) instead");
  const std::uint64_t count = std::uint64_t{1} << size;
  std::vector<InclusionMask> all;
  all.reserve(count);
  for (std::uint64_t m = 0; m < count; ++m) {
    // ascending binary order with column 0 as the most significant position
    std::uint64_t bits = 0;
    for (int i = 0; i < size; ++i)
      if ((m >> (size - 1 - i)) & 1u) bits |= (std::uint64_t{1} << i);
    all.push_back(InclusionMask::from_bits(bits, size));
  }
  return all;
}

}  // namespace bma
