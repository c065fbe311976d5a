#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bma/rng.hpp"

namespace bma {

inline constexpr int kDefaultEnumerationCap = 25;

// One model out of the 2^K space: a bit per selectable column. The intercept
// is always included and never appears in the mask. Bit i corresponds to
// design column i; the string form reads left to right in column order.
class InclusionMask {
 public:
  static constexpr int kMaxBits = 64;

  InclusionMask() = default;  // empty space
  explicit InclusionMask(int size);
  static InclusionMask from_bits(std::uint64_t bits, int size);
  static InclusionMask from_string(const std::string& s);

  int size() const { return size_; }
  bool test(int i) const { return (bits_ >> i) & 1u; }
  int popcount() const;
  std::uint64_t bits() const { return bits_; }

  InclusionMask with_flipped(int i) const;
  std::string to_string() const;

  bool operator==(const InclusionMask& o) const = default;

 private:
  std::uint64_t bits_ = 0;
  int size_ = 0;
};

// log 2^-K, the uniform prior mass of every model. Constant across masks, so
// it cancels in every posterior-odds ratio.
double uniform_log_prior(int size);

// Single-flip proposal: Hamming distance exactly 1, flipped index uniform.
InclusionMask propose_flip(const InclusionMask& mask, Rng& rng);

// All 2^K masks in ascending binary order (first column = most significant
// position, matching the string form). Refuses above the enumeration cap.
std::vector<InclusionMask> enumerate_all(int size, int cap = kDefaultEnumerationCap);

}  // namespace bma
