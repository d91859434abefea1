#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace multsub {

// Unsigned big integer, just large enough for exact prefix counting and the
// integer-power comparisons that decide schedule parameters. Little-endian
// 64-bit limbs.
class BigUint {
 public:
  BigUint() : limbs_{0} {}
  explicit BigUint(std::uint64_t v) : limbs_{v} {}

  static BigUint pow(std::uint64_t base, std::uint64_t exp);

  BigUint& operator+=(const BigUint& rhs);
  BigUint& mul_small(std::uint64_t f);
  BigUint operator*(const BigUint& rhs) const;

  bool is_zero() const { return limbs_.size() == 1 && limbs_[0] == 0; }
  // -1, 0, +1
  int cmp(const BigUint& rhs) const;

  // Natural log; 0 maps to -inf.
  long double log() const;
  double log2() const;

  std::string to_string() const;
  std::uint64_t low64() const { return limbs_[0]; }
  std::size_t bit_length() const;

 private:
  void trim();
  std::vector<std::uint64_t> limbs_;
};

inline bool operator<(const BigUint& a, const BigUint& b) { return a.cmp(b) < 0; }
inline bool operator==(const BigUint& a, const BigUint& b) { return a.cmp(b) == 0; }
inline bool operator<=(const BigUint& a, const BigUint& b) { return a.cmp(b) <= 0; }

// Compares a^ea against b^eb exactly (-1, 0, +1). Uses long-double logs when
// the margin is decisive and exact big-integer powers otherwise, so boundary
// cases like 4^3 = 8^2 are resolved without rounding.
int cmp_pow(std::uint64_t a, std::uint64_t ea, std::uint64_t b, std::uint64_t eb);

}  // namespace multsub
