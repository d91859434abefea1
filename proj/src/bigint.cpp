#include "multsub/bigint.hpp"

#include <cmath>
#include <stdexcept>

namespace multsub {

void BigUint::trim() {
  while (limbs_.size() > 1 && limbs_.back() == 0) limbs_.pop_back();
}

BigUint& BigUint::operator+=(const BigUint& rhs) {
  const std::size_t n = std::max(limbs_.size(), rhs.limbs_.size());
  limbs_.resize(n, 0);
  unsigned __int128 carry = 0;
  for (std::size_t i = 0; i < n; ++i) {
    unsigned __int128 s = carry + limbs_[i];
    if (i < rhs.limbs_.size()) s += rhs.limbs_[i];
    limbs_[i] = static_cast<std::uint64_t>(s);
    carry = s >> 64;
  }
  if (carry) limbs_.push_back(static_cast<std::uint64_t>(carry));
  return *this;
}

BigUint& BigUint::mul_small(std::uint64_t f) {
  if (f == 0) {
    limbs_.assign(1, 0);
    return *this;
  }
  unsigned __int128 carry = 0;
  for (auto& limb : limbs_) {
    unsigned __int128 p = static_cast<unsigned __int128>(limb) * f + carry;
    limb = static_cast<std::uint64_t>(p);
    carry = p >> 64;
  }
  while (carry) {
    limbs_.push_back(static_cast<std::uint64_t>(carry));
    carry >>= 64;
  }
  return *this;
}

BigUint BigUint::operator*(const BigUint& rhs) const {
  BigUint out;
  out.limbs_.assign(limbs_.size() + rhs.limbs_.size(), 0);
  for (std::size_t i = 0; i < limbs_.size(); ++i) {
    if (limbs_[i] == 0) continue;
    unsigned __int128 carry = 0;
    for (std::size_t k = 0; k < rhs.limbs_.size(); ++k) {
      unsigned __int128 cur = out.limbs_[i + k] + carry +
                              static_cast<unsigned __int128>(limbs_[i]) * rhs.limbs_[k];
      out.limbs_[i + k] = static_cast<std::uint64_t>(cur);
      carry = cur >> 64;
    }
    std::size_t k = i + rhs.limbs_.size();
    while (carry) {
      unsigned __int128 cur = out.limbs_[k] + carry;
      out.limbs_[k] = static_cast<std::uint64_t>(cur);
      carry = cur >> 64;
      ++k;
    }
  }
  out.trim();
  return out;
}

BigUint BigUint::pow(std::uint64_t base, std::uint64_t exp) {
  BigUint acc(1);
  BigUint b(base);
  while (exp) {
    if (exp & 1) acc = acc * b;
    exp >>= 1;
    if (exp) b = b * b;
  }
  return acc;
}

int BigUint::cmp(const BigUint& rhs) const {
  if (limbs_.size() != rhs.limbs_.size())
    return limbs_.size() < rhs.limbs_.size() ? -1 : 1;
  for (std::size_t i = limbs_.size(); i-- > 0;) {
    if (limbs_[i] != rhs.limbs_[i]) return limbs_[i] < rhs.limbs_[i] ? -1 : 1;
  }
  return 0;
}

std::size_t BigUint::bit_length() const {
  if (is_zero()) return 0;
  std::uint64_t top = limbs_.back();
  std::size_t bits = 0;
  while (top) {
    ++bits;
    top >>= 1;
  }
  return bits + 64 * (limbs_.size() - 1);
}

long double BigUint::log() const {
  if (is_zero()) return -std::numeric_limits<long double>::infinity();
  // Top ~128 bits carry all the precision a long double can hold.
  const std::size_t n = limbs_.size();
  long double mant = 0.0L;
  const std::size_t take = std::min<std::size_t>(n, 3);
  for (std::size_t i = 0; i < take; ++i)
    mant = mant * 18446744073709551616.0L + static_cast<long double>(limbs_[n - 1 - i]);
  const long double ln2 = 0.6931471805599453094172321214581766L;
  return std::log(mant) + static_cast<long double>(64.0L * (n - take)) * ln2;
}

double BigUint::log2() const {
  const long double ln2 = 0.6931471805599453094172321214581766L;
  return static_cast<double>(log() / ln2);
}

std::string BigUint::to_string() const {
  // Repeated division by 1e19; slow but only used for report output.
  std::vector<std::uint64_t> work(limbs_);
  std::string out;
  const std::uint64_t chunk = 10000000000000000000ULL;
  while (true) {
    bool zero = true;
    unsigned __int128 rem = 0;
    for (std::size_t i = work.size(); i-- > 0;) {
      unsigned __int128 cur = (rem << 64) | work[i];
      work[i] = static_cast<std::uint64_t>(cur / chunk);
      rem = cur % chunk;
      if (work[i]) zero = false;
    }
    std::string part = std::to_string(static_cast<std::uint64_t>(rem));
    if (zero) {
      out = part + out;
      break;
    }
    out = std::string(19 - part.size(), '0') + part + out;
  }
  return out;
}

int cmp_pow(std::uint64_t a, std::uint64_t ea, std::uint64_t b, std::uint64_t eb) {
  if (a == 0 || b == 0) throw std::invalid_argument("cmp_pow: zero base");
  if (a == 1 && b == 1) return 0;
  if (a == 1) return eb == 0 ? 0 : -1;
  if (b == 1) return ea == 0 ? 0 : 1;
  if (ea == 0 && eb == 0) return 0;
  const long double la = static_cast<long double>(ea) * std::log(static_cast<long double>(a));
  const long double lb = static_cast<long double>(eb) * std::log(static_cast<long double>(b));
  const long double margin = 1e-9L * (1.0L + std::max(la, lb));
  if (la - lb > margin) return 1;
  if (lb - la > margin) return -1;
  // Near-tie: decide exactly. Guard against absurd exponents.
  if (la > 1.0e7L) throw std::overflow_error("cmp_pow: exact comparison too large");
  return BigUint::pow(a, ea).cmp(BigUint::pow(b, eb));
}

}  // namespace multsub
