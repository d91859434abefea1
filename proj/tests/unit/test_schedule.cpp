#include <cmath>
#include <numeric>

#include "doctest.h"
#include "helpers.hpp"
#include "multsub/bigint.hpp"
#include "multsub/rng.hpp"
#include "multsub/schedule.hpp"

using namespace multsub;
using namespace testutil;

namespace {

// Independent derivation of the lag exponents by exhaustive inequality check
// over candidate exponents 0..8, straight from the defining double bound.
int lag_oracle(int q, int base, int target) {
  for (int j = 0; j <= 8; ++j) {
    std::uint64_t lo = 1, hi = 1;
    for (int i = 0; i < j; ++i) lo *= q;
    hi = lo * q;
    bool left = cmp_pow(base, lo, target, 1) <= 0;   // q^j <= log target / log base
    bool right = cmp_pow(base, hi, target, 1) > 0;   // < q^{j+1}
    if (left && right) return j;
  }
  return -1;
}

ParamSchedule sched_for(const SystemSpec& s) { return build_schedule(s); }

}  // namespace

TEST_SUITE("schedule") {

TEST_CASE("classic two-axis parameters") {
  auto sc = sched_for(full_shift(2, {3, 2}));
  CHECK(static_cast<double>(sc.log_ratio(1)) ==
        doctest::Approx(std::log(2.0) / std::log(3.0)).epsilon(1e-15));
  CHECK(sc.lag_prev[1] == 0);
  CHECK(sc.N == 2);
  CHECK(sc.chi_head[0] == ChiStep{1, 1});
  CHECK(sc.chi_head[1] == ChiStep{0, 1});
}

TEST_CASE("equal bases collapse to the product-alphabet case") {
  auto sc = sched_for(full_shift(3, {5, 5}));
  CHECK(static_cast<double>(sc.log_ratio(1)) == doctest::Approx(1.0));
  CHECK(sc.lag_prev[1] == 0);
  CHECK(sc.pair_scale(1, 17) == 17);  // identity scaling map
  CHECK(sc.N == 2);
}

TEST_CASE("sponge parameters match the exhaustive-inequality oracle") {
  auto sc = sched_for(full_shift(2, {12, 4, 2}));
  CHECK(sc.lag_prev[2] == 1);  // adjacent pair (4,2)
  CHECK(sc.lag_prev[2] == lag_oracle(2, 2, 4));
  CHECK(sc.lag_prev[1] == 0);  // adjacent pair (12,4)
  CHECK(sc.lag_prev[1] == lag_oracle(2, 4, 12));
  CHECK(sc.lag_last[1] == 1);
  CHECK(sc.lag_last[0] == 1);
  CHECK(sc.lag_last[0] == lag_oracle(2, 2, 12));
  CHECK(sc.carry[1] == 0);
  CHECK(sc.carry[2] == 0);
  CHECK(sc.N == 4);
  // The exact tie 2^(2^1) = 4 must be on record.
  bool tie_noted = false;
  for (const auto& w : sc.warnings) tie_noted |= w.find("boundary") != std::string::npos;
  CHECK(tie_noted);
}

TEST_CASE("scaling maps are exact ceilings") {
  auto sc = sched_for(full_shift(2, {3, 2}));
  CHECK(sc.pair_scale(1, 5) == 8);  // 2^8 = 256 >= 3^5 = 243 > 2^7
  CHECK(sc.pair_scale(1, 0) == 0);
  CHECK(sc.scale_depth(1, 5) == 8);
  auto sp = sched_for(full_shift(2, {12, 4, 2}));
  CHECK(sp.scale_depth(0, 7) == 7);
  // cross-check m2^L >= m1^n > m2^(L-1)
  long long L = sp.pair_scale(1, 7);
  CHECK(cmp_pow(4, L, 12, 7) >= 0);
  CHECK(cmp_pow(4, L - 1, 12, 7) < 0);
}

TEST_CASE("scaled depth stays inside its lag window up to one million") {
  for (auto m : std::vector<std::vector<int>>{{3, 2}, {12, 4, 2}}) {
    auto sc = sched_for(full_shift(2, m));
    const int d = sc.d;
    long long q_lo = 1, q_hi = 1;
    for (int i = 0; i < sc.lag_last[0]; ++i) q_lo *= sc.q;
    q_hi = q_lo * sc.q;
    // q^{p1} n <= L_d...L_1(n) < q^{p1+1} n for n past a computable start.
    const long double excess =
        std::pow(static_cast<long double>(sc.q), sc.lag_last[0] + 1) -
        sc.log_m[0] / sc.log_m[d - 1];
    long long n0 = static_cast<long long>(std::ceil(static_cast<long double>(d) / excess)) + d;
    for (long long n = n0; n <= 1000000; n = n < 4096 ? n + 1 : n + 997) {
      long long depth = sc.scale_depth(d - 1, n);
      CHECK(q_lo * n <= depth);
      CHECK(depth < q_hi * n);
    }
  }
}

TEST_CASE("series coefficients: closed forms") {
  auto sc = sched_for(full_shift(2, {3, 2}));
  const double gamma = static_cast<double>(sc.log_ratio(1));
  // Head-family coefficient at p=1 for q=2 (needs an instance with a lag).
  auto sc42 = sched_for(full_shift(2, {4, 2}));
  CHECK(sc42.delta(2, 1, 1) == doctest::Approx(0.25).epsilon(1e-15));
  // (q^{j+1} gamma - 1)(q-1)/q^{p+1} at j=0, p=1.
  CHECK(sc.delta(1, 0, 1) == doctest::Approx((2 * gamma - 1) / 4).epsilon(1e-12));
  CHECK(sc.delta(1, 0, 1) == doctest::Approx(0.06546487678).epsilon(1e-9));
  CHECK(sc.delta(1, 1, 1) == doctest::Approx((1 - gamma) / 2).epsilon(1e-12));
  CHECK_THROWS_AS(sc.delta(1, 0, 0), IndexOutOfSchedule);
  CHECK_THROWS_AS(sc.delta(5, 0, 1), IndexOutOfSchedule);
}

TEST_CASE("coefficient for the first interval family matches finite-n counting") {
  // #{i in I^{1,0}_p : q does not divide i} / Lambda(n) at n = 2^24.
  auto sc = sched_for(full_shift(2, {3, 2}));
  const long long n = 1 << 24;
  const long long lam = sc.scale_depth(1, n);
  const int p = 1;
  // I^{1,0}_p = (Lambda/q^p, L_1(n)/q^{p-p1-1}]; here p = 1, p1 = 0: (Lambda/2, n]
  const long long lo = lam / 2, hi = n;
  long long count = 0;
  for (long long i = lo + 1; i <= hi; ++i)
    if (i % 2 != 0) ++count;
  CHECK(static_cast<double>(count) / static_cast<double>(lam) ==
        doctest::Approx(sc.delta(1, 0, p)).epsilon(1e-3));
}

TEST_CASE("delta series sums to (q-1)/q with its analytic tail") {
  Rng rng(42);
  for (int trial = 0; trial < 40; ++trial) {
    int d = 2 + static_cast<int>(rng.next_index(3));
    int q = 2 + static_cast<int>(rng.next_index(3));
    std::vector<int> m(d);
    m[0] = 4 + static_cast<int>(rng.next_index(12));
    for (int a = 1; a < d; ++a) m[a] = 2 + static_cast<int>(rng.next_index(m[a - 1] - 1));
    auto sc = sched_for(full_shift(q, m));
    const int P = 60;
    double sum = 0.0;
    for (const auto& t : sc.terms_through(P)) {
      CHECK(t.coeff >= -1e-15);
      sum += t.coeff;
    }
    sum += (q - 1.0) / std::pow(static_cast<double>(q), P);  // exact tail of the sum
    CHECK(sum == doctest::Approx((q - 1.0) / q).epsilon(1e-10));
    // Term shapes are valid staircases.
    for (const auto& t : sc.terms_through(8)) {
      for (int a = 1; a < d; ++a) CHECK(t.shape[a - 1] <= t.shape[a]);
      CHECK(t.shape[d - 1] == t.p);
    }
  }
}

TEST_CASE("omega weights: recurrence equals closed forms on random systems") {
  Rng rng(7);
  int trials = 0;
  for (int trial = 0; trial < 100; ++trial) {
    int d = 2 + trial % 3;
    int q = 2 + static_cast<int>(rng.next_index(4));
    std::vector<int> m(d);
    m[0] = 6 + static_cast<int>(rng.next_index(58));
    for (int a = 1; a < d; ++a)
      m[a] = std::max(2, static_cast<int>(rng.next_index(m[a - 1])) + 1);
    for (int a = 1; a < d; ++a) m[a] = std::min(m[a], m[a - 1]);
    auto sc = sched_for(full_shift(q, m));
    ++trials;
    for (int k = 1; k <= sc.N + 1; ++k)
      CHECK(sc.omega[k] == doctest::Approx(sc.omega_closed_form(k)).epsilon(1e-12));
    CHECK(sc.omega[1] == doctest::Approx((q - 1.0) / q).epsilon(1e-15));
    if (sc.lag_prev[d - 1] >= 1)
      CHECK(sc.omega[2] == doctest::Approx(1.0 / q).epsilon(1e-12));
    CHECK(sc.homogeneity == doctest::Approx(1.0 / q).epsilon(1e-10));
  }
  CHECK(trials == 100);
}

TEST_CASE("the last weight in the plain two-axis case is 1/((q-1) gamma)") {
  auto sc = sched_for(full_shift(2, {3, 2}));
  const double gamma = static_cast<double>(sc.log_ratio(1));
  CHECK(sc.omega[sc.N + 1] == doctest::Approx(1.0 / gamma).epsilon(1e-12));
  CHECK(sc.omega[sc.N + 1] == doctest::Approx(1.5849625007).epsilon(1e-9));
}

TEST_CASE("two-axis terms reproduce the three printed coefficient families") {
  for (auto m : std::vector<std::vector<int>>{{3, 2}, {4, 2}, {5, 3}, {9, 2}}) {
    for (int q : {2, 3}) {
      auto sc = sched_for(full_shift(q, m));
      const double gamma = static_cast<double>(sc.log_ratio(1));
      const int j = sc.lag_prev[1];
      const double qd = q;
      for (const auto& t : sc.terms_through(12)) {
        if (t.s == 2) {
          CHECK(t.p <= j);
          CHECK(t.coeff ==
                doctest::Approx((qd - 1) * (qd - 1) / std::pow(qd, t.p + 1)).epsilon(1e-12));
          CHECK(t.shape == std::vector<int>{0, t.p});
        } else if (t.t == 0) {
          CHECK(t.coeff == doctest::Approx((std::pow(qd, j + 1) * gamma - 1) * (qd - 1) /
                                           std::pow(qd, t.p + 1))
                               .epsilon(1e-12));
          CHECK(t.shape == std::vector<int>{t.p - j, t.p});
        } else {
          CHECK(t.coeff ==
                doctest::Approx((1 - std::pow(qd, j) * gamma) * (qd - 1) / std::pow(qd, t.p))
                    .epsilon(1e-12));
          CHECK(t.shape == std::vector<int>{t.p - j - 1, t.p});
        }
      }
    }
  }
}

TEST_CASE("sigma orderings") {
  SUBCASE("two axes: the only permutation is the identity") {
    auto sc = sched_for(full_shift(2, {3, 2}));
    CHECK(sc.sigma[0] == std::vector<int>{0});
  }
  SUBCASE("sponge 12,4,2: keys already ascending") {
    auto sc = sched_for(full_shift(2, {12, 4, 2}));
    CHECK(sc.sigma[0] == std::vector<int>{0, 1});
    // Numeric oracle from the defining sequence at large n.
    const long long n = 1 << 20;
    double v1 = static_cast<double>(sc.scale_depth(0, n)) * 4.0;  // /q^{p-p1-1} at p-2... scaled equally
    double v2 = static_cast<double>(sc.scale_depth(1, n)) * 4.0 / 4.0 * 4.0;
    // K_t ~ q^{p_t+1} L_t...L_1(n)/n normalized; ascending order means axis 0 first.
    double k1 = std::pow(2.0, sc.lag_last[0] + 1) * static_cast<double>(sc.scale_depth(0, n)) /
                static_cast<double>(sc.scale_depth(2, n));
    double k2 = std::pow(2.0, sc.lag_last[1] + 1) * static_cast<double>(sc.scale_depth(1, n)) /
                static_cast<double>(sc.scale_depth(2, n));
    CHECK(k1 < k2);
    (void)v1;
    (void)v2;
  }
  SUBCASE("8,3,2 swaps the order") {
    auto sc = sched_for(full_shift(2, {8, 3, 2}));
    CHECK(sc.carry[1] == 1);  // the second branch of the three-axis dichotomy
    CHECK(sc.sigma[0] == std::vector<int>{1, 0});
  }
}

TEST_CASE("reveal order reproduces the printed three-axis patterns") {
  SUBCASE("8,3,2 (swapped regime)") {
    auto sc = sched_for(full_shift(2, {8, 3, 2}));
    CHECK(sc.N == 5);
    std::vector<ChiStep> want = {{2, 1}, {1, 1}, {2, 2}, {0, 1}, {1, 2}, {2, 3}, {0, 2}, {1, 3}};
    for (std::size_t i = 0; i < want.size(); ++i) CHECK(sc.chi_at(static_cast<int>(i) + 1) == want[i]);
    CHECK(sc.block_axes() == std::vector<int>{2, 0, 1});
  }
  SUBCASE("12,4,2 (tie resolved toward the later axis)") {
    auto sc = sched_for(full_shift(2, {12, 4, 2}));
    std::vector<ChiStep> want = {{2, 1}, {2, 2}, {1, 1}, {0, 1}, {2, 3}, {1, 2}, {0, 2}};
    for (std::size_t i = 0; i < want.size(); ++i) CHECK(sc.chi_at(static_cast<int>(i) + 1) == want[i]);
    bool tie_noted = false;
    for (const auto& w : sc.warnings) tie_noted |= w.find("tie") != std::string::npos ||
                                                    w.find("boundary") != std::string::npos;
    CHECK(tie_noted);
  }
  SUBCASE("periodicity past the boundary") {
    auto sc = sched_for(full_shift(2, {8, 3, 2}));
    for (int i = sc.N + 1; i <= sc.N + 9; ++i) {
      CHECK(sc.chi_at(i + sc.d).axis == sc.chi_at(i).axis);
      CHECK(sc.chi_at(i + sc.d).pos == sc.chi_at(i).pos + 1);
    }
  }
}

TEST_CASE("four-axis schedule sanity") {
  auto sc = sched_for(full_shift(2, {16, 8, 4, 2}));
  CHECK(sc.lag_last[0] == 2);
  CHECK(sc.carry[1] == 1);
  CHECK(sc.N == 8);
  auto depths = sc.chi_depths(sc.N);
  for (int a = 0; a < 4; ++a) CHECK(depths[a] == sc.lag_last[0] + 1 - sc.lag_last[a]);
}

TEST_CASE("tail bound is a true bound and shrinks") {
  auto sc = sched_for(full_shift(2, {3, 2}));
  CHECK(sc.series_tail_bound(20) < sc.series_tail_bound(10));
  // Entropy of any term is at most p log_{m2}(m1 m2); compare against the
  // summed coefficients past P.
  const int P = 10, Q = 40;
  double heavy = 0.0;
  for (const auto& t : sc.terms_through(Q))
    if (t.p > P) heavy += t.coeff * t.p * sc.log_md(6.0);
  CHECK(heavy <= sc.series_tail_bound(P));
}

}  // TEST_SUITE
