#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "multsub/entropy.hpp"

using namespace multsub;
using namespace testutil;

namespace {

struct Setup {
  SystemSpec spec;
  OmegaModel model;
  ParamSchedule sched;
  explicit Setup(SystemSpec s) : spec(s), model(spec), sched(build_schedule(spec)) {}
};

MeasureSpec uniform_bernoulli(const OmegaModel& om) {
  MeasureSpec ms;
  ms.kind = MeasureSpec::Kind::Bernoulli;
  ms.weights.assign(om.tuple_count(), 0.0);
  int alive = 0;
  for (TupleId t = 0; t < om.tuple_count(); ++t) alive += om.tuple_alive(t) ? 1 : 0;
  for (TupleId t = 0; t < om.tuple_count(); ++t)
    if (om.tuple_alive(t)) ms.weights[t] = 1.0 / alive;
  return ms;
}

MeasureSpec random_bernoulli(const OmegaModel& om, Rng& rng) {
  MeasureSpec ms;
  ms.kind = MeasureSpec::Kind::Bernoulli;
  ms.weights.assign(om.tuple_count(), 0.0);
  double sum = 0.0;
  for (TupleId t = 0; t < om.tuple_count(); ++t)
    if (om.tuple_alive(t)) sum += ms.weights[t] = 0.05 + rng.next_double();
  for (auto& w : ms.weights) w /= sum;
  return ms;
}

MeasureSpec random_markov(const OmegaModel& om, Rng& rng) {
  MeasureSpec ms;
  ms.kind = MeasureSpec::Kind::Markov;
  const int n = om.tuple_count();
  ms.initial.assign(n, 0.0);
  ms.transition.assign(n, std::vector<double>(n, 0.0));
  double isum = 0.0;
  for (TupleId t = 0; t < n; ++t)
    if (om.tuple_alive(t)) isum += ms.initial[t] = 0.05 + rng.next_double();
  for (auto& w : ms.initial) w /= isum;
  const bool is_sft = om.spec().omega.kind == OmegaSpec::Kind::Sft;
  for (TupleId a = 0; a < n; ++a) {
    if (!om.tuple_alive(a)) continue;
    double rsum = 0.0;
    for (TupleId b = 0; b < n; ++b) {
      if (!om.tuple_alive(b)) continue;
      if (is_sft && !om.pruned_matrix()[a][b]) continue;
      rsum += ms.transition[a][b] = 0.05 + rng.next_double();
    }
    for (auto& w : ms.transition[a]) w /= rsum;
  }
  return ms;
}

// Hand-coded three-axis formulas, both branches of the dichotomy.
double d3_series_oracle(const Measure& mu, int P) {
  const auto& sc = mu.schedule();
  REQUIRE(sc.d == 3);
  const double q = sc.q;
  const double g2 = static_cast<double>(sc.log_ratio(1));
  const double g3 = static_cast<double>(sc.log_ratio(2));
  const int j2 = sc.lag_prev[1];
  const int j3 = sc.lag_prev[2];
  const int n2 = sc.carry[1];
  auto H = [&](int a, int b, int p) {
    return mu.partition_entropy({std::max(a, 0), std::max(b, 0), p});
  };
  double s = 0.0;
  for (int p = 1; p <= j3; ++p) s += (q - 1) * (q - 1) / std::pow(q, p + 1) * H(0, 0, p);
  const int mid_hi = n2 == 0 ? j2 + j3 : j2 + j3 + 1;
  for (int p = j3 + 1; p <= mid_hi; ++p) {
    s += (q - 1) * (g3 * std::pow(q, j3 + 1) - 1) / std::pow(q, p + 1) * H(0, p - j3, p);
    s += (q - 1) * (1 - g3 * std::pow(q, j3)) / std::pow(q, p) * H(0, p - j3 - 1, p);
  }
  if (n2 == 0) {
    for (int p = j2 + j3 + 1; p <= P; ++p) {
      s += (q - 1) * (g2 * g3 * std::pow(q, j2 + j3 + 1) - 1) / std::pow(q, p + 1) *
           H(p - j2 - j3, p - j3, p);
      s += (q - 1) * (g3 * std::pow(q, j3) - g2 * g3 * std::pow(q, j2 + j3)) /
           std::pow(q, p) * H(p - j2 - j3 - 1, p - j3, p);
      s += (q - 1) * (1 - g3 * std::pow(q, j3)) / std::pow(q, p) *
           H(p - j2 - j3 - 1, p - j3 - 1, p);
    }
  } else {
    for (int p = j2 + j3 + 2; p <= P; ++p) {
      s += (q - 1) * (g3 * std::pow(q, j3 + 1) - 1) / std::pow(q, p + 1) *
           H(p - j2 - j3 - 1, p - j3, p);
      s += (q - 1) * (g2 * g3 * std::pow(q, j2 + j3 + 1) - g3 * std::pow(q, j3)) /
           std::pow(q, p) * H(p - j2 - j3 - 1, p - j3 - 1, p);
      s += (q - 1) * (1 - g2 * g3 * std::pow(q, j2 + j3 + 1)) / std::pow(q, p) *
           H(p - j2 - j3 - 2, p - j3 - 1, p);
    }
  }
  return s;
}

}  // namespace

TEST_SUITE("entropy") {

TEST_CASE("basic partition entropies") {
  Setup s(full_shift(2, {3, 2}));
  Measure mu(s.model, s.sched, uniform_bernoulli(s.model));
  CHECK(partition_entropy(mu, {0, 1}) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(partition_entropy(mu, {1, 1}) == doctest::Approx(std::log2(6.0)).epsilon(1e-12));
}

TEST_CASE("subadditivity and the conditional chain rule") {
  Setup s(sft(2, {3, 2}, example2_matrix()));
  Rng rng(31);
  for (int trial = 0; trial < 5; ++trial) {
    Measure mu(s.model, s.sched, random_markov(s.model, rng));
    const double hq = partition_entropy(mu, {0, 4});
    const double hp = partition_entropy(mu, {2, 2});
    const double hj = partition_entropy(mu, {2, 4});
    CHECK(hj <= hp + hq + 1e-10);
    CHECK(hj >= std::max(hp, hq) - 1e-10);
    // Chain rule against explicit conditionals.
    double cond = 0.0;
    for (const auto& w : s.model.enumerate_prefixes({0, 4})) {
      const double mq = mu.mass(w);
      if (mq <= 0.0) continue;
      for (const auto& f : s.model.enumerate_prefixes({2, 4})) {
        if (f.digits[1] != w.digits[1]) continue;
        const double mj = mu.mass(f);
        if (mj <= 0.0) continue;
        cond -= mj * std::log2(mj / mq);
      }
    }
    CHECK(hj == doctest::Approx(hq + cond * std::log(2.0) /
                                         static_cast<double>(s.sched.log_m[1]))
                    .epsilon(1e-9));
  }
}

TEST_CASE("uniform product measure fills the square") {
  Setup s(full_shift(2, {3, 2}));
  Measure mu(s.model, s.sched, uniform_bernoulli(s.model));
  auto dim = pmu_dimension_series(mu, 40);
  CHECK(dim.value <= 2.0 + 1e-12);
  CHECK(dim.upper >= 2.0 - 1e-12);
  CHECK(2.0 - dim.value <= dim.tail_bound + 1e-12);
}

TEST_CASE("the dimension-maximizing measure attains the solved dimension") {
  Setup s(sft(2, {3, 2}, example2_matrix()));
  auto tv = solve_t(s.model, s.sched);
  Measure mu(s.model, s.sched, MeasureSpec{.kind = MeasureSpec::Kind::Optimal}, &tv);
  auto series = pmu_dimension_series(mu, 40);
  auto dim = hausdorff_dimension(s.sched, tv);
  CHECK(series.value == doctest::Approx(1.878).epsilon(1e-3));
  CHECK(dim.value >= series.value - 1e-9);
  CHECK(dim.value <= series.upper + 1e-9);
}

TEST_CASE("general machinery equals the dedicated two-axis series") {
  Rng rng(5);
  std::vector<Setup> setups;
  setups.emplace_back(sft(2, {3, 2}, example2_matrix()));
  setups.emplace_back(carpet(2, {4, 2}, {{0, 0}, {1, 0}, {2, 1}}));
  setups.emplace_back(full_shift(3, {5, 2}));
  for (auto& s : setups) {
    for (int trial = 0; trial < 3; ++trial) {
      MeasureSpec ms = s.spec.omega.kind == OmegaSpec::Kind::Sft
                           ? random_markov(s.model, rng)
                           : random_bernoulli(s.model, rng);
      Measure mu(s.model, s.sched, ms);
      auto general = pmu_dimension_series(mu, 25);
      auto dedicated = pmu_dimension_series_2d(mu, 25);
      CHECK(general.value == doctest::Approx(dedicated.value).epsilon(1e-10));
    }
  }
}

TEST_CASE("three-axis formulas, both branches") {
  SUBCASE("carry 0 instance 12,4,2") {
    Setup s(full_shift(2, {12, 4, 2}));
    REQUIRE(s.sched.carry[1] == 0);
    Rng rng(7);
    for (int trial = 0; trial < 3; ++trial) {
      Measure mu(s.model, s.sched, random_bernoulli(s.model, rng));
      auto general = pmu_dimension_series(mu, 30);
      CHECK(general.value == doctest::Approx(d3_series_oracle(mu, 30)).epsilon(1e-12));
    }
    Measure mk(s.model, s.sched, random_markov(s.model, rng));
    auto general = pmu_dimension_series(mk, 6);
    CHECK(general.value == doctest::Approx(d3_series_oracle(mk, 6)).epsilon(1e-12));
  }
  SUBCASE("carry 1 instance 8,3,2") {
    Setup s(full_shift(2, {8, 3, 2}));
    REQUIRE(s.sched.carry[1] == 1);
    Rng rng(13);
    for (int trial = 0; trial < 3; ++trial) {
      Measure mu(s.model, s.sched, random_bernoulli(s.model, rng));
      auto general = pmu_dimension_series(mu, 30);
      CHECK(general.value == doctest::Approx(d3_series_oracle(mu, 30)).epsilon(1e-12));
    }
    Measure mk(s.model, s.sched, random_markov(s.model, rng));
    auto general = pmu_dimension_series(mk, 6);
    CHECK(general.value == doctest::Approx(d3_series_oracle(mk, 6)).epsilon(1e-12));
  }
}

TEST_CASE("no measure beats the maximizer") {
  Setup s(sft(2, {3, 2}, example2_matrix()));
  auto tv = solve_t(s.model, s.sched);
  const double dim = hausdorff_dimension(s.sched, tv).value;
  Rng rng(23);
  for (int trial = 0; trial < 20; ++trial) {
    Measure mu(s.model, s.sched, random_markov(s.model, rng));
    auto series = pmu_dimension_series(mu, 14);
    CHECK(series.value <= dim + 1e-9);
  }
}

TEST_CASE("widening the series never leaves the previous bracket") {
  Setup s(sft(2, {3, 2}, example2_matrix()));
  auto tv = solve_t(s.model, s.sched);
  Measure mu(s.model, s.sched, MeasureSpec{.kind = MeasureSpec::Kind::Optimal}, &tv);
  auto prev = pmu_dimension_series(mu, 6);
  for (int P : {8, 12, 16, 24}) {
    auto cur = pmu_dimension_series(mu, P);
    CHECK(cur.value >= prev.lower - 1e-12);
    CHECK(cur.value <= prev.upper + 1e-12);
    prev = cur;
  }
}

TEST_CASE("disintegration condition and the identity gap") {
  SUBCASE("product measures satisfy the identity") {
    Setup s(full_shift(2, {3, 2}));
    Rng rng(3);
    Measure mu(s.model, s.sched, random_bernoulli(s.model, rng));
    auto rep = ly_check(mu, 5, 48);
    CHECK(rep.condition_holds_to_depth);
    CHECK(std::abs(rep.gap) <= 1e-10);
  }
  SUBCASE("point mass: everything vanishes") {
    Setup s(full_shift(2, {3, 2}));
    MeasureSpec pm;
    pm.kind = MeasureSpec::Kind::Bernoulli;
    pm.weights.assign(6, 0.0);
    pm.weights[4] = 1.0;
    Measure mu(s.model, s.sched, pm);
    auto rep = ly_check(mu, 5, 48);
    CHECK(rep.condition_holds_to_depth);
    CHECK(rep.dim_h_pmu.value == doctest::Approx(0.0));
    CHECK(std::abs(rep.gap) <= 1e-12);
  }
  SUBCASE("coupled construction breaks the identity") {
    Setup s(sft(2, {3, 2}, parity_coupled_matrix()));
    MeasureSpec ms;
    ms.kind = MeasureSpec::Kind::Markov;
    ms.initial = {1.0 / 3, 0, 1.0 / 3, 0, 1.0 / 3, 0};
    ms.transition.assign(6, std::vector<double>(6, 0.0));
    for (TupleId a = 0; a < 6; ++a)
      for (TupleId b = 0; b < 6; ++b)
        if (parity_coupled_matrix()[a][b]) ms.transition[a][b] = 1.0 / 3;
    Measure mu(s.model, s.sched, ms);
    auto rep = ly_check(mu, 6, 48);
    CHECK_FALSE(rep.condition_holds_to_depth);
    CHECK(rep.gap > 0.1);
    // Closed-form oracle: (1 - gamma) H(2/3, 1/3) / 2 in base two.
    const double gamma = std::log(2.0) / std::log(3.0);
    const double h = std::log2(3.0) - 2.0 / 3.0;
    CHECK(rep.gap == doctest::Approx((1 - gamma) * h / 2).epsilon(1e-8));
  }
}

}  // TEST_SUITE
