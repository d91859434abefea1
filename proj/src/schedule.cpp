#include "multsub/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "multsub/bigint.hpp"

namespace multsub {

namespace {

// Compare g_a * q^{-ra} with g_b * q^{-rb}, where g_x = log(m[d-1])/log(m[x]).
// Signed r so the same routine orders the sigma keys. Exact on ties.
int cmp_scaled(const ParamSchedule& sc, int a, long ra, int b, long rb) {
  const long double la = -static_cast<long double>(ra) * std::log(static_cast<long double>(sc.q)) -
                         std::log(sc.log_m[a]);
  const long double lb = -static_cast<long double>(rb) * std::log(static_cast<long double>(sc.q)) -
                         std::log(sc.log_m[b]);
  const long double margin = 1e-10L;
  if (la - lb > margin) return 1;
  if (lb - la > margin) return -1;
  // Near-tie: g_a q^{-ra} >= g_b q^{-rb}  <=>  q^{rb-ra} log m[b] >= log m[a].
  const long diff = rb - ra;
  std::uint64_t qe = 1;
  for (long i = 0; i < std::labs(diff); ++i) qe *= static_cast<std::uint64_t>(sc.q);
  int c = diff >= 0 ? cmp_pow(sc.m[b], qe, sc.m[a], 1) : cmp_pow(sc.m[b], 1, sc.m[a], qe);
  return c;
}

double scaled_value(const ParamSchedule& sc, int axis, long r) {
  return static_cast<double>(sc.log_m[sc.d - 1] / sc.log_m[axis] *
                             std::pow(static_cast<long double>(sc.q), -static_cast<long double>(r)));
}

}  // namespace

long long ParamSchedule::pair_scale(int axis, long long k) const {
  if (axis <= 0 || axis >= d) throw IndexOutOfSchedule("pair_scale: bad axis");
  if (k < 0) throw IndexOutOfSchedule("pair_scale: negative depth");
  if (k == 0) return 0;
  const long double ratio = log_m[axis - 1] / log_m[axis];
  long long t = static_cast<long long>(std::ceil(static_cast<long double>(k) * ratio - 1e-9L));
  if (t < 1) t = 1;
  if (k <= 65536) {
    // Exact adjustment: want the smallest t with m[axis]^t >= m[axis-1]^k.
    while (cmp_pow(m[axis], static_cast<std::uint64_t>(t), m[axis - 1],
                   static_cast<std::uint64_t>(k)) < 0)
      ++t;
    while (t > 1 && cmp_pow(m[axis], static_cast<std::uint64_t>(t - 1), m[axis - 1],
                            static_cast<std::uint64_t>(k)) >= 0)
      --t;
  }
  return t;
}

long long ParamSchedule::scale_depth(int axis, long long n) const {
  long long depth = n;
  for (int a = 1; a <= axis; ++a) depth = pair_scale(a, depth);
  return depth;
}

std::vector<int> ParamSchedule::ball_shape(int n) const {
  std::vector<int> shape(d);
  for (int a = 0; a < d; ++a) shape[a] = static_cast<int>(scale_depth(a, n));
  return shape;
}

ChiStep ParamSchedule::chi_at(int i) const {
  if (i < 1) throw IndexOutOfSchedule("chi index must be >= 1");
  if (i <= static_cast<int>(chi_head.size())) return chi_head[i - 1];
  const int over = i - N - 1;           // 0-based index past the first block boundary
  const int phase = over % d;
  const int rounds = over / d;
  ChiStep base = chi_head[N + phase];
  base.pos += rounds;
  return base;
}

std::vector<int> ParamSchedule::chi_depths(int steps) const {
  std::vector<int> depth(d, 0);
  for (int i = 1; i <= steps; ++i) {
    ChiStep st = chi_at(i);
    depth[st.axis] = std::max(depth[st.axis], st.pos);
  }
  return depth;
}

std::vector<int> ParamSchedule::block_axes() const {
  std::vector<int> axes(d);
  for (int i = 0; i < d; ++i) axes[i] = chi_head[N + i].axis;
  return axes;
}

double ParamSchedule::delta(int s, int t, int p) const {
  const double qd = q;
  if (s == d) {
    if (t != d - 1) throw IndexOutOfSchedule("head family requires t = d-1");
    if (p < 1 || p > lag_last[d - 2]) throw IndexOutOfSchedule("p outside head family range");
    return (qd - 1) * (qd - 1) / std::pow(qd, p + 1);
  }
  if (s < 1 || s > d - 1) throw IndexOutOfSchedule("block index out of range");
  const int s0 = s - 1;
  const int lo = lag_last[s0] + 1;
  const int hi = s0 == 0 ? INT32_MAX : lag_last[s0 - 1];
  if (p < lo || p > hi) throw IndexOutOfSchedule("p outside block range");
  const int r = t - s + 1;
  const auto& order = sigma[s0];
  const int len = static_cast<int>(order.size());
  if (r < 0 || r > len) throw IndexOutOfSchedule("t outside block range");
  auto keyhat = [&](int axis) {
    return std::pow(qd, lag_last[axis]) * static_cast<double>(tail_ratio(axis));
  };
  if (r == 0)
    return (qd * keyhat(order[0]) - 1.0) * (qd - 1) / std::pow(qd, p + 1);
  if (r == len)
    return (1.0 - keyhat(order[len - 1])) * (qd - 1) / std::pow(qd, p);
  return (keyhat(order[r]) - keyhat(order[r - 1])) * (qd - 1) / std::pow(qd, p);
}

std::vector<int> ParamSchedule::term_shape(int s, int t, int p) const {
  std::vector<int> shape(d, 0);
  shape[d - 1] = p;
  if (s == d) return shape;
  const int s0 = s - 1;
  const auto& order = sigma[s0];
  const int r = t - s + 1;
  std::vector<std::uint8_t> bumped(d, 0);
  for (int i = 0; i < r; ++i) bumped[order[i]] = 1;
  for (int a = s0; a <= d - 2; ++a) shape[a] = p - lag_last[a] - bumped[a];
  return shape;
}

std::vector<ParamSchedule::Term> ParamSchedule::terms_through(int pmax) const {
  if (pmax < lag_last[0] + 1)
    throw IndexOutOfSchedule("series needs at least " + std::to_string(lag_last[0] + 1) +
                             " terms");
  std::vector<Term> out;
  for (int p = 1; p <= lag_last[d - 2]; ++p)
    out.push_back({d, d - 1, p, delta(d, d - 1, p), term_shape(d, d - 1, p)});
  for (int s0 = d - 2; s0 >= 0; --s0) {
    const int s = s0 + 1;
    const int lo = lag_last[s0] + 1;
    const int hi = s0 == 0 ? pmax : lag_last[s0 - 1];
    for (int p = lo; p <= hi; ++p)
      for (int r = d - 1 - s0; r >= 0; --r)
        out.push_back({s, s - 1 + r, p, delta(s, s - 1 + r, p), term_shape(s, s - 1 + r, p)});
  }
  return out;
}

double ParamSchedule::omega_closed_form(int k) const {
  if (k == 1) return (q - 1.0) / q;
  if (k >= 2 && k <= N) return phi[k - 1] / phi[k - 2];
  if (k == N + 1) {
    const int lead = sigma[0][0];
    return std::pow(static_cast<double>(q), lag_last[0] - lag_last[lead]) /
           ((q - 1.0) * static_cast<double>(tail_ratio(lead)));
  }
  throw IndexOutOfSchedule("omega index out of range");
}

double ParamSchedule::series_tail_bound(int pmax) const {
  double log_all = 0.0;
  for (int a = 0; a < d; ++a) log_all += log_md(m[a]);
  const double qd = q;
  // sum_{p>P} p (q-1)^2 / q^{p+1} = q^{-P} (P+1 - P/q)
  return log_all * std::pow(qd, -pmax) * (pmax + 1 - pmax / qd);
}

ParamSchedule build_schedule(const SystemSpec& spec) {
  ParamSchedule sc;
  sc.q = spec.q;
  sc.d = spec.d();
  sc.m = spec.m;
  if (sc.q < 2) throw ConfigError("q must be >= 2");
  if (sc.d < 2) throw ConfigError("need at least two axes");
  sc.log_m.resize(sc.d);
  for (int a = 0; a < sc.d; ++a) sc.log_m[a] = std::log(static_cast<long double>(sc.m[a]));

  auto max_lag = [&](int base, int target) {
    // largest J >= 0 with base^(q^J) <= target, decided by exact powers
    int jv = 0;
    std::uint64_t qe = sc.q;
    while (true) {
      if (qe > 64 || cmp_pow(base, qe, target, 1) > 0) break;
      if (cmp_pow(base, qe, target, 1) == 0) {
        std::ostringstream os;
        os << "lag boundary hit exactly: " << base << "^" << qe << " = " << target
           << " (lower side taken)";
        sc.warnings.push_back(os.str());
      }
      ++jv;
      qe *= sc.q;
    }
    return jv;
  };

  sc.lag_prev.assign(sc.d, 0);
  for (int a = 1; a < sc.d; ++a) sc.lag_prev[a] = max_lag(sc.m[a], sc.m[a - 1]);
  sc.lag_last.assign(sc.d, 0);
  for (int a = 0; a < sc.d - 1; ++a) sc.lag_last[a] = max_lag(sc.m[sc.d - 1], sc.m[a]);

  sc.carry.assign(sc.d, 0);
  for (int a = 1; a < sc.d; ++a) {
    int suffix = 0;
    for (int b = a; b < sc.d; ++b) suffix += sc.lag_prev[b];
    sc.carry[a] = sc.lag_last[a - 1] - suffix;
    if (sc.carry[a] < 0 || sc.carry[a] > sc.d - 2)
      throw NonContracting("carry sequence outside [0, d-2]; schedule derivation broken");
  }
  for (int a = sc.d - 1; a > 1; --a)
    if (sc.carry[a - 1] != sc.carry[a] && sc.carry[a - 1] != sc.carry[a] + 1)
      throw NonContracting("carry sequence must step by 0 or 1");

  // sigma_s: ascending asymptotic key, ties by ascending axis (recorded).
  sc.sigma.assign(std::max(0, sc.d - 1), {});
  for (int s0 = 0; s0 <= sc.d - 2; ++s0) {
    std::vector<int> order;
    for (int a = s0; a <= sc.d - 2; ++a) order.push_back(a);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      int c = cmp_scaled(sc, a, -(sc.lag_last[a] + 1), b, -(sc.lag_last[b] + 1));
      if (c == 0) return a < b;
      return c < 0;
    });
    for (std::size_t i = 0; i + 1 < order.size(); ++i)
      if (cmp_scaled(sc, order[i], -(sc.lag_last[order[i]] + 1), order[i + 1],
                     -(sc.lag_last[order[i + 1]] + 1)) == 0)
        sc.warnings.push_back("sigma tie between axes " + std::to_string(order[i]) + " and " +
                              std::to_string(order[i + 1]) +
                              " (broken by ascending axis index)");
    sc.sigma[s0] = order;
  }

  sc.N = sc.d * (sc.lag_last[0] + 1);
  for (int a = 0; a < sc.d; ++a) sc.N -= sc.lag_last[a];

  // Coordinate-reveal merge: next digit of each axis, largest threshold first,
  // ties resolved toward the later axis (keeps shapes staircase).
  std::vector<long> next_r(sc.d, 0);
  const int steps = sc.N + sc.d;
  for (int i = 0; i < steps; ++i) {
    int best = -1;
    for (int a = 0; a < sc.d; ++a) {
      if (best < 0) {
        best = a;
        continue;
      }
      int c = cmp_scaled(sc, a, next_r[a], best, next_r[best]);
      if (c > 0 || (c == 0 && a > best)) best = a;
    }
    sc.chi_head.push_back({best, static_cast<int>(next_r[best]) + 1});
    ++next_r[best];
  }
  auto depth_n = sc.chi_depths(sc.N);
  for (int a = 0; a < sc.d; ++a)
    if (depth_n[a] != sc.lag_last[0] + 1 - sc.lag_last[a])
      throw NonContracting("reveal order diverges from the block-boundary profile");
  {
    std::vector<int> axes = sc.block_axes();
    std::sort(axes.begin(), axes.end());
    for (int a = 0; a < sc.d; ++a)
      if (axes[a] != a) throw NonContracting("block must reveal one digit per axis");
  }

  sc.phi.resize(sc.N + sc.d);
  for (int i = 0; i < sc.N + sc.d; ++i)
    sc.phi[i] = scaled_value(sc, sc.chi_head[i].axis, sc.chi_head[i].pos - 1);

  // Walk the series in chain order and attach one coefficient per reveal.
  sc.delta_chain.assign(sc.N, 0.0);
  {
    int pos = 0;
    auto expect = [&](int s, int t, int p) {
      const double dv = sc.delta(s, t, p);
      auto shape = sc.term_shape(s, t, p);
      auto reveal = sc.chi_depths(pos + 1);
      if (shape != reveal)
        throw NonContracting("series term at chain position " + std::to_string(pos + 1) +
                             " does not reveal the expected coordinate");
      sc.delta_chain[pos++] = dv;
    };
    for (int p = 1; p <= sc.lag_last[sc.d - 2]; ++p) expect(sc.d, sc.d - 1, p);
    for (int s0 = sc.d - 2; s0 >= 1; --s0)
      for (int p = sc.lag_last[s0] + 1; p <= sc.lag_last[s0 - 1]; ++p)
        for (int r = sc.d - 1 - s0; r >= 0; --r) expect(s0 + 1, s0 + r, p);
    const int p1 = sc.lag_last[0] + 1;
    for (int r = sc.d - 1; r >= 1; --r) expect(1, r, p1);
    if (pos != sc.N - 1) throw NonContracting("chain position count mismatch");
    // The last coefficient absorbs the whole geometric tail past the first
    // block boundary p1: sum_{p >= p1+1} (q-1)^2 / q^{p+1} = (q-1) / q^{p1+1}.
    sc.delta_chain[sc.N - 1] =
        sc.delta(1, 0, p1) + (sc.q - 1.0) / std::pow(static_cast<double>(sc.q), p1 + 1);
  }
  {
    double total = std::accumulate(sc.delta_chain.begin(), sc.delta_chain.end(), 0.0);
    if (std::abs(total - (sc.q - 1.0) / sc.q) > 1e-9)
      throw NonContracting("delta chain does not sum to (q-1)/q");
    for (double dv : sc.delta_chain)
      if (dv < -1e-12) throw NonContracting("negative series coefficient");
  }

  sc.omega.assign(sc.N + 2, 0.0);
  sc.omega[1] = (sc.q - 1.0) / sc.q;
  {
    std::vector<double> suffix(sc.N + 2, 0.0);
    for (int i = sc.N; i >= 1; --i) suffix[i] = suffix[i + 1] + sc.delta_chain[i - 1];
    for (int k = 2; k <= sc.N; ++k) sc.omega[k] = suffix[k] / suffix[k - 1];
    sc.omega[sc.N + 1] = 1.0 / (sc.q * sc.delta_chain[sc.N - 1]);
  }
  for (int k = 1; k <= sc.N + 1; ++k)
    if (std::abs(sc.omega[k] - sc.omega_closed_form(k)) > 1e-9)
      throw NonContracting("omega recurrence diverges from its closed form at k=" +
                           std::to_string(k));

  sc.omega_tilde = 1.0;
  for (int k = 1; k <= sc.N - sc.d + 1; ++k) sc.omega_tilde *= sc.omega[k];
  sc.block_solve_exp = 1.0 / (sc.omega_tilde * sc.omega[sc.N + 1]);
  sc.homogeneity = sc.omega[sc.N + 1];
  for (int k = 1; k <= sc.N; ++k) sc.homogeneity *= sc.omega[k];
  if (sc.homogeneity >= 1.0 - 1e-12)
    throw NonContracting("fixed-point homogeneity degree >= 1");

  return sc;
}

}  // namespace multsub
