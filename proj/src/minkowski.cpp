#include "multsub/minkowski.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace multsub {

namespace {

// Visible-axis threshold per position of a shape.
std::vector<int> first_axes(const std::vector<int>& shape) {
  const int d = static_cast<int>(shape.size());
  const int L = shape[d - 1];
  std::vector<int> fa(L + 1, 0);
  for (int pos = 1; pos <= L; ++pos) {
    int a = 0;
    while (a < d && shape[a] < pos) ++a;
    fa[pos] = a;
  }
  return fa;
}

}  // namespace

CountTable::CountTable(const OmegaModel& model) : model_(model) {}

const BigUint& CountTable::count(const std::vector<int>& shape) const {
  auto hit = by_shape_.find(shape);
  if (hit != by_shape_.end()) return hit->second;

  const int d = model_.d();
  const auto& spec = model_.spec();
  const int L = shape[d - 1];
  const auto fa = first_axes(shape);
  BigUint result(1);

  if (L == 0) {
    auto [pos0, ignored] = by_shape_.emplace(shape, std::move(result));
    return pos0->second;
  }

  switch (spec.omega.kind) {
    case OmegaSpec::Kind::Full: {
      for (int pos = 1; pos <= L; ++pos)
        for (int a = fa[pos]; a < d; ++a) result.mul_small(model_.base(a));
      break;
    }
    case OmegaSpec::Kind::Carpet: {
      // Columns are independent; count distinct visible projections per level.
      for (int pos = 1; pos <= L; ++pos) {
        std::set<long> seen;
        for (TupleId t : spec.omega.carpet) {
          long code = 0;
          for (int a = fa[pos]; a < d; ++a)
            code = code * model_.base(a) + model_.digit_of(t, a);
          seen.insert(code);
        }
        result.mul_small(seen.size());
      }
      break;
    }
    case OmegaSpec::Kind::Sft: {
      const int n = model_.tuple_count();
      const int words = (n + 63) / 64;
      auto column_candidates = [&](int pos, const std::vector<std::uint64_t>* reach) {
        // Map from visible digit code to the reachable tuple set it allows.
        std::map<long, std::vector<std::uint64_t>> out;
        for (TupleId v = 0; v < n; ++v) {
          if (!model_.tuple_alive(v)) continue;
          bool allowed = false;
          std::vector<std::uint64_t> mask(words, 0);
          if (reach == nullptr) {
            allowed = true;
          } else {
            for (int w = 0; w < words && !allowed; ++w) {
              std::uint64_t bits = (*reach)[w];
              while (bits) {
                const int b = __builtin_ctzll(bits);
                bits &= bits - 1;
                if (model_.pruned_matrix()[(w << 6) | b][v]) {
                  allowed = true;
                  break;
                }
              }
            }
          }
          if (!allowed) continue;
          long code = 0;
          for (int a = fa[pos]; a < d; ++a)
            code = code * model_.base(a) + model_.digit_of(v, a);
          auto [it, fresh] = out.try_emplace(code, std::vector<std::uint64_t>(words, 0));
          it->second[v >> 6] |= 1ULL << (v & 63);
        }
        return out;
      };
      auto remaining = [&](int pos) {
        std::vector<int> rem(d);
        for (int a = 0; a < d; ++a) rem[a] = std::max(0, shape[a] - pos + 1);
        return rem;
      };
      auto rec = [&](auto&& self, const std::vector<std::uint64_t>& reach,
                     int pos) -> BigUint {
        if (pos > L) return BigUint(1);
        auto key = std::make_pair(reach, remaining(pos));
        auto it = sft_memo_.find(key);
        if (it != sft_memo_.end()) return it->second;
        BigUint total(0);
        for (auto& [code, mask] : column_candidates(pos, &reach)) total += self(self, mask, pos + 1);
        sft_memo_.emplace(std::move(key), total);
        return total;
      };
      BigUint total(0);
      for (auto& [code, mask] : column_candidates(1, nullptr)) total += rec(rec, mask, 2);
      result = total;
      break;
    }
    case OmegaSpec::Kind::Tree: {
      if (L > spec.omega.tree_depth)
        throw DepthExceeded("prefix count beyond the declared tree depth");
      result = BigUint(model_.enumerate_prefixes(shape).size());
      break;
    }
  }
  auto [pos2, inserted] = by_shape_.emplace(shape, std::move(result));
  return pos2->second;
}

BigUint prefix_count(const OmegaModel& model, const std::vector<int>& shape) {
  CountTable table(model);
  return table.count(shape);
}

DimValue minkowski_dimension(const OmegaModel& model, const ParamSchedule& schedule,
                             int terms, std::vector<SeriesRow>* rows) {
  CountTable table(model);
  const double ln_md = static_cast<double>(schedule.log_m[schedule.d - 1]);
  DimValue out;
  out.terms = terms;
  double sum = 0.0;
  for (const auto& term : schedule.terms_through(terms)) {
    const double logc = static_cast<double>(table.count(term.shape).log()) / ln_md;
    sum += term.coeff * logc;
    if (rows) rows->push_back({term.s, term.t, term.p, term.coeff, logc, term.coeff * logc});
  }
  out.value = sum;
  out.lower = sum;
  out.tail_bound = schedule.series_tail_bound(terms);
  out.upper = sum + out.tail_bound;
  return out;
}

DimValue minkowski_dimension_2d(const OmegaModel& model, const ParamSchedule& schedule,
                                int terms) {
  if (schedule.d != 2) throw ConfigError("two-axis series requires two axes");
  CountTable table(model);
  const double q = schedule.q;
  const double gamma = static_cast<double>(schedule.log_ratio(1));
  const int j = schedule.lag_prev[1];
  const double ln_m2 = static_cast<double>(schedule.log_m[1]);
  auto logc = [&](std::vector<int> shape) {
    return static_cast<double>(table.count(shape).log()) / ln_m2;
  };
  double sum = 0.0;
  for (int p = 1; p <= j; ++p)
    sum += (q - 1) * (q - 1) / std::pow(q, p + 1) * logc({0, p});
  for (int p = j + 1; p <= terms; ++p) {
    sum += (q - 1) * (std::pow(q, j + 1) * gamma - 1) / std::pow(q, p + 1) * logc({p - j, p});
    sum += (q - 1) * (1 - std::pow(q, j) * gamma) / std::pow(q, p) * logc({p - j - 1, p});
  }
  DimValue out;
  out.terms = terms;
  out.value = sum;
  out.lower = sum;
  out.tail_bound = schedule.series_tail_bound(terms);
  out.upper = sum + out.tail_bound;
  return out;
}

EqualityReport equality_conditions(const OmegaModel& model, const ParamSchedule& schedule,
                                   int depth) {
  if (schedule.d != 2) throw ConfigError("equality conditions cover two axes only");
  const int j = schedule.lag_prev[1];
  EqualityReport rep;
  rep.depth = depth;

  // Levels of the prefix tree, walked on the follower-key quotient.
  std::set<std::string> all_keys;
  std::map<std::string, StaircasePrefix> level;
  for (const auto& w : model.enumerate_prefixes({1, 1 + j})) {
    const std::string key = model.follower_key(w).bytes;
    all_keys.insert(key);
    level.emplace(key, model.canonical_rep(w));
  }

  for (int lvl = 1; lvl <= depth && !level.empty(); ++lvl) {
    std::set<std::size_t> degrees;
    std::set<std::size_t> x_counts;  // per (vertex, new tail digit)
    std::map<std::string, StaircasePrefix> next;
    for (const auto& [key, rep_word] : level) {
      auto kids = model.followers(rep_word);
      degrees.insert(kids.size());
      std::map<Digit, std::set<Digit>> by_tail;
      for (const auto& b : kids) {
        by_tail[b[1]].insert(b[0]);
        StaircasePrefix child = rep_word;
        child.digits[0].push_back(b[0]);
        child.digits[1].push_back(b[1]);
        const std::string ck = model.follower_key(child).bytes;
        all_keys.insert(ck);
        if (!next.count(ck)) next.emplace(ck, model.canonical_rep(child));
      }
      for (auto& [tail, xs] : by_tail) x_counts.insert(xs.size());
    }
    if (degrees.size() > 1) rep.spherically_symmetric = false;
    // Branching in the wide axis from level >= 1 corresponds to the x_p
    // condition at p = lvl + 1 >= 2.
    if (x_counts.size() > 1) rep.column_counts_constant = false;
    level = std::move(next);
  }
  rep.distinct_keys = static_cast<int>(all_keys.size());
  rep.exact_by_quotient = depth >= rep.distinct_keys;

  // x-options after a full second-axis head of length j+1.
  {
    std::set<std::size_t> counts;
    for (const auto& head : model.enumerate_prefixes({0, j + 1}))
      counts.insert(model.extensions(head, 0).size());
    rep.first_axis_count_constant = counts.size() <= 1;
  }
  // Second-axis branching below the lag.
  for (int p = 1; p <= j; ++p) {
    std::set<std::size_t> counts;
    for (const auto& head : model.enumerate_prefixes({0, p}))
      counts.insert(model.extensions(head, 1).size());
    if (counts.size() > 1) rep.marginal_counts_constant = false;
  }
  return rep;
}

}  // namespace multsub
