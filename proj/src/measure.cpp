#include "multsub/measure.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace multsub {

namespace {

constexpr double kProbTol = 1e-12;

std::string word_bytes(const StaircasePrefix& u) {
  std::string s;
  for (const auto& axis : u.digits) {
    s.push_back(static_cast<char>(axis.size()));
    for (Digit v : axis) s.push_back(static_cast<char>(v));
  }
  return s;
}

double log_sum_exp(const std::vector<double>& vals) {
  double mx = *std::max_element(vals.begin(), vals.end());
  if (!std::isfinite(mx)) return mx;
  double s = 0.0;
  for (double v : vals) s += std::exp(v - mx);
  return mx + std::log(s);
}

// Reveal sequence of a target shape: position-major, later axes first inside a
// position, which keeps every intermediate profile a staircase.
std::vector<ChiStep> reveal_sequence(const std::vector<int>& shape) {
  const int d = static_cast<int>(shape.size());
  std::vector<ChiStep> seq;
  for (int pos = 1; pos <= shape[d - 1]; ++pos)
    for (int a = d - 1; a >= 0; --a)
      if (shape[a] >= pos) seq.push_back({a, pos});
  return seq;
}

}  // namespace

Measure::Measure(const OmegaModel& model, const ParamSchedule& schedule, MeasureSpec spec,
                 const TVector* tvec)
    : model_(model), sched_(schedule), spec_(std::move(spec)), tvec_(tvec) {
  validate();
  if (spec_.kind == MeasureSpec::Kind::Optimal)
    for (std::size_t i = 0; i < tvec_->class_keys.size(); ++i)
      pot_memo_.emplace("B" + tvec_->class_keys[i], tvec_->log_t[i]);
}

void Measure::validate() {
  const int d = model_.d();
  const int n = model_.tuple_count();
  switch (spec_.kind) {
    case MeasureSpec::Kind::Bernoulli: {
      if (static_cast<int>(spec_.weights.size()) != n)
        throw ConfigError("bernoulli: need one weight per tuple");
      double sum = 0.0;
      for (double w : spec_.weights) {
        if (w < 0.0) throw NotAProbability("bernoulli: negative weight");
        sum += w;
      }
      if (std::abs(sum - 1.0) > kProbTol)
        throw NotAProbability("bernoulli: weights sum to " + std::to_string(sum));
      for (TupleId t = 0; t < n; ++t)
        if (spec_.weights[t] > 0.0 && !model_.tuple_alive(t))
          throw ConfigError("bernoulli: support leaves the generating set");
      if (model_.spec().omega.kind == OmegaSpec::Kind::Sft) {
        const auto& mat = model_.pruned_matrix();
        for (TupleId a = 0; a < n; ++a)
          for (TupleId b = 0; b < n; ++b)
            if (spec_.weights[a] > 0.0 && spec_.weights[b] > 0.0 && !mat[a][b])
              throw ConfigError("bernoulli: support crosses a forbidden transition");
      }
      if (model_.spec().omega.kind == OmegaSpec::Kind::Tree)
        throw ConfigError("bernoulli: unsupported on explicit trees; use cylinder masses");
      bern_marg_.assign(d, {});
      for (int fa = 0; fa < d; ++fa) {
        long size = 1;
        for (int a = fa; a < d; ++a) size *= model_.base(a);
        bern_marg_[fa].assign(size, 0.0);
        for (TupleId t = 0; t < n; ++t) {
          long code = 0;
          for (int a = fa; a < d; ++a) code = code * model_.base(a) + model_.digit_of(t, a);
          bern_marg_[fa][code] += spec_.weights[t];
        }
      }
      break;
    }
    case MeasureSpec::Kind::Markov: {
      if (static_cast<int>(spec_.initial.size()) != n ||
          static_cast<int>(spec_.transition.size()) != n)
        throw ConfigError("markov: initial and transition must cover the alphabet");
      double isum = 0.0;
      for (double w : spec_.initial) {
        if (w < 0.0) throw NotAProbability("markov: negative initial mass");
        isum += w;
      }
      if (std::abs(isum - 1.0) > kProbTol)
        throw NotAProbability("markov: initial masses sum to " + std::to_string(isum));
      std::vector<std::uint8_t> reachable(n, 0);
      for (TupleId t = 0; t < n; ++t) reachable[t] = spec_.initial[t] > 0.0 ? 1 : 0;
      for (int pass = 0; pass < n; ++pass)
        for (TupleId a = 0; a < n; ++a)
          if (reachable[a])
            for (TupleId b = 0; b < n; ++b)
              if (spec_.transition[a][b] > 0.0) reachable[b] = 1;
      for (TupleId a = 0; a < n; ++a) {
        if (static_cast<int>(spec_.transition[a].size()) != n)
          throw ConfigError("markov: ragged transition matrix");
        double rsum = 0.0;
        for (TupleId b = 0; b < n; ++b) {
          double w = spec_.transition[a][b];
          if (w < 0.0) throw NotAProbability("markov: negative transition mass");
          rsum += w;
          if (w > 0.0) {
            bool allowed = true;
            if (model_.spec().omega.kind == OmegaSpec::Kind::Sft)
              allowed = model_.pruned_matrix()[a][b] != 0;
            else if (model_.spec().omega.kind == OmegaSpec::Kind::Carpet)
              allowed = model_.tuple_alive(a) && model_.tuple_alive(b);
            if (!allowed) throw ConfigError("markov: support crosses a forbidden transition");
          }
        }
        if (reachable[a] && std::abs(rsum - 1.0) > kProbTol)
          throw NotAProbability("markov: reachable row does not sum to one");
        if (spec_.initial[a] > 0.0 && !model_.tuple_alive(a))
          throw ConfigError("markov: initial mass outside the generating set");
      }
      if (model_.spec().omega.kind == OmegaSpec::Kind::Tree)
        throw ConfigError("markov: unsupported on explicit trees; use cylinder masses");
      break;
    }
    case MeasureSpec::Kind::Cylinder: {
      if (spec_.cylinder.empty()) throw ConfigError("cylinder: no masses given");
      for (const auto& atom : spec_.cylinder) {
        if (atom.mass < 0.0) throw NotAProbability("cylinder: negative mass");
        if (atom.mass > 0.0 && !model_.is_admissible(atom.word))
          throw ConfigError("cylinder: support leaves the generating set");
        cyl_levels_[atom.word.shape()].push_back(atom);
      }
      for (auto& [shape, atoms] : cyl_levels_) {
        double sum = 0.0;
        std::set<std::string> seen;
        for (const auto& atom : atoms) {
          sum += atom.mass;
          if (!seen.insert(word_bytes(atom.word)).second)
            throw ConfigError("cylinder: duplicate word in one level");
        }
        if (std::abs(sum - 1.0) > kProbTol)
          throw NotAProbability("cylinder: level masses sum to " + std::to_string(sum));
      }
      break;
    }
    case MeasureSpec::Kind::Optimal:
      if (tvec_ == nullptr) throw ConfigError("optimal measure needs a solved t vector");
      break;
  }
}

// --- masses -------------------------------------------------------------------

double Measure::bernoulli_marginal(int first_axis, const std::vector<Digit>& col) const {
  long code = 0;
  for (std::size_t i = 0; i < col.size(); ++i)
    code = code * model_.base(first_axis + static_cast<int>(i)) + col[i];
  return bern_marg_[first_axis][code];
}

double Measure::bernoulli_mass(const StaircasePrefix& u) const {
  double m = 1.0;
  const int d = model_.d();
  for (int pos = 1; pos <= u.max_len(); ++pos) {
    int fa = 0;
    while (fa < d && u.len(fa) < pos) ++fa;
    std::vector<Digit> col;
    for (int a = fa; a < d; ++a) col.push_back(u.digits[a][pos - 1]);
    m *= bernoulli_marginal(fa, col);
    if (m == 0.0) return 0.0;
  }
  return m;
}

double Measure::markov_mass(const StaircasePrefix& u) const {
  const int d = model_.d();
  const int n = model_.tuple_count();
  const int L = u.max_len();
  if (L == 0) return 1.0;
  std::vector<double> vec(n, 0.0);
  for (int pos = 1; pos <= L; ++pos) {
    int fa = 0;
    while (fa < d && u.len(fa) < pos) ++fa;
    auto matches = [&](TupleId t) {
      for (int a = fa; a < d; ++a)
        if (model_.digit_of(t, a) != u.digits[a][pos - 1]) return false;
      return true;
    };
    std::vector<double> next(n, 0.0);
    if (pos == 1) {
      for (TupleId t = 0; t < n; ++t)
        if (matches(t)) next[t] = spec_.initial[t];
    } else {
      for (TupleId a = 0; a < n; ++a) {
        if (vec[a] == 0.0) continue;
        for (TupleId b = 0; b < n; ++b)
          if (spec_.transition[a][b] > 0.0 && matches(b))
            next[b] += vec[a] * spec_.transition[a][b];
      }
    }
    vec = std::move(next);
  }
  double total = 0.0;
  for (double v : vec) total += v;
  return total;
}

const std::vector<MeasureSpec::Atom>* Measure::covering_level(
    const std::vector<int>& shape) const {
  const int d = model_.d();
  const std::vector<MeasureSpec::Atom>* level = nullptr;
  long best = -1;
  for (const auto& [s, atoms] : cyl_levels_) {
    bool covers = true;
    long total = 0;
    for (int a = 0; a < d; ++a) {
      covers &= s[a] >= shape[a];
      total += s[a];
    }
    if (covers && (best < 0 || total < best)) {
      best = total;
      level = &atoms;
    }
  }
  return level;
}

double Measure::cylinder_mass(const StaircasePrefix& u) const {
  const auto shape = u.shape();
  const int d = model_.d();
  const auto* level = covering_level(shape);
  if (level == nullptr)
    throw DepthExceeded("cylinder measure not realized at the requested shape");
  double m = 0.0;
  for (const auto& atom : *level) {
    bool extends = true;
    for (int a = 0; a < d && extends; ++a)
      for (int k = 0; k < shape[a]; ++k)
        if (atom.word.digits[a][k] != u.digits[a][k]) {
          extends = false;
          break;
        }
    if (extends) m += atom.mass;
  }
  return m;
}

double Measure::mass(const StaircasePrefix& u) const {
  if (!model_.is_admissible(u)) return 0.0;
  switch (spec_.kind) {
    case MeasureSpec::Kind::Bernoulli:
      return bernoulli_mass(u);
    case MeasureSpec::Kind::Markov:
      return markov_mass(u);
    case MeasureSpec::Kind::Cylinder:
      return cylinder_mass(u);
    case MeasureSpec::Kind::Optimal:
      return optimal_mass(u);
  }
  return 0.0;
}

// --- the dimension-maximizing chain ---------------------------------------------

bool Measure::chain_boundary(int step) const {
  return step >= sched_.N && (step - sched_.N) % sched_.d == 0;
}

double Measure::chain_exponent(int step) const {
  if (step == 0) return 1.0;
  if (step < sched_.N) return sched_.omega[step + 1];
  const int r = (step - sched_.N) % sched_.d;
  return sched_.omega[sched_.N - sched_.d + r + 1];
}

double Measure::log_potential(const StaircasePrefix& u, int step) const {
  std::string memo_key;
  if (chain_boundary(step)) {
    memo_key = "B" + model_.follower_key(u).bytes;
    auto it = pot_memo_.find(memo_key);
    if (it != pot_memo_.end()) return it->second;
    throw ConfigError("optimal measure: boundary class missing from the solved vector");
  }
  const int phase = step < sched_.N ? step : sched_.N + (step - sched_.N) % sched_.d;
  memo_key = std::to_string(phase) + "|" + model_.follower_key(u).bytes;
  auto it = pot_memo_.find(memo_key);
  if (it != pot_memo_.end()) return it->second;
  const ChiStep st = sched_.chi_at(step + 1);
  StaircasePrefix ext = u;
  ext.digits[st.axis].push_back(0);
  std::vector<double> vals;
  for (Digit v = 0; v < model_.base(st.axis); ++v) {
    ext.digits[st.axis].back() = v;
    if (model_.is_admissible(ext)) vals.push_back(log_potential(ext, step + 1));
  }
  if (vals.empty()) throw EmptyOmega("optimal measure hit a dead prefix");
  double out = chain_exponent(step) * log_sum_exp(vals);
  pot_memo_.emplace(std::move(memo_key), out);
  return out;
}

std::vector<std::pair<Digit, double>> Measure::chain_dist(const StaircasePrefix& u,
                                                          int step) const {
  const ChiStep st = sched_.chi_at(step + 1);
  StaircasePrefix ext = u;
  ext.digits[st.axis].push_back(0);
  std::vector<std::pair<Digit, double>> out;
  std::vector<double> vals;
  for (Digit v = 0; v < model_.base(st.axis); ++v) {
    ext.digits[st.axis].back() = v;
    if (!model_.is_admissible(ext)) continue;
    out.emplace_back(v, 0.0);
    vals.push_back(log_potential(ext, step + 1));
  }
  const double total = log_sum_exp(vals);
  for (std::size_t i = 0; i < out.size(); ++i) out[i].second = std::exp(vals[i] - total);
  return out;
}

double Measure::optimal_mass(const StaircasePrefix& u) const {
  {
    auto it = mass_memo_.find(word_bytes(u));
    if (it != mass_memo_.end()) return it->second;
  }
  const auto shape = u.shape();
  const int d = model_.d();
  int cover = 0;
  {
    auto depth = sched_.chi_depths(0);
    while (true) {
      bool done = true;
      for (int a = 0; a < d; ++a) done &= depth[a] >= shape[a];
      if (done) break;
      ++cover;
      ChiStep st = sched_.chi_at(cover);
      depth[st.axis] = std::max(depth[st.axis], st.pos);
    }
  }
  std::map<std::pair<int, std::string>, double> memo;
  StaircasePrefix walk;
  walk.digits.assign(d, {});
  auto rec = [&](auto&& self, StaircasePrefix& w, int step) -> double {
    if (step == cover) return 0.0;
    const auto key = std::make_pair(step, model_.follower_key(w).bytes);
    auto it = memo.find(key);
    if (it != memo.end()) return it->second;
    const ChiStep st = sched_.chi_at(step + 1);
    auto dist = chain_dist(w, step);
    double out = -std::numeric_limits<double>::infinity();
    if (st.pos <= shape[st.axis]) {
      const Digit want = u.digits[st.axis][st.pos - 1];
      for (const auto& [v, p] : dist) {
        if (v != want || p <= 0.0) continue;
        w.digits[st.axis].push_back(v);
        out = std::log(p) + self(self, w, step + 1);
        w.digits[st.axis].pop_back();
      }
    } else {
      std::vector<double> parts;
      for (const auto& [v, p] : dist) {
        if (p <= 0.0) continue;
        w.digits[st.axis].push_back(v);
        parts.push_back(std::log(p) + self(self, w, step + 1));
        w.digits[st.axis].pop_back();
      }
      if (!parts.empty()) out = log_sum_exp(parts);
    }
    memo.emplace(key, out);
    return out;
  };
  double m = std::exp(rec(rec, walk, 0));
  mass_memo_.emplace(word_bytes(u), m);
  return m;
}

// --- conditionals and sampling ---------------------------------------------------

std::vector<std::pair<Digit, double>> Measure::extension_dist(const StaircasePrefix& u,
                                                              int axis) const {
  const double base_mass = mass(u);
  std::vector<std::pair<Digit, double>> out;
  if (base_mass <= 0.0) return out;
  StaircasePrefix ext = u;
  ext.digits[axis].push_back(0);
  for (Digit v = 0; v < model_.base(axis); ++v) {
    ext.digits[axis].back() = v;
    double m = mass(ext);
    if (m > 0.0) out.emplace_back(v, m / base_mass);
  }
  return out;
}

StaircasePrefix Measure::sample(const std::vector<int>& shape, Rng& rng) const {
  const int d = model_.d();
  StaircasePrefix out;
  out.digits.assign(d, {});
  const int L = shape.empty() ? 0 : shape[d - 1];
  if (L == 0) return out;

  if (spec_.kind == MeasureSpec::Kind::Optimal) {
    StaircasePrefix walk;
    walk.digits.assign(d, {});
    int step = 0;
    auto depth = sched_.chi_depths(0);
    while (true) {
      bool done = true;
      for (int a = 0; a < d; ++a) done &= depth[a] >= shape[a];
      if (done) break;
      auto dist = chain_dist(walk, step);
      std::vector<double> w;
      w.reserve(dist.size());
      for (auto& [v, p] : dist) w.push_back(p);
      const Digit v = dist[rng.pick_weighted(w)].first;
      const ChiStep st = sched_.chi_at(step + 1);
      walk.digits[st.axis].push_back(v);
      depth[st.axis] = std::max(depth[st.axis], st.pos);
      ++step;
    }
    for (int a = 0; a < d; ++a)
      out.digits[a].assign(walk.digits[a].begin(), walk.digits[a].begin() + shape[a]);
    return out;
  }

  if (spec_.kind == MeasureSpec::Kind::Cylinder) {
    const auto* level = covering_level(shape);
    if (level == nullptr) throw DepthExceeded("cylinder measure too shallow to sample");
    std::vector<double> w;
    w.reserve(level->size());
    for (const auto& atom : *level) w.push_back(atom.mass);
    const auto& atom = (*level)[rng.pick_weighted(w)];
    for (int a = 0; a < d; ++a)
      out.digits[a].assign(atom.word.digits[a].begin(),
                           atom.word.digits[a].begin() + shape[a]);
    return out;
  }

  // Bernoulli / Markov: draw full columns along the chain, then truncate.
  std::vector<TupleId> cols(L);
  for (int pos = 0; pos < L; ++pos) {
    const std::vector<double>& w = spec_.kind == MeasureSpec::Kind::Bernoulli
                                       ? spec_.weights
                                       : (pos == 0 ? spec_.initial
                                                   : spec_.transition[cols[pos - 1]]);
    cols[pos] = static_cast<TupleId>(rng.pick_weighted(w));
  }
  for (int a = 0; a < d; ++a)
    for (int pos = 0; pos < shape[a]; ++pos)
      out.digits[a].push_back(model_.digit_of(cols[pos], a));
  return out;
}

// --- entropies ----------------------------------------------------------------

double Measure::entropy_bernoulli(const std::vector<int>& shape) const {
  const int d = model_.d();
  double h = 0.0;
  for (int pos = 1; pos <= shape[d - 1]; ++pos) {
    int fa = 0;
    while (fa < d && shape[fa] < pos) ++fa;
    for (double w : bern_marg_[fa])
      if (w > 0.0) h -= w * std::log(w);
  }
  return h / static_cast<double>(sched_.log_m[d - 1]);
}

double Measure::entropy_cylinder(const std::vector<int>& shape) const {
  const int d = model_.d();
  const auto* level = covering_level(shape);
  if (level == nullptr) throw DepthExceeded("cylinder measure not realized at this shape");
  std::map<std::string, double> grouped;
  for (const auto& atom : *level) {
    StaircasePrefix t;
    t.digits.assign(d, {});
    for (int a = 0; a < d; ++a)
      t.digits[a].assign(atom.word.digits[a].begin(),
                         atom.word.digits[a].begin() + shape[a]);
    grouped[word_bytes(t)] += atom.mass;
  }
  double h = 0.0;
  for (const auto& [k, m] : grouped)
    if (m > 0.0) h -= m * std::log(m);
  return h / static_cast<double>(sched_.log_m[d - 1]);
}

double Measure::entropy_optimal(const std::vector<int>& shape) const {
  // Fast exact path when the shape is a reveal-order profile; otherwise fall
  // back to guarded atom enumeration.
  const int d = model_.d();
  int K = -1;
  {
    auto depth = sched_.chi_depths(0);
    int step = 0;
    while (true) {
      if (depth == shape) {
        K = step;
        break;
      }
      bool over = false;
      for (int a = 0; a < d; ++a) over |= depth[a] > shape[a];
      if (over) break;
      ++step;
      ChiStep st = sched_.chi_at(step);
      depth[st.axis] = std::max(depth[st.axis], st.pos);
    }
  }
  if (K < 0) return entropy_atoms(shape);

  struct State {
    StaircasePrefix word;
    double prob;
  };
  std::map<std::string, State> states;
  StaircasePrefix empty;
  empty.digits.assign(d, {});
  states.emplace("", State{empty, 1.0});
  double h = 0.0;
  for (int step = 0; step < K; ++step) {
    const ChiStep st = sched_.chi_at(step + 1);
    std::map<std::string, State> next;
    for (auto& [key, state] : states) {
      auto dist = chain_dist(state.word, step);
      for (const auto& [v, p] : dist) {
        if (p <= 0.0) continue;
        h -= state.prob * p * std::log(p);
        StaircasePrefix w2 = state.word;
        w2.digits[st.axis].push_back(v);
        std::string k2 = model_.follower_key(w2).bytes;
        auto it = next.find(k2);
        if (it == next.end())
          next.emplace(std::move(k2), State{model_.canonical_rep(w2), state.prob * p});
        else
          it->second.prob += state.prob * p;
      }
    }
    states = std::move(next);
    if (states.size() > 200000) throw BudgetExceeded("entropy state budget exhausted");
  }
  return h / static_cast<double>(sched_.log_m[d - 1]);
}

double Measure::entropy_atoms(const std::vector<int>& shape) const {
  double total_atoms = 1.0;
  const int d = model_.d();
  for (int a = 0; a < d; ++a) total_atoms *= std::pow(model_.base(a), shape[a]);
  if (total_atoms > 2e6) throw BudgetExceeded("atom enumeration over budget");
  auto words = model_.enumerate_prefixes(shape);
  double h = 0.0;
  for (const auto& w : words) {
    double m = mass(w);
    if (m > 0.0) h -= m * std::log(m);
  }
  return h / static_cast<double>(sched_.log_m[d - 1]);
}

double Measure::entropy_markov(const std::vector<int>& shape) const {
  const int d = model_.d();
  const int n = model_.tuple_count();

  // State: last complete column (anchor) plus the visible digits at pending
  // positions. Conditionals marginalize the hidden digits with a forward pass
  // from the anchor, so no belief vector is needed once a column is complete.
  struct State {
    TupleId anchor = -1;
    std::vector<std::vector<Digit>> pend;  // ascending axis order per position
    double prob = 0.0;
  };
  auto key_of = [](const State& s) {
    std::string k = std::to_string(s.anchor);
    for (const auto& p : s.pend) {
      k.push_back('|');
      for (Digit v : p) k.push_back(static_cast<char>('0' + v));
    }
    return k;
  };

  const auto seq = reveal_sequence(shape);
  std::vector<int> cur(d, 0);
  std::map<std::string, State> states;
  states.emplace("-1", State{-1, {}, 1.0});
  double h = 0.0;

  for (const auto& st : seq) {
    std::map<std::string, State> next;
    for (auto& [key, state] : states) {
      const int start_pos = cur[0];  // anchor position (0 when none yet)
      const int pend_count = static_cast<int>(state.pend.size());
      auto first_axis_of = [&](int pending_idx) {
        const int pos = start_pos + pending_idx + 1;
        int fa = 1;
        while (fa < d && cur[fa] < pos) ++fa;
        return fa;
      };
      const int target_pend = st.pos - start_pos - 1;

      std::vector<double> dist(model_.base(st.axis), 0.0);
      // Forward pass; candidate digit inserted at the reveal site.
      for (Digit cand = 0; cand < model_.base(st.axis); ++cand) {
        std::vector<double> vec(n, 0.0);
        bool started = state.anchor >= 0;
        if (started) vec[state.anchor] = 1.0;
        const int last = std::max(pend_count, target_pend + 1);
        bool dead = false;
        for (int idx = 0; idx < last && !dead; ++idx) {
          auto match = [&](TupleId t) {
            int fa = first_axis_of(idx);
            if (idx == target_pend) {
              if (model_.digit_of(t, st.axis) != cand) return false;
            }
            if (idx < pend_count) {
              const auto& digits = state.pend[idx];
              for (int a = fa; a < d; ++a)
                if (model_.digit_of(t, a) != digits[a - fa]) return false;
            }
            return true;
          };
          std::vector<double> nx(n, 0.0);
          double alive = 0.0;
          if (!started) {
            for (TupleId t = 0; t < n; ++t)
              if (match(t)) alive += nx[t] = spec_.initial[t];
            started = true;
          } else {
            for (TupleId a = 0; a < n; ++a) {
              if (vec[a] == 0.0) continue;
              for (TupleId b = 0; b < n; ++b) {
                double w = spec_.transition[a][b];
                if (w > 0.0 && match(b)) alive += nx[b] += vec[a] * w;
              }
            }
          }
          dead = alive == 0.0;
          vec = std::move(nx);
        }
        double tot = 0.0;
        for (double x : vec) tot += x;
        dist[cand] = tot;
      }

      double total = 0.0;
      for (double x : dist) total += x;
      if (total <= 0.0) continue;
      for (Digit v = 0; v < model_.base(st.axis); ++v) {
        const double p = dist[v] / total;
        if (p <= 0.0) continue;
        h -= state.prob * p * std::log(p);
        State child = state;
        child.prob = state.prob * p;
        if (target_pend < static_cast<int>(child.pend.size()))
          child.pend[target_pend].insert(child.pend[target_pend].begin(), v);
        else
          child.pend.push_back({v});
        if (st.axis == 0) {
          child.anchor = model_.pack(child.pend.front());
          child.pend.erase(child.pend.begin());
        }
        std::string k2 = key_of(child);
        auto it = next.find(k2);
        if (it == next.end())
          next.emplace(std::move(k2), std::move(child));
        else
          it->second.prob += state.prob * p;
      }
    }
    cur[st.axis] = st.pos;
    states = std::move(next);
    if (states.size() > 50000) throw BudgetExceeded("markov entropy state budget exhausted");
  }
  return h / static_cast<double>(sched_.log_m[d - 1]);
}

double Measure::partition_entropy(const std::vector<int>& shape) const {
  if (static_cast<int>(shape.size()) != model_.d())
    throw ConfigError("partition shape has wrong arity");
  for (int a = 1; a < model_.d(); ++a)
    if (shape[a - 1] > shape[a])
      throw ConfigError("partition depths must weakly increase toward the last axis");
  if (shape[model_.d() - 1] == 0) return 0.0;
  switch (spec_.kind) {
    case MeasureSpec::Kind::Bernoulli:
      return entropy_bernoulli(shape);
    case MeasureSpec::Kind::Markov:
      return entropy_markov(shape);
    case MeasureSpec::Kind::Cylinder:
      return entropy_cylinder(shape);
    case MeasureSpec::Kind::Optimal:
      return entropy_optimal(shape);
  }
  return 0.0;
}

double Measure::last_axis_entropy(int depth) const {
  const int d = model_.d();
  std::vector<int> shape(d, 0);
  shape[d - 1] = depth;
  if (depth == 0) return 0.0;
  if (spec_.kind == MeasureSpec::Kind::Bernoulli) return entropy_bernoulli(shape);
  if (spec_.kind == MeasureSpec::Kind::Cylinder) return entropy_cylinder(shape);
  if (spec_.kind == MeasureSpec::Kind::Optimal) return entropy_atoms(shape);

  // Markov: posterior over the hidden column chain, beliefs interned.
  const int n = model_.tuple_count();
  struct Belief {
    std::vector<double> post;
    double prob;
  };
  auto key_of = [&](const std::vector<double>& v) {
    std::string k;
    k.reserve(v.size() * 8);
    for (double x : v) {
      const long long qz = static_cast<long long>(std::llround(x * 1e13));
      k.append(reinterpret_cast<const char*>(&qz), sizeof(qz));
    }
    return k;
  };
  std::map<std::string, Belief> states;
  double h = 0.0;
  states.emplace(key_of(spec_.initial), Belief{spec_.initial, 1.0});
  for (int pos = 1; pos <= depth; ++pos) {
    std::map<std::string, Belief> next;
    for (auto& [key, b] : states) {
      std::vector<std::vector<double>> per_digit(model_.base(d - 1),
                                                 std::vector<double>(n, 0.0));
      for (TupleId t = 0; t < n; ++t) {
        if (b.post[t] <= 0.0) continue;
        if (pos == 1) {
          per_digit[model_.digit_of(t, d - 1)][t] += b.post[t];
        } else {
          for (TupleId t2 = 0; t2 < n; ++t2) {
            double w = spec_.transition[t][t2];
            if (w > 0.0) per_digit[model_.digit_of(t2, d - 1)][t2] += b.post[t] * w;
          }
        }
      }
      for (Digit v = 0; v < model_.base(d - 1); ++v) {
        double split = 0.0;
        for (double x : per_digit[v]) split += x;
        if (split <= 0.0) continue;
        h -= b.prob * split * std::log(split);
        Belief child{per_digit[v], b.prob * split};
        for (double& x : child.post) x /= split;
        std::string k2 = key_of(child.post);
        auto it = next.find(k2);
        if (it == next.end())
          next.emplace(std::move(k2), std::move(child));
        else
          it->second.prob += b.prob * split;
      }
    }
    states = std::move(next);
    if (states.size() > 20000)
      throw BudgetExceeded("marginal-entropy belief budget exhausted at depth " +
                           std::to_string(pos));
  }
  return h / static_cast<double>(sched_.log_m[d - 1]);
}

// --- fiber-product measure -------------------------------------------------------

std::vector<StaircasePrefix> fiber_words(const OmegaModel& model, int q,
                                         const StaircasePrefix& word) {
  const int d = model.d();
  const auto shape = word.shape();
  const int L = shape[d - 1];
  std::vector<StaircasePrefix> out;
  for (int i = 1; i <= L; ++i) {
    if (i % q == 0) continue;
    StaircasePrefix fw;
    fw.digits.assign(d, {});
    for (int a = 0; a < d; ++a)
      for (long long pos = i; pos <= shape[a]; pos *= q)
        fw.digits[a].push_back(word.digits[a][pos - 1]);
    out.push_back(std::move(fw));
  }
  return out;
}

PmuMass pmu_cylinder_mass(const Measure& mu, const StaircasePrefix& word) {
  PmuMass out;
  out.mass = 1.0;
  for (const auto& fw : fiber_words(mu.model(), mu.schedule().q, word)) {
    const double m = mu.mass(fw);
    if (m <= 0.0) return {0.0, false};
    out.mass *= m;
  }
  return out;
}

PmuMass pmu_ball_mass(const Measure& mu, const StaircasePrefix& center, int n) {
  const auto want = mu.schedule().ball_shape(n);
  const auto got = center.shape();
  if (got != want)
    throw ConfigError("ball center must be resolved to the exact ball profile");
  return pmu_cylinder_mass(mu, center);
}

StaircasePrefix sample_pmu(const Measure& mu, int n, Rng& rng) {
  const auto& sched = mu.schedule();
  const auto& model = mu.model();
  const int d = model.d();
  const auto shape = sched.ball_shape(n);
  StaircasePrefix out;
  out.digits.assign(d, {});
  for (int a = 0; a < d; ++a) out.digits[a].assign(shape[a], 0);
  const int L = shape[d - 1];
  for (int i = 1; i <= L; ++i) {
    if (i % sched.q == 0) continue;
    std::vector<int> fiber_shape(d, 0);
    for (int a = 0; a < d; ++a)
      for (long long pos = i; pos <= shape[a]; pos *= sched.q) ++fiber_shape[a];
    StaircasePrefix fw = mu.sample(fiber_shape, rng);
    for (int a = 0; a < d; ++a) {
      long long pos = i;
      for (int r = 0; r < fiber_shape[a]; ++r, pos *= sched.q)
        out.digits[a][pos - 1] = fw.digits[a][r];
    }
  }
  return out;
}

MeasureSpec optimal_measure(const OmegaModel& model, const ParamSchedule& schedule,
                            const TVector& tvec, int levels) {
  if (levels < 1) throw ConfigError("need at least one boundary level");
  Measure opt(model, schedule, MeasureSpec{.kind = MeasureSpec::Kind::Optimal}, &tvec);
  MeasureSpec out;
  out.kind = MeasureSpec::Kind::Cylinder;
  for (int level = 0; level < levels; ++level) {
    const int steps = schedule.N + level * schedule.d;
    auto words = model.enumerate_prefixes(schedule.chi_depths(steps));
    for (const auto& w : words) {
      double m = opt.mass(w);
      if (m > 0.0) out.cylinder.push_back({w, m});
    }
  }
  return out;
}

}  // namespace multsub
