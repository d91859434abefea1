#include "multsub/fixed_point.hpp"

#include <algorithm>
#include <limits>
#include <cmath>

namespace multsub {

namespace {

double log_sum_exp(const std::vector<double>& vals) {
  double mx = *std::max_element(vals.begin(), vals.end());
  double s = 0.0;
  for (double v : vals) s += std::exp(v - mx);
  return mx + std::log(s);
}

}  // namespace

FixedPointSystem::FixedPointSystem(const OmegaModel& model, const ParamSchedule& schedule,
                                   SolveOptions::Exponents mode,
                                   SolveOptions::LeafPolicy leaf)
    : model_(model), sched_(schedule), mode_(mode), leaf_(leaf) {
  const int d = sched_.d;
  const int N = sched_.N;

  sum_exp_.assign(d, 1.0);
  root_exp_.assign(N + 1, 1.0);
  if (mode_ == SolveOptions::Exponents::General) {
    for (int i = 2; i <= d; ++i) sum_exp_[i - 1] = sched_.omega[N - d + i];
    for (int k = 2; k <= N; ++k) root_exp_[k] = sched_.omega[k];
    solve_exp_ = sched_.block_solve_exp;
    log_cap_ = sched_.omega[N + 1] * d * static_cast<double>(sched_.log_m[d - 1]);
  } else {
    if (d != 2) throw ConfigError("dedicated exponents are a two-axis route");
    const double q = sched_.q;
    const double gamma = static_cast<double>(sched_.log_ratio(1));
    const int j = sched_.lag_prev[1];
    sum_exp_[1] = std::pow(q, j) * gamma;              // inner sum over the wide axis
    for (int k = 2; k <= j + 1; ++k) root_exp_[k] = 1.0 / q;
    root_exp_[N] = sum_exp_[1];
    solve_exp_ = std::pow(q, j + 1) * gamma;
    log_cap_ = 2.0 / (gamma * (q - 1.0)) * static_cast<double>(sched_.log_m[1]);
  }

  discover();
}

int FixedPointSystem::class_of(const FollowerKey& k) const {
  auto it = index_.find(k);
  if (it == index_.end()) throw ConfigError("unknown follower key");
  return it->second;
}

int FixedPointSystem::intern(const StaircasePrefix& word) {
  FollowerKey key = model_.follower_key(word);
  auto it = index_.find(key);
  if (it != index_.end()) return it->second;
  int id = static_cast<int>(reps_.size());
  keys_.push_back(key.bytes);
  index_.emplace(std::move(key), id);
  reps_.push_back(model_.canonical_rep(word));
  return id;
}

void FixedPointSystem::discover() {
  root_words_ = model_.enumerate_prefixes(sched_.chi_depths(sched_.N));
  for (const auto& w : root_words_) root_class_.push_back(intern(w));

  const auto axes = sched_.block_axes();
  const int d = sched_.d;
  // intern() appends class ids in order, so a growing index walk visits every
  // class exactly once.
  for (std::size_t cls = 0; cls < reps_.size(); ++cls) {
    StaircasePrefix ext = reps_[cls];
    std::vector<std::pair<std::vector<Digit>, int>> kids;
    std::vector<Digit> bundle(d, 0);
    bool cut = false;
    auto rec = [&](auto&& self, int level) -> void {
      if (level == d) {
        kids.emplace_back(bundle, intern(ext));
        return;
      }
      const int axis = axes[level];
      ext.digits[axis].push_back(0);
      for (Digit v = 0; v < model_.base(axis); ++v) {
        ext.digits[axis].back() = v;
        bundle[level] = v;
        if (model_.is_admissible(ext)) self(self, level + 1);
      }
      ext.digits[axis].pop_back();
    };
    try {
      rec(rec, 0);
    } catch (const DepthExceeded&) {
      if (!model_.depth_limited()) throw;
      cut = true;
      kids.clear();
    }
    cut_.push_back(cut ? 1 : 0);
    if (cut) {
      truncated_ = true;
      kids_.emplace_back();
      continue;
    }
    if (kids.empty()) throw EmptyOmega("a prefix class has no admissible continuation");
    std::sort(kids.begin(), kids.end());
    kids_.push_back(std::move(kids));
  }
}

double FixedPointSystem::eval_block(
    const std::vector<std::pair<std::vector<Digit>, int>>& kids,
    const std::vector<double>& log_z) const {
  const int d = sched_.d;
  // kids are sorted by bundle; group recursively per block level.
  auto rec = [&](auto&& self, std::size_t lo, std::size_t hi, int level) -> double {
    if (level == d) return log_z[kids[lo].second];
    std::vector<double> groups;
    std::size_t i = lo;
    while (i < hi) {
      std::size_t k = i;
      while (k < hi && kids[k].first[level] == kids[i].first[level]) ++k;
      double inner = self(self, i, k, level + 1);
      if (level + 1 < d) inner *= sum_exp_[level + 1];
      groups.push_back(inner);
      i = k;
    }
    return log_sum_exp(groups);
  };
  return rec(rec, 0, kids.size(), 0);
}

std::vector<double> FixedPointSystem::apply(const std::vector<double>& log_z) const {
  std::vector<double> out(log_z.size());
  for (std::size_t cls = 0; cls < kids_.size(); ++cls) {
    if (cut_[cls]) {
      out[cls] = log_z[cls];
      continue;
    }
    out[cls] = eval_block(kids_[cls], log_z) / solve_exp_;
  }
  return out;
}

double FixedPointSystem::root_value(const std::vector<double>& log_z) const {
  const int N = sched_.N;
  // Digit sequence of each root word along the reveal order.
  std::vector<std::pair<std::vector<Digit>, int>> items;
  for (std::size_t i = 0; i < root_words_.size(); ++i) {
    std::vector<Digit> seq(N);
    for (int k = 1; k <= N; ++k) {
      ChiStep st = sched_.chi_at(k);
      seq[k - 1] = root_words_[i].digits[st.axis][st.pos - 1];
    }
    items.emplace_back(std::move(seq), root_class_[i]);
  }
  std::sort(items.begin(), items.end());
  auto rec = [&](auto&& self, std::size_t lo, std::size_t hi, int level) -> double {
    if (level == N) return log_z[items[lo].second];
    std::vector<double> groups;
    std::size_t i = lo;
    while (i < hi) {
      std::size_t k = i;
      while (k < hi && items[k].first[level] == items[i].first[level]) ++k;
      double inner = self(self, i, k, level + 1);
      if (level + 1 < N) inner *= root_exp_[level + 2];
      groups.push_back(inner);
      i = k;
    }
    double v = log_sum_exp(groups);
    return v;
  };
  // The sum over chi_k carries exponent root_exp_[k]; the outermost none.
  // rec at level 0 groups by chi_1 digits: inner value of a chi_1-group gets
  // root_exp_[2] applied inside rec (level+1 == 1 < N path handled there).
  return rec(rec, 0, items.size(), 0);
}

TVector solve_t(const OmegaModel& model, const ParamSchedule& schedule,
                const SolveOptions& options) {
  FixedPointSystem sys(model, schedule, options.exponents, options.leaf_policy);
  const int n = sys.class_count();
  const double q = schedule.q;
  if (schedule.homogeneity >= 1.0)
    throw NonContracting("homogeneity degree must stay below 1");

  const double leaf_value =
      options.leaf_policy == SolveOptions::LeafPolicy::Cap ? sys.log_cap() : 0.0;

  auto run = [&](double start, TVector::Meta* meta) {
    // Cut leaves hold the start value forever; apply() leaves them unchanged.
    std::vector<double> z(n, start);
    double prev_delta = -1.0;
    int it = 0;
    for (; it < options.max_iterations; ++it) {
      std::vector<double> next = sys.apply(z);
      double delta = 0.0, scale = 1.0;
      for (int i = 0; i < n; ++i) {
        delta = std::max(delta, std::abs(next[i] - z[i]));
        scale = std::max(scale, std::abs(next[i]));
      }
      if (meta && prev_delta > 1e-300) {
        // Subtract the roundoff floor so the certificate measures the map,
        // not the last bits of the iterate.
        const double noise = 8.0 * std::numeric_limits<double>::epsilon() * scale;
        double ratio = std::max(0.0, delta - noise) / prev_delta;
        meta->contraction_max = std::max(meta->contraction_max, ratio);
      }
      prev_delta = delta;
      z = std::move(next);
      if (delta <= options.tol * (1.0 - 1.0 / q)) break;
    }
    if (meta) meta->iterations = it + 1;
    return z;
  };

  TVector tv;
  tv.log_cap = sys.log_cap();
  tv.meta.homogeneity = schedule.homogeneity;
  tv.meta.truncated = sys.truncated();

  double start = options.start_at_cap ? sys.log_cap() : 0.0;
  if (sys.truncated()) start = leaf_value;
  std::vector<double> z = run(start, &tv.meta);

  // Residual of one extra application (cut leaves excluded by construction).
  {
    std::vector<double> once = sys.apply(z);
    for (int i = 0; i < n; ++i)
      tv.meta.residual = std::max(tv.meta.residual, std::abs(once[i] - z[i]));
  }

  if (options.bidirectional_probe && !sys.truncated()) {
    std::vector<double> z2 = run(options.start_at_cap ? 0.0 : sys.log_cap(), nullptr);
    double gap = 0.0;
    for (int i = 0; i < n; ++i) gap = std::max(gap, std::abs(z2[i] - z[i]));
    tv.meta.bidirectional_gap = gap;
    if (gap > 2.0 * options.tol)
      tv.meta.warnings.push_back("bidirectional probe gap above 2*tol");
  }

  tv.log_t = std::move(z);
  tv.log_t_empty = sys.root_value(tv.log_t);
  for (int i = 0; i < n; ++i) tv.class_keys.push_back(sys.key_of(i));
  for (std::size_t i = 0; i < sys.roots().size(); ++i)
    tv.roots.emplace_back(sys.roots()[i], tv.log_t[sys.root_class(static_cast<int>(i))]);
  return tv;
}

DimValue hausdorff_dimension(const ParamSchedule& schedule, const TVector& tvec,
                             double tol) {
  const double q = schedule.q;
  const double ln_md = static_cast<double>(schedule.log_m[schedule.d - 1]);
  DimValue dim;
  dim.value = (q - 1.0) / q * tvec.log_t_empty / ln_md;
  const double residual = std::max(tvec.meta.residual, tol * (1.0 - 1.0 / q));
  const double slack = (q - 1.0) / q * (residual / (1.0 - 1.0 / q)) / ln_md;
  dim.lower = dim.value - slack;
  dim.upper = dim.value + slack;
  dim.notes.push_back("solver residual " + std::to_string(tvec.meta.residual));
  return dim;
}

DimValue hausdorff_dimension(const OmegaModel& model, const ParamSchedule& schedule,
                             const SolveOptions& options) {
  TVector tv = solve_t(model, schedule, options);
  DimValue dim = hausdorff_dimension(schedule, tv, options.tol);
  if (tv.meta.truncated) {
    SolveOptions other = options;
    other.leaf_policy = options.leaf_policy == SolveOptions::LeafPolicy::One
                            ? SolveOptions::LeafPolicy::Cap
                            : SolveOptions::LeafPolicy::One;
    TVector tv2 = solve_t(model, schedule, other);
    DimValue dim2 = hausdorff_dimension(schedule, tv2, options.tol);
    dim.lower = std::min(dim.lower, dim2.lower);
    dim.upper = std::max(dim.upper, dim2.upper);
    dim.value = 0.5 * (dim.lower + dim.upper);
    dim.notes.push_back("tree truncation: value bracketed by both leaf policies");
  }
  return dim;
}

}  // namespace multsub
