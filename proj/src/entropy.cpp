#include "multsub/entropy.hpp"

#include <cmath>

namespace multsub {

double partition_entropy(const Measure& mu, const std::vector<int>& shape) {
  return mu.partition_entropy(shape);
}

DimValue pmu_dimension_series(const Measure& mu, int terms, std::vector<SeriesRow>* rows) {
  const ParamSchedule& sc = mu.schedule();
  DimValue out;
  out.terms = terms;
  double sum = 0.0;
  for (const auto& term : sc.terms_through(terms)) {
    const double h = mu.partition_entropy(term.shape);
    sum += term.coeff * h;
    if (rows) rows->push_back({term.s, term.t, term.p, term.coeff, h, term.coeff * h});
  }
  out.value = sum;
  out.lower = sum;
  out.tail_bound = sc.series_tail_bound(terms);
  out.upper = sum + out.tail_bound;
  return out;
}

DimValue pmu_dimension_series_2d(const Measure& mu, int terms) {
  const ParamSchedule& sc = mu.schedule();
  if (sc.d != 2) throw ConfigError("two-axis series requires two axes");
  const double q = sc.q;
  const double gamma = static_cast<double>(sc.log_ratio(1));
  const int j = sc.lag_prev[1];
  double sum = 0.0;
  for (int p = 1; p <= j; ++p)
    sum += (q - 1) * (q - 1) / std::pow(q, p + 1) * mu.partition_entropy({0, p});
  for (int p = j + 1; p <= terms; ++p) {
    sum += (q - 1) * (std::pow(q, j + 1) * gamma - 1) / std::pow(q, p + 1) *
           mu.partition_entropy({p - j, p});
    sum += (q - 1) * (1 - std::pow(q, j) * gamma) / std::pow(q, p) *
           mu.partition_entropy({p - j - 1, p});
  }
  DimValue out;
  out.terms = terms;
  out.value = sum;
  out.lower = sum;
  out.tail_bound = sc.series_tail_bound(terms);
  out.upper = sum + out.tail_bound;
  return out;
}

LyReport ly_check(const Measure& mu, int depth, int series_terms) {
  const OmegaModel& om = mu.model();
  const ParamSchedule& sc = mu.schedule();
  if (sc.d != 2) throw ConfigError("the disintegration check covers two axes only");
  LyReport rep;
  rep.depth = depth;

  // Condition: for every square cylinder I and admissible second-axis
  // extension, mu(I and ext) / mu_y(pi(I) ext) stays equal to mu(I)/mu_y(pi I).
  for (int p = 1; p <= depth; ++p) {
    std::vector<StaircasePrefix> atoms;
    try {
      atoms = om.enumerate_prefixes({p, p});
    } catch (const EmptyOmega&) {
      break;
    }
    for (const auto& atom : atoms) {
      const double mi = mu.mass(atom);
      if (mi <= 0.0) continue;
      StaircasePrefix proj;
      proj.digits = {{}, atom.digits[1]};
      const double base = mi / mu.mass(proj);
      StaircasePrefix ext = atom;
      StaircasePrefix ext_proj = proj;
      auto walk = [&](auto&& self, int len) -> void {
        if (len >= depth - p) return;
        ext.digits[1].push_back(0);
        ext_proj.digits[1].push_back(0);
        for (Digit v = 0; v < om.base(1); ++v) {
          ext.digits[1].back() = v;
          ext_proj.digits[1].back() = v;
          const double denom = mu.mass(ext_proj);
          if (denom <= 0.0) continue;
          const double ratio = mu.mass(ext) / denom;
          rep.condition_gap = std::max(rep.condition_gap, std::abs(ratio - base));
          self(self, len + 1);
        }
        ext.digits[1].pop_back();
        ext_proj.digits[1].pop_back();
      };
      walk(walk, 0);
    }
  }
  rep.condition_holds_to_depth = rep.condition_gap <= 1e-9;

  rep.dim_h_pmu = pmu_dimension_series_2d(mu, series_terms);

  // Right side of the identity, in dimension units:
  // (q-1)^2 sum [ gamma H(square_p) + (1-gamma) H(marginal_p) ] / q^{p+1}.
  const double q = sc.q;
  const double gamma = static_cast<double>(sc.log_ratio(1));
  double rhs = 0.0;
  for (int p = 1; p <= series_terms; ++p) {
    const double hsq = mu.partition_entropy({p, p});
    const double hy = mu.last_axis_entropy(p);
    rhs += (q - 1) * (q - 1) / std::pow(q, p + 1) * (gamma * hsq + (1 - gamma) * hy);
  }
  rep.ly_rhs.terms = series_terms;
  rep.ly_rhs.value = rhs;
  rep.ly_rhs.lower = rhs;
  rep.ly_rhs.tail_bound = sc.series_tail_bound(series_terms);
  rep.ly_rhs.upper = rhs + rep.ly_rhs.tail_bound;

  rep.gap = rep.ly_rhs.value - rep.dim_h_pmu.value;
  return rep;
}

}  // namespace multsub
