#pragma once

#include <vector>

#include "multsub/measure.hpp"

namespace multsub {

struct SeriesRow {
  int s = 0;
  int t = 0;
  int p = 0;
  double coeff = 0.0;
  double term_value = 0.0;  // entropy or log-count
  double contribution = 0.0;
};

// Entropy (base m[d-1]) of the staircase-prefix partition of the generating
// set at the given per-axis depth profile.
double partition_entropy(const Measure& mu, const std::vector<int>& shape);

// Dimension of the fiber-product measure: the coefficient-weighted entropy
// series with a certified truncation tail. value is the partial sum; the
// exact value lies in [value, value + tail].
DimValue pmu_dimension_series(const Measure& mu, int terms,
                              std::vector<SeriesRow>* rows = nullptr);

// Two-axis evaluation with the three printed coefficient families, derived
// directly from (q, gamma, j). Cross-check route for the general machinery.
DimValue pmu_dimension_series_2d(const Measure& mu, int terms);

struct LyReport {
  int depth = 0;
  bool condition_holds_to_depth = true;
  double condition_gap = 0.0;  // worst deviation of the disintegration ratios
  DimValue dim_h_pmu;
  DimValue ly_rhs;
  double gap = 0.0;  // ly_rhs - dim_h
};

// Finite-depth check of the disintegration-constancy condition together with
// both sides of the entropy-dimension identity. Two axes only.
LyReport ly_check(const Measure& mu, int depth, int series_terms = 45);

}  // namespace multsub
