#pragma once

#include <map>
#include <vector>

#include "multsub/bigint.hpp"
#include "multsub/entropy.hpp"
#include "multsub/schedule.hpp"
#include "multsub/system.hpp"

namespace multsub {

// Memoized exact prefix counting. Counts are big integers; no floating
// accumulation happens before the final logarithm.
class CountTable {
 public:
  explicit CountTable(const OmegaModel& model);

  // Number of admissible staircase prefixes with this depth profile.
  const BigUint& count(const std::vector<int>& shape) const;

 private:
  const OmegaModel& model_;
  mutable std::map<std::vector<int>, BigUint> by_shape_;
  // Key: reachable-tuple mask plus the remaining per-axis depth profile.
  mutable std::map<std::pair<std::vector<std::uint64_t>, std::vector<int>>, BigUint>
      sft_memo_;
};

BigUint prefix_count(const OmegaModel& model, const std::vector<int>& shape);

// Log-count series with certified tail: the exact value lies in
// [value, value + tail].
DimValue minkowski_dimension(const OmegaModel& model, const ParamSchedule& schedule,
                             int terms, std::vector<SeriesRow>* rows = nullptr);

// Two-axis evaluation from (q, gamma, j) directly.
DimValue minkowski_dimension_2d(const OmegaModel& model, const ParamSchedule& schedule,
                                int terms);

struct EqualityReport {
  int depth = 0;
  bool spherically_symmetric = true;       // outdegree constant per level
  bool first_axis_count_constant = true;   // x-options independent of the head word
  bool marginal_counts_constant = true;    // second-axis branching, levels <= lag
  bool column_counts_constant = true;      // x-options independent of deeper history
  bool exact_by_quotient = false;          // depth exhausted every follower class
  int distinct_keys = 0;
  bool all_hold() const {
    return spherically_symmetric && first_axis_count_constant && marginal_counts_constant &&
           column_counts_constant;
  }
};

// The four equality conditions between the two dimensions, verified for all
// prefixes up to `depth`. Two axes only.
EqualityReport equality_conditions(const OmegaModel& model, const ParamSchedule& schedule,
                                   int depth);

}  // namespace multsub
