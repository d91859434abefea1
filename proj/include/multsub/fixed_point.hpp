#pragma once

#include <unordered_map>
#include <vector>

#include "multsub/schedule.hpp"
#include "multsub/system.hpp"

namespace multsub {

// A dimension estimate with certified bracketing.
struct DimValue {
  double value = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  int terms = 0;
  double tail_bound = 0.0;
  std::vector<std::string> notes;
};

struct SolveOptions {
  double tol = 1e-12;
  int max_iterations = 20000;
  bool start_at_cap = false;
  bool bidirectional_probe = true;
  // Dedicated2D derives every exponent from (q, gamma, j) instead of the
  // omega weights; the two routes must agree and are cross-checked in tests.
  enum class Exponents { General, Dedicated2D };
  Exponents exponents = Exponents::General;
  // Value pinned to the cut leaves of a depth-truncated tree.
  enum class LeafPolicy { One, Cap };
  LeafPolicy leaf_policy = LeafPolicy::One;
};

// The block-recursion on the follower-key quotient of the prefix tree. One
// application is a monotone map, homogeneous of degree 1/q, hence a 1/q
// contraction in the log-sup metric.
class FixedPointSystem {
 public:
  FixedPointSystem(const OmegaModel& model, const ParamSchedule& schedule,
                   SolveOptions::Exponents mode = SolveOptions::Exponents::General,
                   SolveOptions::LeafPolicy leaf = SolveOptions::LeafPolicy::One);

  int class_count() const { return static_cast<int>(reps_.size()); }
  double log_cap() const { return log_cap_; }
  bool truncated() const { return truncated_; }

  // One application in log space; input and output are per-class vectors.
  std::vector<double> apply(const std::vector<double>& log_z) const;
  // log t_empty given class values.
  double root_value(const std::vector<double>& log_z) const;

  const std::vector<StaircasePrefix>& roots() const { return root_words_; }
  int root_class(int i) const { return root_class_[i]; }
  int class_of(const FollowerKey& k) const;
  const StaircasePrefix& rep(int cls) const { return reps_[cls]; }
  const std::string& key_of(int cls) const { return keys_[cls]; }

 private:
  int intern(const StaircasePrefix& word);
  void discover();
  double eval_block(const std::vector<std::pair<std::vector<Digit>, int>>& kids,
                    const std::vector<double>& log_z) const;

  const OmegaModel& model_;
  const ParamSchedule& sched_;
  SolveOptions::Exponents mode_;
  SolveOptions::LeafPolicy leaf_;

  std::vector<StaircasePrefix> reps_;
  std::vector<std::string> keys_;
  std::unordered_map<FollowerKey, int, FollowerKeyHash> index_;
  std::vector<std::vector<std::pair<std::vector<Digit>, int>>> kids_;  // block order
  std::vector<std::uint8_t> cut_;  // truncated tree leaves
  std::vector<StaircasePrefix> root_words_;
  std::vector<int> root_class_;

  std::vector<double> sum_exp_;  // exponent carried by the i-th sum of a block, i in 0..d-1
  std::vector<double> root_exp_;  // exponent carried by the chi_k sum, k in 1..N
  double solve_exp_ = 1.0;        // exponent applied to the nested block sum
  double log_cap_ = 0.0;
  bool truncated_ = false;
};

// Solved fixed point on the quotient plus solve diagnostics.
struct TVector {
  std::vector<double> log_t;            // per class
  std::vector<std::string> class_keys;  // follower-key bytes per class
  std::vector<std::pair<StaircasePrefix, double>> roots;  // boundary word, log t
  double log_t_empty = 0.0;
  double log_cap = 0.0;
  struct Meta {
    int iterations = 0;
    double residual = 0.0;          // log-sup distance of one extra application
    double contraction_max = 0.0;   // max per-iteration ratio observed
    double homogeneity = 0.0;
    double bidirectional_gap = -1.0;  // -1 when the probe was skipped
    bool truncated = false;
    std::vector<std::string> warnings;
  } meta;
};

TVector solve_t(const OmegaModel& model, const ParamSchedule& schedule,
                const SolveOptions& options = {});

// value = ((q-1)/q) log_{m_{d-1}} t_empty, bracketed by the solver residual.
DimValue hausdorff_dimension(const ParamSchedule& schedule, const TVector& tvec,
                             double tol = 1e-12);

// Convenience: solve and convert; solves both leaf policies for truncated trees
// and widens the bracket accordingly.
DimValue hausdorff_dimension(const OmegaModel& model, const ParamSchedule& schedule,
                             const SolveOptions& options = {});

}  // namespace multsub
