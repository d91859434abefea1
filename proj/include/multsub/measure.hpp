#pragma once

#include <map>
#include <optional>
#include <unordered_map>
#include <vector>

#include "multsub/fixed_point.hpp"
#include "multsub/rng.hpp"
#include "multsub/schedule.hpp"
#include "multsub/system.hpp"

namespace multsub {

// User-facing measure description on the generating set Omega.
struct MeasureSpec {
  enum class Kind { Bernoulli, Markov, Cylinder, Optimal };
  Kind kind = Kind::Bernoulli;

  std::vector<double> weights;  // Bernoulli: per tuple id

  std::vector<double> initial;  // Markov
  std::vector<std::vector<double>> transition;

  struct Atom {
    StaircasePrefix word;
    double mass = 0.0;
  };
  std::vector<Atom> cylinder;  // Cylinder: masses grouped by shape internally
};

// Bound measure: validates the spec against Omega and answers mass, entropy,
// conditional and sampling queries. Immutable after construction.
class Measure {
 public:
  Measure(const OmegaModel& model, const ParamSchedule& schedule, MeasureSpec spec,
          const TVector* tvec = nullptr);

  MeasureSpec::Kind kind() const { return spec_.kind; }

  // mu of the generalized cylinder [u]; 0 for inadmissible words.
  double mass(const StaircasePrefix& u) const;

  // Law of the next digit on `axis` given u; pairs (digit, probability).
  std::vector<std::pair<Digit, double>> extension_dist(const StaircasePrefix& u,
                                                       int axis) const;

  // Entropy (base m[d-1]) of the admissible-prefix partition at `shape`.
  double partition_entropy(const std::vector<int>& shape) const;

  // Entropy (base m[d-1]) of the last-axis marginal word of length `depth`.
  double last_axis_entropy(int depth) const;

  StaircasePrefix sample(const std::vector<int>& shape, Rng& rng) const;

  const OmegaModel& model() const { return model_; }
  const ParamSchedule& schedule() const { return sched_; }

 private:
  void validate();
  const std::vector<MeasureSpec::Atom>* covering_level(const std::vector<int>& shape) const;
  double bernoulli_marginal(int first_axis, const std::vector<Digit>& col) const;
  double markov_mass(const StaircasePrefix& u) const;
  double bernoulli_mass(const StaircasePrefix& u) const;
  double cylinder_mass(const StaircasePrefix& u) const;
  double optimal_mass(const StaircasePrefix& u) const;

  double entropy_bernoulli(const std::vector<int>& shape) const;
  double entropy_markov(const std::vector<int>& shape) const;
  double entropy_cylinder(const std::vector<int>& shape) const;
  double entropy_optimal(const std::vector<int>& shape) const;
  double entropy_atoms(const std::vector<int>& shape) const;  // guarded fallback

  // --- optimal-measure chain machinery ------------------------------------
  bool chain_boundary(int step) const;
  double chain_exponent(int step) const;
  // log of the tail potential of an admissible reveal-order prefix.
  double log_potential(const StaircasePrefix& u, int step) const;
  std::vector<std::pair<Digit, double>> chain_dist(const StaircasePrefix& u,
                                                   int step) const;

  const OmegaModel& model_;
  const ParamSchedule& sched_;
  MeasureSpec spec_;
  const TVector* tvec_ = nullptr;

  std::vector<std::vector<double>> bern_marg_;  // per first_axis, packed partial code
  std::map<std::vector<int>, std::vector<MeasureSpec::Atom>> cyl_levels_;
  mutable std::unordered_map<std::string, double> pot_memo_;
  mutable std::unordered_map<std::string, double> mass_memo_;
};

// --- fiber-product measure on X_Omega --------------------------------------

struct PmuMass {
  double mass = 0.0;
  bool admissible = true;
};

// Splits a word into its multiplicative fiber words (indices i with q not
// dividing i); per-fiber staircase shapes follow from the word's shape.
std::vector<StaircasePrefix> fiber_words(const OmegaModel& model, int q,
                                         const StaircasePrefix& word);

// P_mu[u] = product of mu over the fiber words of u.
PmuMass pmu_cylinder_mass(const Measure& mu, const StaircasePrefix& word);

// Mass of the metric ball with this center resolved to scale index n.
PmuMass pmu_ball_mass(const Measure& mu, const StaircasePrefix& center, int n);

// One P_mu-distributed word at the ball depth profile for scale n.
StaircasePrefix sample_pmu(const Measure& mu, int n, Rng& rng);

// Materializes the dimension-maximizing measure as explicit cylinder masses on
// the reveal-order boundary prefixes of the first `levels` blocks.
MeasureSpec optimal_measure(const OmegaModel& model, const ParamSchedule& schedule,
                            const TVector& tvec, int levels);

}  // namespace multsub
