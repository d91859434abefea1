#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "multsub/system.hpp"

namespace multsub {

// One step of the coordinate-reveal order: digit `pos` (1-based) of `axis`.
struct ChiStep {
  int axis = 0;
  int pos = 1;
  bool operator==(const ChiStep&) const = default;
};

// Every combinatorial parameter the dimension formulas depend on. Axes are
// 0-based; axis 0 carries the largest base and axis d-1 the smallest, so the
// classical 2D quantities live at: gamma = log_ratio(1), j = lag_prev[1].
struct ParamSchedule {
  int q = 2;
  int d = 2;
  std::vector<int> m;
  std::vector<long double> log_m;

  // lag_prev[a] (a in 1..d-1): largest J with m[a]^(q^J) <= m[a-1].
  std::vector<int> lag_prev;
  // lag_last[a] (a in 0..d-1): largest P with m[d-1]^(q^P) <= m[a]; 0 at d-1.
  std::vector<int> lag_last;
  // carry[a] (a in 1..d-1): lag_last[a-1] minus the lag_prev suffix sum.
  std::vector<int> carry;

  // sigma[s] (s in 0..d-2): axes s..d-2 sorted by ascending asymptotic key
  // q^(lag_last[a]+1) * log(m[d-1]) / log(m[a]); ties by ascending axis.
  std::vector<std::vector<int>> sigma;

  int N = 0;                      // coordinates in the distinguished partition
  std::vector<ChiStep> chi_head;  // first N + d reveal steps (periodic after N)
  std::vector<double> phi;        // normalized reveal thresholds, phi[0] = 1
  std::vector<double> delta_chain;  // delta_1..delta_N, last one absorbs the tail
  std::vector<double> omega;        // omega[1..N+1]; omega[0] unused

  double omega_tilde = 0.0;      // omega_1 * ... * omega_{N-d+1}
  double block_solve_exp = 0.0;  // 1 / (omega_tilde * omega_{N+1})
  double homogeneity = 0.0;      // degree of one fixed-point application

  std::vector<std::string> warnings;

  // --- derived accessors -------------------------------------------------

  long double log_ratio(int axis) const { return log_m[axis] / log_m[axis - 1]; }
  // log(m[d-1]) / log(m[axis])
  long double tail_ratio(int axis) const { return log_m[d - 1] / log_m[axis]; }

  // Exact single-pair scaling map: smallest t with m[axis]^t >= m[axis-1]^k.
  long long pair_scale(int axis, long long k) const;
  // Composite depth of `axis` when axis 0 is resolved to depth n.
  long long scale_depth(int axis, long long n) const;
  std::vector<int> ball_shape(int n) const;

  ChiStep chi_at(int i) const;  // 1-based
  std::vector<int> chi_depths(int steps) const;
  std::vector<int> block_axes() const;  // axes of chi_{N+1..N+d}

  // Coefficient of one series term; r = number of incremented axes.
  // s_block = d for the head family (axis d-1 alone), else s in 1..d-1
  // (paper indexing). Throws IndexOutOfSchedule for invalid triples.
  double delta(int s_block, int r, int p) const;
  // Per-axis depth profile of the partition in that term.
  std::vector<int> term_shape(int s_block, int r, int p) const;

  struct Term {
    int s = 0;  // block index (d = head family)
    int t = 0;  // interval index in s-1..d-1; t-s+1 axes get bumped
    int p = 0;
    double coeff = 0.0;
    std::vector<int> shape;
  };
  // All terms with p <= pmax, in chain order.
  std::vector<Term> terms_through(int pmax) const;

  // Closed-form omega from the merge thresholds (test cross-check route).
  double omega_closed_form(int k) const;

  // Certified bound on the tail of any delta-weighted series whose terms are
  // bounded by p * log_{m[d-1]}(m[0]*...*m[d-1]).
  double series_tail_bound(int pmax) const;

  double log_md(double x) const { return std::log(x) / static_cast<double>(log_m[d - 1]); }
};

ParamSchedule build_schedule(const SystemSpec& spec);

}  // namespace multsub
