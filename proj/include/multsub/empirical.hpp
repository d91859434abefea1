#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "multsub/bigint.hpp"
#include "multsub/measure.hpp"

namespace multsub {

// Exact number of admissible quasi-square prefixes at scale index n, by
// depth-first search over each multiplicative fiber. Guarded: the total
// symbol budget must stay small enough for exact enumeration.
BigUint box_count(const OmegaModel& model, const ParamSchedule& schedule, int n);

// log of the fiber-product mass of the ball around `word`; safe for scales
// where the plain product would underflow.
double pmu_log_mass(const Measure& mu, const StaircasePrefix& word);

struct LocalDimStats {
  double mean = 0.0;
  double stderr_mean = 0.0;
  int samples = 0;
  int n = 0;
  std::uint64_t seed = 0;
};

// Monte Carlo local dimension: mean of -log_{m1} P(B_n(x)) / n over
// independent draws from the fiber-product measure.
LocalDimStats estimate_local_dimension(const Measure& mu, int samples, int n,
                                       std::uint64_t seed);

struct RenderSpec {
  int order = 4;       // constraints enforced for chains inside depth q^order
  int resolution = 81; // pixels per unit, rounded down to exact digit grids
};

struct RenderResult {
  int width = 0;
  int height = 0;
  int depth_x = 0;  // digits resolved per axis
  int depth_y = 0;
  std::vector<std::uint8_t> pixels;  // row-major, 0 = member cell
  std::uint64_t hash = 0;
  std::string comment;
};

// Two-axis bitmap of the order-k approximation; a pixel is dark when its
// cell intersects the approximation (cell-intersects semantics).
RenderResult render(const OmegaModel& model, const ParamSchedule& schedule,
                    const RenderSpec& spec);

void write_pgm(const RenderResult& image, std::ostream& out);

}  // namespace multsub
