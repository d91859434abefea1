#include "multsub/empirical.hpp"

#include <cmath>
#include <limits>
#include <ostream>

namespace multsub {

namespace {

// Count admissible fiber words of the given staircase shape by plain DFS with
// admissibility pruning. Deliberately independent of the transfer-counting
// tables: this is the oracle side of the pair.
long long count_fiber_words(const OmegaModel& model, const std::vector<int>& shape) {
  const int d = model.d();
  const int L = shape[d - 1];
  if (L == 0) return 1;
  StaircasePrefix w;
  w.digits.assign(d, {});
  long long count = 0;
  auto rec = [&](auto&& self, int pos) -> void {
    if (pos > L) {
      ++count;
      return;
    }
    int fa = 0;
    while (fa < d && shape[fa] < pos) ++fa;
    auto column = [&](auto&& col_self, int axis) -> void {
      if (axis == d) {
        if (model.is_admissible(w)) self(self, pos + 1);
        return;
      }
      for (Digit v = 0; v < model.base(axis); ++v) {
        w.digits[axis].push_back(v);
        col_self(col_self, axis + 1);
        w.digits[axis].pop_back();
      }
    };
    column(column, fa);
  };
  rec(rec, 1);
  return count;
}

std::uint64_t fnv1a(const std::vector<std::uint8_t>& bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (std::uint8_t b : bytes) {
    h ^= b;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace

BigUint box_count(const OmegaModel& model, const ParamSchedule& schedule, int n) {
  const int d = model.d();
  const auto shape = schedule.ball_shape(n);
  long long budget = 0;
  for (int a = 0; a < d; ++a) budget += shape[a];
  if (budget > 26)
    throw BudgetExceeded("exact quasi-square enumeration needs " + std::to_string(budget) +
                         " symbols; the guard allows 26");
  const int L = shape[d - 1];
  BigUint total(1);
  for (int i = 1; i <= L; ++i) {
    if (i % schedule.q == 0) continue;
    std::vector<int> fiber_shape(d, 0);
    for (int a = 0; a < d; ++a)
      for (long long pos = i; pos <= shape[a]; pos *= schedule.q) ++fiber_shape[a];
    total.mul_small(static_cast<std::uint64_t>(count_fiber_words(model, fiber_shape)));
  }
  return total;
}

double pmu_log_mass(const Measure& mu, const StaircasePrefix& word) {
  double logm = 0.0;
  for (const auto& fw : fiber_words(mu.model(), mu.schedule().q, word)) {
    const double m = mu.mass(fw);
    if (m <= 0.0) return -std::numeric_limits<double>::infinity();
    logm += std::log(m);
  }
  return logm;
}

LocalDimStats estimate_local_dimension(const Measure& mu, int samples, int n,
                                       std::uint64_t seed) {
  LocalDimStats out;
  out.samples = samples;
  out.n = n;
  out.seed = seed;
  Rng rng(seed);
  const double ln_m1 = std::log(static_cast<double>(mu.model().base(0)));
  double sum = 0.0, sumsq = 0.0;
  for (int s = 0; s < samples; ++s) {
    StaircasePrefix word = sample_pmu(mu, n, rng);
    const double v = -pmu_log_mass(mu, word) / (n * ln_m1);
    sum += v;
    sumsq += v * v;
  }
  out.mean = sum / samples;
  const double var = std::max(0.0, sumsq / samples - out.mean * out.mean);
  out.stderr_mean = std::sqrt(var / samples);
  return out;
}

RenderResult render(const OmegaModel& model, const ParamSchedule& schedule,
                    const RenderSpec& spec) {
  if (model.d() != 2) throw ConfigError("rendering covers two axes only");
  if (spec.order < 1) throw ConfigError("order must be >= 1");
  const int m1 = model.base(0), m2 = model.base(1);
  int gx = 0, gy = 0;
  for (long long w = m1; w <= spec.resolution; w *= m1) ++gx;
  for (long long h = m2; h <= spec.resolution; h *= m2) ++gy;
  if (gx == 0 || gy == 0)
    throw ResolutionTooCoarse("resolution below one digit per axis");

  long long horizon = 1;
  for (int i = 0; i < spec.order; ++i) horizon *= schedule.q;

  RenderResult img;
  img.depth_x = gx;
  img.depth_y = gy;
  img.width = 1;
  img.height = 1;
  for (int i = 0; i < gx; ++i) img.width *= m1;
  for (int i = 0; i < gy; ++i) img.height *= m2;
  img.pixels.assign(static_cast<std::size_t>(img.width) * img.height, 255);
  img.comment = "order " + std::to_string(spec.order) +
                ", cell-intersects semantics, row 0 = top of the unit square";

  // A pixel is dark when every fiber inside the horizon admits a word
  // matching the digits the pixel pins down.
  std::vector<Digit> xd(gx), yd(gy);
  for (int iy = 0; iy < img.height; ++iy) {
    int rest = iy;
    for (int k = gy - 1; k >= 0; --k) {
      yd[k] = rest % m2;
      rest /= m2;
    }
    for (int ix = 0; ix < img.width; ++ix) {
      rest = ix;
      for (int k = gx - 1; k >= 0; --k) {
        xd[k] = rest % m1;
        rest /= m1;
      }
      bool ok = true;
      for (long long i = 1; i <= horizon && ok; ++i) {
        if (i % schedule.q == 0) continue;
        int len = 0;
        for (long long pos = i; pos <= horizon; pos *= schedule.q) ++len;
        StaircasePrefix w;
        w.digits.assign(2, {});
        auto sat = [&](auto&& self, int r, long long pos) -> bool {
          if (r == len) return true;
          const Digit x_lo = pos <= gx ? xd[pos - 1] : 0;
          const Digit x_hi = pos <= gx ? xd[pos - 1] + 1 : m1;
          const Digit y_lo = pos <= gy ? yd[pos - 1] : 0;
          const Digit y_hi = pos <= gy ? yd[pos - 1] + 1 : m2;
          for (Digit x = x_lo; x < x_hi; ++x)
            for (Digit y = y_lo; y < y_hi; ++y) {
              w.digits[0].push_back(x);
              w.digits[1].push_back(y);
              const bool good =
                  model.is_admissible(w) && self(self, r + 1, pos * schedule.q);
              w.digits[0].pop_back();
              w.digits[1].pop_back();
              if (good) return true;
            }
          return false;
        };
        ok = sat(sat, 0, i);
      }
      if (ok) img.pixels[static_cast<std::size_t>(iy) * img.width + ix] = 0;
    }
  }
  img.hash = fnv1a(img.pixels);
  return img;
}

void write_pgm(const RenderResult& image, std::ostream& out) {
  out << "P5\n# " << image.comment << "\n"
      << image.width << " " << image.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.pixels.data()),
            static_cast<std::streamsize>(image.pixels.size()));
}

}  // namespace multsub
