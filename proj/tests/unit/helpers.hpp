#pragma once

#include <vector>

#include "multsub/system.hpp"

namespace testutil {

using namespace multsub;

inline SystemSpec full_shift(int q, std::vector<int> m) {
  SystemSpec s;
  s.q = q;
  s.m = std::move(m);
  s.omega.kind = OmegaSpec::Kind::Full;
  return s;
}

inline SystemSpec carpet(int q, std::vector<int> m, std::vector<std::vector<Digit>> allowed) {
  SystemSpec s;
  s.q = q;
  s.m = std::move(m);
  s.omega.kind = OmegaSpec::Kind::Carpet;
  int d = static_cast<int>(s.m.size());
  for (const auto& col : allowed) {
    TupleId id = 0;
    for (int a = 0; a < d; ++a) id = id * s.m[a] + col[a];
    s.omega.carpet.push_back(id);
  }
  return s;
}

inline SystemSpec sft(int q, std::vector<int> m, std::vector<std::vector<std::uint8_t>> mat) {
  SystemSpec s;
  s.q = q;
  s.m = std::move(m);
  s.omega.kind = OmegaSpec::Kind::Sft;
  s.omega.sft = std::move(mat);
  return s;
}

// The 6x6 transition matrix over D = (0,0),(0,1),...,(2,1) used throughout:
// three row patterns, rows {0,1,2,4} = (0,1,1,1,1,1), rows {3,5} = (1,1,1,0,1,0).
inline std::vector<std::vector<std::uint8_t>> example2_matrix() {
  std::vector<std::vector<std::uint8_t>> a(6);
  for (int r : {0, 1, 2, 4}) a[r] = {0, 1, 1, 1, 1, 1};
  for (int r : {3, 5}) a[r] = {1, 1, 1, 0, 1, 0};
  return a;
}

inline std::vector<std::vector<std::uint8_t>> circulant_figure1() {
  std::vector<std::uint8_t> first = {1, 0, 0, 1, 0, 0};
  std::vector<std::vector<std::uint8_t>> a(6, std::vector<std::uint8_t>(6));
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) a[i][j] = first[((j - i) % 6 + 6) % 6];
  return a;
}

// y' must equal x (mod 2); forces zero conditional y-entropy given the past.
inline std::vector<std::vector<std::uint8_t>> parity_coupled_matrix() {
  std::vector<std::vector<std::uint8_t>> a(6, std::vector<std::uint8_t>(6, 0));
  for (int i = 0; i < 6; ++i) {
    int x = i / 2;
    for (int j = 0; j < 6; ++j) {
      int y2 = j % 2;
      if (y2 == x % 2) a[i][j] = 1;
    }
  }
  return a;
}

inline StaircasePrefix word2(std::vector<Digit> xs, std::vector<Digit> ys) {
  StaircasePrefix u;
  u.digits = {std::move(xs), std::move(ys)};
  return u;
}

}  // namespace testutil
