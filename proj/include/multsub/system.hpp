#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "multsub/errors.hpp"

namespace multsub {

using Digit = int;
using TupleId = int;  // row-major index over the product alphabet

// Description of the generating closed set. Axis 0 carries the largest base;
// the last axis the smallest.
struct OmegaSpec {
  enum class Kind { Full, Carpet, Sft, Tree };
  Kind kind = Kind::Full;

  // Carpet: allowed full tuples (sorted ids).
  std::vector<TupleId> carpet;

  // Sft: 0/1 transition matrix over full tuples, memory 1, as loaded.
  std::vector<std::vector<std::uint8_t>> sft;

  // Tree: explicit admissible full-tuple words, prefix closed, up to depth.
  std::vector<std::vector<TupleId>> tree_words;
  int tree_depth = 0;
  int tree_memory = 0;  // 0 = no collapse rule declared
};

struct SystemSpec {
  int q = 2;
  std::vector<int> m;  // m[0] >= m[1] >= ... >= 2
  OmegaSpec omega;

  int d() const { return static_cast<int>(m.size()); }
  long tuple_count() const {
    long t = 1;
    for (int b : m) t *= b;
    return t;
  }
};

// A generalized prefix: per-axis digit words whose lengths weakly increase
// toward the last (smallest-base) axis.
struct StaircasePrefix {
  std::vector<std::vector<Digit>> digits;  // digits[a] = word of axis a

  int axes() const { return static_cast<int>(digits.size()); }
  int len(int axis) const { return static_cast<int>(digits[axis].size()); }
  int max_len() const { return digits.empty() ? 0 : len(axes() - 1); }
  std::vector<int> shape() const;
  bool operator==(const StaircasePrefix&) const = default;
};

// Canonical identifier of the follower set of a prefix. Equal keys imply
// identical follower trees.
struct FollowerKey {
  std::string bytes;
  bool operator==(const FollowerKey&) const = default;
};

struct FollowerKeyHash {
  std::size_t operator()(const FollowerKey& k) const {
    return std::hash<std::string>()(k.bytes);
  }
};

// Immutable query interface over (q, m, Omega). All operations are pure.
class OmegaModel {
 public:
  explicit OmegaModel(const SystemSpec& spec);

  const SystemSpec& spec() const { return spec_; }
  int d() const { return d_; }
  int base(int axis) const { return spec_.m[axis]; }
  int tuple_count() const { return n_tuples_; }

  TupleId pack(const std::vector<Digit>& col) const;
  std::vector<Digit> unpack(TupleId t) const;
  Digit digit_of(TupleId t, int axis) const { return unpack_[t][axis]; }

  bool is_admissible(const StaircasePrefix& u) const;

  // All admissible prefixes with the given per-axis lengths, in lexicographic
  // order of the flattened (axis-0 word, axis-1 word, ...) digit sequence.
  // Throws EmptyOmega when none exist.
  std::vector<StaircasePrefix> enumerate_prefixes(const std::vector<int>& lengths) const;

  // Admissible one-step extension bundles: one new digit on every axis.
  // Bundle digits are axis-ordered (axis 0 first).
  std::vector<std::vector<Digit>> followers(const StaircasePrefix& u) const;

  FollowerKey follower_key(const StaircasePrefix& u) const;

  // Digits admissible for `axis` at position len(axis)+1, all other
  // coordinates of u held fixed. Requires the extension to stay a staircase.
  std::vector<Digit> extensions(const StaircasePrefix& u, int axis) const;

  // True when Omega is a tree with a declared truncation depth.
  bool depth_limited() const { return spec_.omega.kind == OmegaSpec::Kind::Tree; }
  int depth_limit() const { return spec_.omega.tree_depth; }

  // Transition matrix after dead-state pruning (Sft only).
  const std::vector<std::vector<std::uint8_t>>& pruned_matrix() const { return sft_; }
  bool tuple_alive(TupleId t) const;

 private:
  void validate_and_build();
  void prune_sft();
  void build_tree_index();
  bool column_feasible(int first_axis, const std::vector<Digit>& col) const;
  // Reachable-tuple bitmask at the last position; empty optional = inadmissible.
  std::optional<std::vector<std::uint64_t>> reach_final(const StaircasePrefix& u) const;
  void check_staircase(const StaircasePrefix& u) const;

  SystemSpec spec_;
  int d_ = 0;
  int n_tuples_ = 0;
  int mask_words_ = 0;
  std::vector<std::vector<Digit>> unpack_;
  std::vector<std::vector<std::uint8_t>> sft_;  // pruned copy
  std::vector<std::uint8_t> alive_;
  std::vector<std::vector<std::uint64_t>> out_mask_;  // Sft: follower bitmask per tuple
  std::vector<std::vector<std::vector<TupleId>>> tree_levels_;  // words by length

 public:
  // Shortest prefix with the same follower key as u (drops history the key
  // does not retain). Used to keep memoized recursions cheap.
  StaircasePrefix canonical_rep(const StaircasePrefix& u) const;
};

}  // namespace multsub
