#include "multsub/system.hpp"

#include <algorithm>
#include <cstring>
#include <map>
#include <set>

namespace multsub {

namespace {

void append_u16(std::string& s, int v) {
  s.push_back(static_cast<char>(v & 0xff));
  s.push_back(static_cast<char>((v >> 8) & 0xff));
}

}  // namespace

std::vector<int> StaircasePrefix::shape() const {
  std::vector<int> out(digits.size());
  for (std::size_t a = 0; a < digits.size(); ++a) out[a] = static_cast<int>(digits[a].size());
  return out;
}

OmegaModel::OmegaModel(const SystemSpec& spec) : spec_(spec) { validate_and_build(); }

void OmegaModel::validate_and_build() {
  if (spec_.q < 2) throw ConfigError("q must be >= 2");
  d_ = spec_.d();
  if (d_ < 2) throw ConfigError("need at least two axes");
  for (int a = 0; a < d_; ++a) {
    if (spec_.m[a] < 2) throw ConfigError("every base must be >= 2");
    if (a > 0 && spec_.m[a] > spec_.m[a - 1])
      throw ConfigError("bases must be non-increasing");
  }
  long t = spec_.tuple_count();
  if (t > 4096) throw ConfigError("product alphabet too large");
  n_tuples_ = static_cast<int>(t);
  mask_words_ = (n_tuples_ + 63) / 64;

  unpack_.resize(n_tuples_);
  for (TupleId id = 0; id < n_tuples_; ++id) {
    std::vector<Digit> col(d_);
    int rest = id;
    for (int a = d_ - 1; a >= 0; --a) {
      col[a] = rest % spec_.m[a];
      rest /= spec_.m[a];
    }
    unpack_[id] = col;
  }

  switch (spec_.omega.kind) {
    case OmegaSpec::Kind::Full:
      break;
    case OmegaSpec::Kind::Carpet: {
      if (spec_.omega.carpet.empty()) throw ConfigError("carpet: allowed set empty");
      for (TupleId id : spec_.omega.carpet)
        if (id < 0 || id >= n_tuples_) throw ConfigError("carpet: tuple out of range");
      std::sort(spec_.omega.carpet.begin(), spec_.omega.carpet.end());
      spec_.omega.carpet.erase(
          std::unique(spec_.omega.carpet.begin(), spec_.omega.carpet.end()),
          spec_.omega.carpet.end());
      break;
    }
    case OmegaSpec::Kind::Sft:
      prune_sft();
      break;
    case OmegaSpec::Kind::Tree:
      build_tree_index();
      break;
  }
}

void OmegaModel::prune_sft() {
  const auto& mat = spec_.omega.sft;
  if (static_cast<int>(mat.size()) != n_tuples_)
    throw ConfigError("sft: matrix must be square over the product alphabet");
  for (const auto& row : mat) {
    if (static_cast<int>(row.size()) != n_tuples_) throw ConfigError("sft: ragged matrix");
    for (auto v : row)
      if (v > 1) throw ConfigError("sft: entries must be 0/1");
  }

  alive_.assign(n_tuples_, 1);
  bool changed = true;
  while (changed) {
    changed = false;
    for (TupleId u = 0; u < n_tuples_; ++u) {
      if (!alive_[u]) continue;
      bool row_has = false, col_has = false;
      for (TupleId v = 0; v < n_tuples_; ++v) {
        if (alive_[v] && mat[u][v]) row_has = true;
        if (alive_[v] && mat[v][u]) col_has = true;
      }
      if (!row_has || !col_has) {
        alive_[u] = 0;
        changed = true;
      }
    }
  }
  if (std::none_of(alive_.begin(), alive_.end(), [](std::uint8_t a) { return a; }))
    throw EmptyOmega("sft prunes to the empty system");

  sft_.assign(n_tuples_, std::vector<std::uint8_t>(n_tuples_, 0));
  out_mask_.assign(n_tuples_, std::vector<std::uint64_t>(mask_words_, 0));
  for (TupleId u = 0; u < n_tuples_; ++u) {
    if (!alive_[u]) continue;
    for (TupleId v = 0; v < n_tuples_; ++v) {
      if (alive_[v] && mat[u][v]) {
        sft_[u][v] = 1;
        out_mask_[u][v >> 6] |= 1ULL << (v & 63);
      }
    }
  }
}

void OmegaModel::build_tree_index() {
  const auto& om = spec_.omega;
  if (om.tree_depth < 1) throw ConfigError("tree: depth must be >= 1");
  tree_levels_.assign(om.tree_depth + 1, {});
  std::set<std::vector<TupleId>> seen;
  for (const auto& w : om.tree_words) {
    if (w.empty() || static_cast<int>(w.size()) > om.tree_depth)
      throw ConfigError("tree: word length out of range");
    for (TupleId id : w)
      if (id < 0 || id >= n_tuples_) throw ConfigError("tree: tuple out of range");
    if (!seen.insert(w).second) continue;
    tree_levels_[w.size()].push_back(w);
  }
  // Prefix closure.
  for (int len = 2; len <= om.tree_depth; ++len) {
    for (const auto& w : tree_levels_[len]) {
      std::vector<TupleId> parent(w.begin(), w.end() - 1);
      if (!seen.count(parent)) throw ConfigError("tree: word set is not prefix-closed");
    }
  }
  // Words that stop before the declared depth have no continuation inside the
  // listed tree; drop them so every survivor extends to the full depth.
  for (int len = om.tree_depth - 1; len >= 1; --len) {
    std::set<std::vector<TupleId>> parents;
    for (const auto& w : tree_levels_[len + 1])
      parents.insert(std::vector<TupleId>(w.begin(), w.end() - 1));
    auto& level = tree_levels_[len];
    level.erase(std::remove_if(level.begin(), level.end(),
                               [&](const auto& w) { return !parents.count(w); }),
                level.end());
  }
  if (tree_levels_[1].empty()) throw EmptyOmega("tree prunes to the empty system");
  for (auto& level : tree_levels_) std::sort(level.begin(), level.end());

  if (om.tree_memory > 0) {
    // The declared repetition rule says follower behavior depends only on the
    // last `memory` tuples. Verify it against the listed words.
    for (int len = om.tree_memory; len < om.tree_depth; ++len) {
      std::map<std::vector<TupleId>, std::set<TupleId>> ext;
      for (const auto& w : tree_levels_[len]) {
        std::vector<TupleId> key(w.end() - om.tree_memory, w.end());
        std::set<TupleId> kids;
        for (const auto& w2 : tree_levels_[len + 1])
          if (std::equal(w.begin(), w.end(), w2.begin())) kids.insert(w2.back());
        auto it = ext.find(key);
        if (it == ext.end())
          ext.emplace(key, kids);
        else if (it->second != kids)
          throw ConfigError("tree: declared memory rule fails at depth " + std::to_string(len));
      }
    }
  }
}

TupleId OmegaModel::pack(const std::vector<Digit>& col) const {
  TupleId id = 0;
  for (int a = 0; a < d_; ++a) id = id * spec_.m[a] + col[a];
  return id;
}

std::vector<Digit> OmegaModel::unpack(TupleId t) const { return unpack_[t]; }

bool OmegaModel::tuple_alive(TupleId t) const {
  switch (spec_.omega.kind) {
    case OmegaSpec::Kind::Carpet:
      return std::binary_search(spec_.omega.carpet.begin(), spec_.omega.carpet.end(), t);
    case OmegaSpec::Kind::Sft:
      return alive_[t];
    default:
      return true;
  }
}

void OmegaModel::check_staircase(const StaircasePrefix& u) const {
  if (u.axes() != d_) throw ConfigError("prefix has wrong number of axes");
  for (int a = 0; a < d_; ++a) {
    if (a > 0 && u.len(a - 1) > u.len(a))
      throw ConfigError("prefix lengths must weakly increase toward the last axis");
    for (Digit v : u.digits[a])
      if (v < 0 || v >= spec_.m[a]) throw ConfigError("digit out of range");
  }
}

bool OmegaModel::column_feasible(int first_axis, const std::vector<Digit>& col) const {
  // col holds digits for axes [first_axis, d); true iff some allowed tuple
  // matches them.
  for (TupleId id : spec_.omega.carpet) {
    bool ok = true;
    for (int a = first_axis; a < d_; ++a)
      if (unpack_[id][a] != col[a - first_axis]) {
        ok = false;
        break;
      }
    if (ok) return true;
  }
  return false;
}

std::optional<std::vector<std::uint64_t>> OmegaModel::reach_final(
    const StaircasePrefix& u) const {
  const int L = u.max_len();
  std::vector<std::uint64_t> reach(mask_words_, 0);
  bool started = false;
  for (int pos = 1; pos <= L; ++pos) {
    int first_axis = 0;
    while (first_axis < d_ && u.len(first_axis) < pos) ++first_axis;
    std::vector<std::uint64_t> match(mask_words_, 0);
    for (TupleId t = 0; t < n_tuples_; ++t) {
      if (!alive_[t]) continue;
      bool ok = true;
      for (int a = first_axis; a < d_; ++a)
        if (unpack_[t][a] != u.digits[a][pos - 1]) {
          ok = false;
          break;
        }
      if (ok) match[t >> 6] |= 1ULL << (t & 63);
    }
    std::vector<std::uint64_t> next(mask_words_, 0);
    if (!started) {
      next = match;
      started = true;
    } else {
      for (int w = 0; w < mask_words_; ++w) {
        std::uint64_t bits = reach[w];
        while (bits) {
          int b = __builtin_ctzll(bits);
          bits &= bits - 1;
          TupleId t = (w << 6) | b;
          for (int w2 = 0; w2 < mask_words_; ++w2) next[w2] |= out_mask_[t][w2];
        }
      }
      for (int w = 0; w < mask_words_; ++w) next[w] &= match[w];
    }
    if (std::all_of(next.begin(), next.end(), [](std::uint64_t x) { return x == 0; }))
      return std::nullopt;
    reach = std::move(next);
  }
  return reach;
}

bool OmegaModel::is_admissible(const StaircasePrefix& u) const {
  check_staircase(u);
  switch (spec_.omega.kind) {
    case OmegaSpec::Kind::Full:
      return true;
    case OmegaSpec::Kind::Carpet: {
      const int L = u.max_len();
      for (int pos = 1; pos <= L; ++pos) {
        int first_axis = 0;
        while (first_axis < d_ && u.len(first_axis) < pos) ++first_axis;
        std::vector<Digit> col;
        for (int a = first_axis; a < d_; ++a) col.push_back(u.digits[a][pos - 1]);
        if (!column_feasible(first_axis, col)) return false;
      }
      return true;
    }
    case OmegaSpec::Kind::Sft:
      return reach_final(u).has_value();
    case OmegaSpec::Kind::Tree: {
      const int L = u.max_len();
      if (L > spec_.omega.tree_depth)
        throw DepthExceeded("tree query at depth " + std::to_string(L) +
                            " exceeds declared depth " +
                            std::to_string(spec_.omega.tree_depth));
      if (L == 0) return true;
      for (const auto& w : tree_levels_[L]) {
        bool ok = true;
        for (int a = 0; a < d_ && ok; ++a)
          for (int k = 0; k < u.len(a); ++k)
            if (unpack_[w[k]][a] != u.digits[a][k]) {
              ok = false;
              break;
            }
        if (ok) return true;
      }
      return false;
    }
  }
  return false;
}

std::vector<StaircasePrefix> OmegaModel::enumerate_prefixes(
    const std::vector<int>& lengths) const {
  if (static_cast<int>(lengths.size()) != d_) throw ConfigError("lengths: wrong arity");
  for (int a = 0; a < d_; ++a) {
    if (lengths[a] < 0) throw ConfigError("lengths must be nonnegative");
    if (a > 0 && lengths[a - 1] > lengths[a])
      throw ConfigError("lengths must weakly increase toward the last axis");
  }
  std::vector<StaircasePrefix> out;
  StaircasePrefix cur;
  cur.digits.assign(d_, {});
  const int L = lengths[d_ - 1];

  // Position-major DFS with admissibility pruning, then a lexicographic sort
  // on the flattened per-axis words.
  std::vector<int> first_axis_at(L + 1, 0);
  for (int pos = 1; pos <= L; ++pos) {
    int fa = 0;
    while (fa < d_ && lengths[fa] < pos) ++fa;
    first_axis_at[pos] = fa;
  }
  auto rec = [&](auto&& self, int pos) -> void {
    if (pos > L) {
      out.push_back(cur);
      return;
    }
    const int fa = first_axis_at[pos];
    std::vector<Digit> col(d_ - fa, 0);
    auto emit = [&](auto&& emit_self, int idx) -> void {
      if (idx == d_ - fa) {
        for (int a = fa; a < d_; ++a) cur.digits[a].push_back(col[a - fa]);
        if (is_admissible(cur)) self(self, pos + 1);
        for (int a = fa; a < d_; ++a) cur.digits[a].pop_back();
        return;
      }
      for (Digit v = 0; v < spec_.m[fa + idx]; ++v) {
        col[idx] = v;
        emit_self(emit_self, idx + 1);
      }
    };
    emit(emit, 0);
  };
  if (L == 0) {
    out.push_back(cur);
  } else {
    rec(rec, 1);
  }
  if (out.empty())
    throw EmptyOmega("no admissible prefix at the requested lengths");
  std::sort(out.begin(), out.end(), [](const StaircasePrefix& a, const StaircasePrefix& b) {
    return a.digits < b.digits;
  });
  return out;
}

std::vector<Digit> OmegaModel::extensions(const StaircasePrefix& u, int axis) const {
  check_staircase(u);
  if (axis < 0 || axis >= d_) throw ConfigError("axis out of range");
  if (axis + 1 < d_ && u.len(axis) + 1 > u.len(axis + 1))
    throw ConfigError("extension would break the staircase shape");
  std::vector<Digit> out;
  StaircasePrefix ext = u;
  ext.digits[axis].push_back(0);
  for (Digit v = 0; v < spec_.m[axis]; ++v) {
    ext.digits[axis].back() = v;
    if (is_admissible(ext)) out.push_back(v);
  }
  return out;
}

std::vector<std::vector<Digit>> OmegaModel::followers(const StaircasePrefix& u) const {
  check_staircase(u);
  std::vector<std::vector<Digit>> out;
  StaircasePrefix ext = u;
  for (int a = 0; a < d_; ++a) ext.digits[a].push_back(0);
  std::vector<Digit> bundle(d_, 0);
  auto rec = [&](auto&& self, int a) -> void {
    if (a == d_) {
      if (is_admissible(ext)) out.push_back(bundle);
      return;
    }
    for (Digit v = 0; v < spec_.m[a]; ++v) {
      bundle[a] = v;
      ext.digits[a].back() = v;
      self(self, a + 1);
    }
  };
  rec(rec, 0);
  return out;
}

FollowerKey OmegaModel::follower_key(const StaircasePrefix& u) const {
  check_staircase(u);
  const int l0 = u.len(0);
  std::string bytes;
  bytes.push_back(static_cast<char>(spec_.omega.kind));
  for (int a = 0; a < d_; ++a) append_u16(bytes, u.len(a) - l0);

  auto push_tails = [&]() {
    for (int a = 1; a < d_; ++a)
      for (int k = l0; k < u.len(a); ++k)
        bytes.push_back(static_cast<char>(u.digits[a][k]));
  };

  switch (spec_.omega.kind) {
    case OmegaSpec::Kind::Full:
      break;
    case OmegaSpec::Kind::Carpet:
      push_tails();
      break;
    case OmegaSpec::Kind::Sft: {
      append_u16(bytes, l0 >= 1 ? pack([&] {
        std::vector<Digit> col(d_);
        for (int a = 0; a < d_; ++a) col[a] = u.digits[a][l0 - 1];
        return col;
      }()) : -1 & 0xffff);
      push_tails();
      break;
    }
    case OmegaSpec::Kind::Tree: {
      const int mem = spec_.omega.tree_memory;
      const int from = mem > 0 ? std::max(0, l0 - mem) : 0;
      append_u16(bytes, mem > 0 ? 0 : u.max_len());
      for (int a = 0; a < d_; ++a)
        for (int k = from; k < u.len(a); ++k)
          bytes.push_back(static_cast<char>(u.digits[a][k]));
      break;
    }
  }
  return FollowerKey{std::move(bytes)};
}

StaircasePrefix OmegaModel::canonical_rep(const StaircasePrefix& u) const {
  const int l0 = u.len(0);
  StaircasePrefix rep;
  rep.digits.assign(d_, {});
  switch (spec_.omega.kind) {
    case OmegaSpec::Kind::Full:
      for (int a = 0; a < d_; ++a)
        rep.digits[a].assign(u.len(a) - l0, 0);
      return rep;
    case OmegaSpec::Kind::Carpet:
      for (int a = 0; a < d_; ++a)
        rep.digits[a].assign(u.digits[a].begin() + l0, u.digits[a].end());
      return rep;
    case OmegaSpec::Kind::Sft: {
      const int from = l0 >= 1 ? l0 - 1 : 0;
      for (int a = 0; a < d_; ++a)
        rep.digits[a].assign(u.digits[a].begin() + from, u.digits[a].end());
      return rep;
    }
    case OmegaSpec::Kind::Tree: {
      const int mem = spec_.omega.tree_memory;
      if (mem <= 0) return u;
      const int from = std::max(0, l0 - mem);
      for (int a = 0; a < d_; ++a)
        rep.digits[a].assign(u.digits[a].begin() + from, u.digits[a].end());
      return rep;
    }
  }
  return u;
}

}  // namespace multsub
