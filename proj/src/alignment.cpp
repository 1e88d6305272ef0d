#include "tmedit/alignment.hpp"

#include <algorithm>
#include <bit>
#include <limits>
#include <string>

#include "tmedit/errors.hpp"

namespace tmedit {

AlignmentGraph::AlignmentGraph(std::vector<std::size_t> match_lengths,
                               std::size_t ref_length, std::vector<Edge> edges)
    : match_lengths_(std::move(match_lengths)),
      ref_length_(ref_length),
      edges_(std::move(edges)) {
  std::sort(edges_.begin(), edges_.end());
}

CoverageStats AlignmentGraph::coverage() const {
  const auto mask = covered_mask();
  return {static_cast<std::size_t>(std::count(mask.begin(), mask.end(), true)),
          edges_.size()};
}

std::vector<bool> AlignmentGraph::covered_mask() const {
  std::vector<bool> mask(ref_length_, false);
  for (const Edge& e : edges_) {
    if (e.j < ref_length_) mask[e.j] = true;
  }
  return mask;
}

std::vector<OneWayAlignment::Pair> AlignmentGraph::edges_of(
    std::size_t n) const {
  std::vector<OneWayAlignment::Pair> out;
  for (const Edge& e : edges_) {
    if (e.n == n) out.push_back({e.i, e.j});
  }
  return out;
}

void AlignmentGraph::validate(std::span<const TokenSeq> matches,
                              const TokenSeq& ref) const {
  if (matches.size() != match_lengths_.size()) {
    throw InvariantError("alignment graph has " +
                         std::to_string(match_lengths_.size()) +
                         " sequences, expected " +
                         std::to_string(matches.size()));
  }
  if (ref.size() != ref_length_) {
    throw InvariantError("alignment graph reference length mismatch");
  }
  std::vector<const TokenSeq*> group;
  for (const auto& m : matches) group.push_back(&m);
  group.push_back(&ref);
  const auto keys = token_keys(std::span<const TokenSeq* const>(group));
  const auto& ref_keys = keys.back();
  const Edge* prev = nullptr;
  for (const Edge& e : edges_) {
    if (e.n >= matches.size() || matches[e.n].size() != match_lengths_[e.n] ||
        e.i >= match_lengths_[e.n] || e.j >= ref_length_) {
      throw InvariantError("alignment edge out of range");
    }
    if (keys[e.n][e.i] != ref_keys[e.j]) {
      throw InvariantError("alignment edge joins different tokens");
    }
    if (prev && prev->n == e.n && !(prev->i < e.i && prev->j < e.j)) {
      throw InvariantError("alignment edges of sequence " +
                           std::to_string(e.n) + " cross or share a token");
    }
    prev = &e;
  }
}

namespace {

constexpr std::int32_t kEmpty = -1;

struct Node {
  std::uint32_t i;
  std::uint32_t j;
  std::int32_t next;
  std::uint32_t score;
};

// Fixed-capacity sorted lists of matchings, one per column.
class ListRow {
 public:
  ListRow(std::size_t columns, std::size_t k)
      : k_(k), items_(columns * k), counts_(columns, 0) {}
  std::span<const std::int32_t> at(std::size_t col) const {
    return {items_.data() + col * k_, counts_[col]};
  }
  void set_single(std::size_t col, std::int32_t v) {
    items_[col * k_] = v;
    counts_[col] = 1;
  }
  void clear(std::size_t col) { counts_[col] = 0; }
  void push(std::size_t col, std::int32_t v) {
    items_[col * k_ + counts_[col]++] = v;
  }
  bool full(std::size_t col) const { return counts_[col] >= k_; }

 private:
  std::size_t k_;
  std::vector<std::int32_t> items_;
  std::vector<std::size_t> counts_;
};

}  // namespace

std::vector<OneWayAlignment> kbest_1way(std::span<const TokenKey> y,
                                        std::span<const TokenKey> ref,
                                        std::size_t k) {
  if (k == 0) throw UsageError("kbest_1way: k must be at least 1");
  const std::size_t n = y.size(), m = ref.size();
  std::vector<Node> pool;
  auto score = [&](std::int32_t id) -> std::uint32_t {
    return id == kEmpty ? 0 : pool[static_cast<std::size_t>(id)].score;
  };

  // S(i, j): best matchings using rows >= i and columns >= j.
  // R(i, j): those among them whose row-i edge exists (column >= j).
  // S(i, j) = R(i, j) + S(i+1, j); R(i, j) = ((i,j) + S(i+1, j+1)) + R(i, j+1).
  // Both unions are disjoint, and in each the left operand precedes the
  // right one lexicographically at equal score, so a score-only merge keeps
  // the (score desc, lex asc) order.
  ListRow below(m + 1, k), here(m + 1, k), r_row(m + 1, k);
  for (std::size_t j = 0; j <= m; ++j) below.set_single(j, kEmpty);
  for (std::size_t ii = n; ii-- > 0;) {
    here.set_single(m, kEmpty);
    r_row.clear(m);
    for (std::size_t j = m; j-- > 0;) {
      // R(ii, j)
      r_row.clear(j);
      const auto tail = r_row.at(j + 1);
      std::span<const std::int32_t> fresh;
      if (y[ii] == ref[j]) fresh = below.at(j + 1);
      std::size_t a = 0, b = 0;
      while (!r_row.full(j) && (a < fresh.size() || b < tail.size())) {
        const bool take_fresh =
            a < fresh.size() &&
            (b >= tail.size() || score(fresh[a]) + 1 >= score(tail[b]));
        if (take_fresh) {
          const std::int32_t next = fresh[a++];
          pool.push_back({static_cast<std::uint32_t>(ii),
                          static_cast<std::uint32_t>(j), next, score(next) + 1});
          r_row.push(j, static_cast<std::int32_t>(pool.size() - 1));
        } else {
          r_row.push(j, tail[b++]);
        }
      }
      // S(ii, j)
      here.clear(j);
      const auto with_row = r_row.at(j);
      const auto without_row = below.at(j);
      a = b = 0;
      while (!here.full(j) && (a < with_row.size() || b < without_row.size())) {
        const bool take_with =
            a < with_row.size() &&
            (b >= without_row.size() ||
             score(with_row[a]) >= score(without_row[b]));
        here.push(j, take_with ? with_row[a++] : without_row[b++]);
      }
    }
    std::swap(below, here);
  }

  std::vector<OneWayAlignment> out;
  for (std::int32_t head : below.at(0)) {
    OneWayAlignment al;
    al.source_length = n;
    al.ref_length = m;
    for (std::int32_t id = head; id != kEmpty;
         id = pool[static_cast<std::size_t>(id)].next) {
      const Node& node = pool[static_cast<std::size_t>(id)];
      al.pairs.push_back({node.i, node.j});
    }
    out.push_back(std::move(al));
  }
  return out;
}

std::vector<OneWayAlignment> kbest_1way(const TokenSeq& y, const TokenSeq& ref,
                                        std::size_t k) {
  const TokenSeq* group[] = {&y, &ref};
  const auto keys = token_keys(std::span<const TokenSeq* const>(group));
  return kbest_1way(keys[0], keys[1], k);
}

namespace {

using Bits = std::vector<std::uint64_t>;

std::size_t popcount(const Bits& b) {
  std::size_t n = 0;
  for (auto w : b) n += static_cast<std::size_t>(std::popcount(w));
  return n;
}

void or_into(Bits& dst, const Bits& src) {
  for (std::size_t w = 0; w < dst.size(); ++w) dst[w] |= src[w];
}

struct Score {
  std::size_t covered;
  std::size_t edges;
  auto operator<=>(const Score&) const = default;
};

class Recombiner {
 public:
  Recombiner(const std::vector<std::vector<OneWayAlignment>>& candidates,
             std::size_t ref_length)
      : candidates_(candidates), words_((ref_length + 63) / 64) {
    const std::size_t n = candidates.size();
    cover_.resize(n);
    max_edges_suffix_.assign(n + 1, 0);
    union_suffix_.assign(n + 1, Bits(words_, 0));
    for (std::size_t s = 0; s < n; ++s) {
      for (const auto& cand : candidates[s]) {
        Bits b(words_, 0);
        for (const auto& p : cand.pairs) b[p.j / 64] |= std::uint64_t{1} << (p.j % 64);
        cover_[s].push_back(std::move(b));
      }
    }
    for (std::size_t s = n; s-- > 0;) {
      union_suffix_[s] = union_suffix_[s + 1];
      std::size_t best = 0;
      for (std::size_t c = 0; c < candidates[s].size(); ++c) {
        or_into(union_suffix_[s], cover_[s][c]);
        best = std::max(best, candidates[s][c].score());
      }
      max_edges_suffix_[s] = max_edges_suffix_[s + 1] + best;
    }
  }

  std::vector<std::size_t> solve() {
    std::vector<std::size_t> current(candidates_.size(), 0);
    search(0, Bits(words_, 0), 0, current);
    return best_choice_;
  }

 private:
  void search(std::size_t s, const Bits& covered, std::size_t edges,
              std::vector<std::size_t>& current) {
    if (s == candidates_.size()) {
      const Score score{popcount(covered), edges};
      if (!have_best_ || score > best_) {
        best_ = score;
        best_choice_ = current;
        have_best_ = true;
      }
      return;
    }
    if (have_best_) {
      Bits optimistic = covered;
      or_into(optimistic, union_suffix_[s]);
      const Score bound{popcount(optimistic), edges + max_edges_suffix_[s]};
      // Later tuples are lexicographically larger, so a tie cannot win.
      if (bound <= best_) return;
    }
    for (std::size_t c = 0; c < candidates_[s].size(); ++c) {
      Bits next = covered;
      or_into(next, cover_[s][c]);
      current[s] = c;
      search(s + 1, next, edges + candidates_[s][c].score(), current);
    }
  }

  const std::vector<std::vector<OneWayAlignment>>& candidates_;
  std::size_t words_;
  std::vector<std::vector<Bits>> cover_;
  std::vector<Bits> union_suffix_;
  std::vector<std::size_t> max_edges_suffix_;
  Score best_{0, 0};
  bool have_best_ = false;
  std::vector<std::size_t> best_choice_;
};

}  // namespace

Recombination recombine(
    const std::vector<std::vector<OneWayAlignment>>& candidates,
    std::size_t ref_length) {
  std::vector<std::size_t> lengths;
  for (const auto& list : candidates) {
    if (list.empty()) throw UsageError("recombine: empty candidate list");
    lengths.push_back(list.front().source_length);
  }
  Recombination out;
  if (candidates.empty()) {
    out.graph = AlignmentGraph({}, ref_length, {});
    return out;
  }
  out.choice = Recombiner(candidates, ref_length).solve();
  std::vector<Edge> edges;
  for (std::size_t s = 0; s < candidates.size(); ++s) {
    for (const auto& p : candidates[s][out.choice[s]].pairs) {
      edges.push_back({s, p.i, p.j});
    }
  }
  out.graph = AlignmentGraph(std::move(lengths), ref_length, std::move(edges));
  return out;
}

AlignmentGraph nway_align(std::span<const TokenSeq> matches,
                          const TokenSeq& ref, std::size_t k) {
  if (matches.empty()) return AlignmentGraph({}, ref.size(), {});
  std::vector<const TokenSeq*> group;
  for (const auto& m : matches) group.push_back(&m);
  group.push_back(&ref);
  const auto keys = token_keys(std::span<const TokenSeq* const>(group));
  std::vector<std::vector<OneWayAlignment>> candidates;
  candidates.reserve(matches.size());
  for (std::size_t n = 0; n < matches.size(); ++n) {
    candidates.push_back(kbest_1way(keys[n], keys.back(), k));
  }
  auto graph = recombine(candidates, ref.size()).graph;
  graph.validate(matches, ref);
  return graph;
}

AlignmentGraph exact_nway_oracle(std::span<const TokenSeq> matches,
                                 const TokenSeq& ref, std::size_t budget) {
  const std::size_t n_seqs = matches.size();
  const std::size_t m = ref.size();
  std::vector<std::size_t> lengths;
  std::size_t product = 1;
  for (const auto& y : matches) {
    lengths.push_back(y.size());
    if (y.size() + 1 > budget / product) {
      throw BudgetError("exact oracle state space exceeds budget " +
                        std::to_string(budget));
    }
    product *= y.size() + 1;
  }
  if (n_seqs > 31) throw BudgetError("exact oracle supports at most 31 matches");
  if (m > 0 && product > budget / m) {
    throw BudgetError("exact oracle state space " + std::to_string(product) +
                      " x " + std::to_string(m) + " exceeds budget " +
                      std::to_string(budget));
  }
  if (n_seqs == 0) return AlignmentGraph({}, m, {});

  std::vector<const TokenSeq*> group;
  for (const auto& y : matches) group.push_back(&y);
  group.push_back(&ref);
  const auto keys = token_keys(std::span<const TokenSeq* const>(group));

  // Mixed-radix encoding of progress p_n in [0, |y_n|].
  std::vector<std::size_t> stride(n_seqs);
  for (std::size_t s = 0, acc = 1; s < n_seqs; ++s) {
    stride[s] = acc;
    acc *= lengths[s] + 1;
  }
  // Value = covered * (max_edges + 1) + edges: lexicographic as one integer.
  const std::int64_t edge_radix = static_cast<std::int64_t>(n_seqs * m + 1);
  std::vector<std::int64_t> value((m + 1) * product, 0);
  std::vector<std::size_t> progress(n_seqs);

  auto decode_state = [&](std::size_t code) {
    for (std::size_t s = 0; s < n_seqs; ++s) {
      progress[s] = (code / stride[s]) % (lengths[s] + 1);
    }
  };
  auto eligible_mask = [&](std::size_t j) {
    std::uint32_t mask = 0;
    for (std::size_t s = 0; s < n_seqs; ++s) {
      if (progress[s] < lengths[s] && keys[s][progress[s]] == keys.back()[j]) {
        mask |= 1u << s;
      }
    }
    return mask;
  };
  // Best successor value for (j, state) with the choice that reaches it,
  // scanning choices in a fixed order: aligned subsets by descending mask,
  // then skipping the reference token, then skipping a match token.
  struct Choice {
    int kind;  // 0 align subset, 1 skip reference, 2 skip match token
    std::uint32_t arg;
  };
  auto evaluate = [&](std::size_t j, std::size_t code, Choice* chosen) {
    decode_state(code);
    std::int64_t best = std::numeric_limits<std::int64_t>::min();
    auto consider = [&](std::int64_t v, Choice c) {
      if (v > best) {
        best = v;
        if (chosen) *chosen = c;
      }
    };
    if (j < m) {
      const std::uint32_t mask = eligible_mask(j);
      for (std::uint32_t sub = mask; sub != 0; sub = (sub - 1) & mask) {
        std::size_t next = code;
        for (std::size_t s = 0; s < n_seqs; ++s) {
          if (sub & (1u << s)) next += stride[s];
        }
        const auto gain = edge_radix + std::popcount(sub);
        consider(gain + value[(j + 1) * product + next], {0, sub});
      }
      consider(value[(j + 1) * product + code], {1, 0});
    }
    for (std::size_t s = 0; s < n_seqs; ++s) {
      if (progress[s] < lengths[s]) {
        consider(value[j * product + code + stride[s]],
                 {2, static_cast<std::uint32_t>(s)});
      }
    }
    return best == std::numeric_limits<std::int64_t>::min() ? 0 : best;
  };

  for (std::size_t j = m + 1; j-- > 0;) {
    for (std::size_t code = product; code-- > 0;) {
      value[j * product + code] = evaluate(j, code, nullptr);
    }
  }

  std::vector<Edge> edges;
  std::size_t j = 0, code = 0;
  while (true) {
    Choice c{-1, 0};
    evaluate(j, code, &c);
    if (c.kind < 0) break;
    if (c.kind == 0) {
      for (std::size_t s = 0; s < n_seqs; ++s) {
        if (c.arg & (1u << s)) {
          edges.push_back({s, progress[s], j});
          code += stride[s];
        }
      }
      ++j;
    } else if (c.kind == 1) {
      ++j;
    } else {
      code += stride[c.arg];
    }
  }
  AlignmentGraph graph(std::move(lengths), m, std::move(edges));
  graph.validate(matches, ref);
  return graph;
}

bool set_cover_decision(const CoverageInstance& instance, std::size_t budget) {
  const std::size_t universe = instance.universe_size;
  if (instance.p == 0) return true;
  if (instance.p > universe) return false;
  std::size_t combos = 1;
  for (const auto& c : instance.choices) {
    if (c.empty()) return false;
    if (combos > budget / c.size()) {
      throw BudgetError("set cover search exceeds budget " +
                        std::to_string(budget));
    }
    combos *= c.size();
  }
  const std::size_t words = (universe + 63) / 64;
  std::vector<Bits> sets;
  for (const auto& subset : instance.subsets) {
    Bits b(words, 0);
    for (std::size_t x : subset) {
      if (x >= universe) throw DataError("subset element outside the universe");
      b[x / 64] |= std::uint64_t{1} << (x % 64);
    }
    sets.push_back(std::move(b));
  }
  for (const auto& c : instance.choices) {
    for (std::size_t idx : c) {
      if (idx >= sets.size()) throw DataError("choice refers to a missing subset");
    }
  }
  // Odometer over all selections.
  std::vector<std::size_t> pick(instance.choices.size(), 0);
  while (true) {
    Bits u(words, 0);
    for (std::size_t k = 0; k < pick.size(); ++k) {
      or_into(u, sets[instance.choices[k][pick[k]]]);
    }
    if (popcount(u) >= instance.p) return true;
    std::size_t k = 0;
    while (k < pick.size() && ++pick[k] == instance.choices[k].size()) {
      pick[k++] = 0;
    }
    if (k == pick.size()) return false;
  }
}

CoverageInstance set_cover_to_coverage(
    std::size_t universe_size, std::vector<std::vector<std::size_t>> c0,
    std::size_t k) {
  CoverageInstance inst;
  inst.universe_size = universe_size;
  std::vector<std::size_t> all(c0.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  inst.subsets = std::move(c0);
  inst.choices.assign(k, all);
  inst.p = universe_size;
  return inst;
}

}  // namespace tmedit
