#include "tmedit/retrieval.hpp"

#include <algorithm>
#include <limits>

#include "tmedit/errors.hpp"
#include "tmedit/parallel.hpp"

namespace tmedit {

std::size_t edit_distance(std::span<const TokenKey> a,
                          std::span<const TokenKey> b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] != b[j - 1]);
      cur[j] = std::min({sub, prev[j] + 1, cur[j - 1] + 1});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

std::size_t edit_distance(const TokenSeq& a, const TokenSeq& b) {
  const TokenSeq* seqs[] = {&a, &b};
  const auto keys = token_keys(std::span<const TokenSeq* const>(seqs));
  return edit_distance(keys[0], keys[1]);
}

std::optional<std::size_t> bounded_edit_distance(std::span<const TokenKey> a,
                                                 std::span<const TokenKey> b,
                                                 std::size_t max_distance) {
  const std::size_t la = a.size(), lb = b.size();
  if ((la > lb ? la - lb : lb - la) > max_distance) return std::nullopt;
  constexpr std::size_t kInf = std::numeric_limits<std::size_t>::max() / 2;
  std::vector<std::size_t> prev(lb + 1, kInf), cur(lb + 1, kInf);
  for (std::size_t j = 0; j <= std::min(lb, max_distance); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= la; ++i) {
    const std::size_t lo = i > max_distance ? i - max_distance : 0;
    const std::size_t hi = std::min(lb, i + max_distance);
    std::fill(cur.begin(), cur.end(), kInf);
    std::size_t row_min = kInf;
    if (lo == 0) {
      cur[0] = i;
      row_min = i;
    }
    for (std::size_t j = std::max<std::size_t>(lo, 1); j <= hi; ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] != b[j - 1]);
      cur[j] = std::min({sub, prev[j] + 1, cur[j - 1] + 1});
      row_min = std::min(row_min, cur[j]);
    }
    if (row_min > max_distance) return std::nullopt;
    std::swap(prev, cur);
  }
  if (prev[lb] > max_distance) return std::nullopt;
  return prev[lb];
}

double similarity_from_distance(std::size_t distance, std::size_t len_a,
                                std::size_t len_b) {
  const std::size_t longest = std::max(len_a, len_b);
  if (longest == 0) return 1.0;
  return 1.0 - static_cast<double>(distance) / static_cast<double>(longest);
}

double similarity(const TokenSeq& a, const TokenSeq& b) {
  return similarity_from_distance(edit_distance(a, b), a.size(), b.size());
}

namespace {

std::vector<TokenKey> utf8_code_points(const std::string& s) {
  std::vector<TokenKey> out;
  for (std::size_t i = 0; i < s.size();) {
    const auto c = static_cast<unsigned char>(s[i]);
    std::size_t len = c < 0x80 ? 1 : (c >> 5) == 0x6 ? 2 : (c >> 4) == 0xe ? 3
                                                                          : 4;
    if (i + len > s.size()) len = 1;
    TokenKey cp = len == 1 ? c : c & (0x7f >> len);
    for (std::size_t k = 1; k < len; ++k) {
      cp = (cp << 6) | (static_cast<unsigned char>(s[i + k]) & 0x3f);
    }
    out.push_back(cp);
    i += len;
  }
  return out;
}

// Largest distance whose similarity still reaches `cutoff`, computed with the
// exact same floating-point expression used for scoring.
std::optional<std::size_t> max_distance_for(double cutoff, std::size_t la,
                                            std::size_t lb) {
  const std::size_t longest = std::max(la, lb);
  if (similarity_from_distance(std::max(la, lb) - std::min(la, lb), la, lb) <
      cutoff) {
    return std::nullopt;
  }
  std::size_t e = longest;
  if (longest > 0) {
    const double guess = (1.0 - cutoff) * static_cast<double>(longest);
    e = std::min(longest,
                 static_cast<std::size_t>(std::max(0.0, guess)) + 1);
  }
  while (e > 0 && similarity_from_distance(e, la, lb) < cutoff) --e;
  while (e < longest && similarity_from_distance(e + 1, la, lb) >= cutoff) ++e;
  return e;
}

bool better(double score, std::int64_t id, const Match& m) {
  return score > m.score || (score == m.score && id < m.id);
}

// Keeps the best `capacity` matches sorted (score desc, id asc).
class TopN {
 public:
  explicit TopN(std::size_t capacity) : capacity_(capacity) {}
  bool full() const { return items_.size() >= capacity_; }
  const Match& worst() const { return items_.back(); }
  void offer(const Match& m) {
    if (full() && !better(m.score, m.id, worst())) return;
    auto pos = std::find_if(items_.begin(), items_.end(), [&](const Match& o) {
      return better(m.score, m.id, o);
    });
    items_.insert(pos, m);
    if (items_.size() > capacity_) items_.pop_back();
  }
  std::vector<Match> take() { return std::move(items_); }

 private:
  std::size_t capacity_;
  std::vector<Match> items_;
};

void check_options(const RetrieveOptions& opts) {
  if (!(opts.tau >= 0.0 && opts.tau <= 1.0)) {
    throw UsageError("tau must lie in [0, 1]");
  }
  if (opts.n_max < 1) throw UsageError("n_max must be at least 1");
}

}  // namespace

TMIndex TMIndex::build(std::vector<TMEntry> tm, Granularity granularity,
                       const Vocab* vocab) {
  if (granularity == Granularity::kCharacter && vocab == nullptr) {
    throw UsageError("character granularity needs a vocabulary");
  }
  TMIndex index;
  index.granularity_ = granularity;
  index.vocab_ = vocab;
  index.entries_ = std::move(tm);
  index.units_.reserve(index.entries_.size());
  for (std::size_t e = 0; e < index.entries_.size(); ++e) {
    const TokenSeq& src = index.entries_[e].src;
    std::vector<TokenKey> u;
    if (granularity == Granularity::kCharacter) {
      u = utf8_code_points(detokenize(src, *vocab));
    } else {
      u.reserve(src.size());
      for (std::size_t i = 0; i < src.size(); ++i) {
        if (src[i] == Vocab::kUnk && !src.surface(i).empty()) {
          auto [it, _] = index.surface_keys_.try_emplace(
              std::string(src.surface(i)),
              (TokenKey{1} << 32) +
                  static_cast<TokenKey>(index.surface_keys_.size()));
          u.push_back(it->second);
        } else if (src[i] == Vocab::kUnk) {
          u.push_back(-1 - static_cast<TokenKey>(i));  // matches nothing
        } else {
          u.push_back(src[i]);
        }
      }
    }
    Bucket& bucket = index.buckets_[u.size()];
    const auto local = static_cast<std::uint32_t>(bucket.members.size());
    bucket.members.push_back(static_cast<std::uint32_t>(e));
    std::unordered_map<TokenKey, std::uint32_t> counts;
    for (TokenKey k : u) ++counts[k];
    for (auto [k, c] : counts) bucket.postings[k].push_back({local, c});
    index.units_.push_back(std::move(u));
  }
  return index;
}

std::vector<TokenKey> TMIndex::units(const TokenSeq& seq) const {
  if (granularity_ == Granularity::kCharacter) {
    return utf8_code_points(detokenize(seq, *vocab_));
  }
  std::vector<TokenKey> u;
  u.reserve(seq.size());
  for (std::size_t i = 0; i < seq.size(); ++i) {
    if (seq[i] != Vocab::kUnk) {
      u.push_back(seq[i]);
      continue;
    }
    auto it = surface_keys_.find(std::string(seq.surface(i)));
    // Query-side unknowns use keys disjoint from the entry-side ones.
    u.push_back(!seq.surface(i).empty() && it != surface_keys_.end()
                    ? it->second
                    : std::numeric_limits<TokenKey>::min() +
                          static_cast<TokenKey>(i));
  }
  return u;
}

bool TMIndex::is_self(std::size_t entry, std::span<const TokenKey> q,
                      const RetrieveOptions& opts) const {
  if (!opts.exclude_self || !opts.query_id) return false;
  if (entries_[entry].id != *opts.query_id) return false;
  const auto& u = units_[entry];
  return std::equal(u.begin(), u.end(), q.begin(), q.end());
}

std::size_t TMIndex::buckets_containing(std::size_t i) const {
  std::size_t n = 0;
  for (const auto& [len, bucket] : buckets_) {
    n += std::count(bucket.members.begin(), bucket.members.end(),
                    static_cast<std::uint32_t>(i));
  }
  return n;
}

MatchSet TMIndex::retrieve_brute_force(const TokenSeq& x,
                                       const RetrieveOptions& opts) const {
  check_options(opts);
  const auto q = units(x);
  TopN top(opts.n_max);
  for (std::size_t e = 0; e < entries_.size(); ++e) {
    if (is_self(e, q, opts)) continue;
    const auto& u = units_[e];
    const double score =
        similarity_from_distance(edit_distance(q, u), q.size(), u.size());
    if (score >= opts.tau) top.offer({entries_[e].id, e, score});
  }
  return {x, top.take(), opts.n_max};
}

MatchSet TMIndex::retrieve(const TokenSeq& x,
                           const RetrieveOptions& opts) const {
  check_options(opts);
  const auto q = units(x);
  const std::size_t lq = q.size();
  std::unordered_map<TokenKey, std::uint32_t> q_counts;
  for (TokenKey k : q) ++q_counts[k];

  struct Candidate {
    double bound;
    std::int64_t id;
    std::uint32_t entry;
  };
  std::vector<Candidate> candidates;
  std::vector<std::uint32_t> overlap;
  for (const auto& [len, bucket] : buckets_) {
    // Length band: ED >= |len - lq|.
    if (!max_distance_for(opts.tau, len, lq)) continue;
    overlap.assign(bucket.members.size(), 0);
    for (auto [k, qc] : q_counts) {
      auto it = bucket.postings.find(k);
      if (it == bucket.postings.end()) continue;
      for (const Posting& p : it->second) overlap[p.local] += std::min(qc, p.count);
    }
    const std::size_t longest = std::max<std::size_t>(len, lq);
    for (std::size_t l = 0; l < bucket.members.size(); ++l) {
      // Bag-of-tokens bound: ED >= max(|a|, |b|) - |multiset intersection|.
      const double bound =
          similarity_from_distance(longest - overlap[l], len, lq);
      if (bound < opts.tau) continue;
      const std::uint32_t e = bucket.members[l];
      candidates.push_back({bound, entries_[e].id, e});
    }
  }
  std::sort(candidates.begin(), candidates.end(),
            [](const Candidate& a, const Candidate& b) {
              if (a.bound != b.bound) return a.bound > b.bound;
              if (a.id != b.id) return a.id < b.id;
              return a.entry < b.entry;
            });

  TopN top(opts.n_max);
  for (const Candidate& c : candidates) {
    if (top.full() && !better(c.bound, c.id, top.worst())) break;
    if (is_self(c.entry, q, opts)) continue;
    const auto& u = units_[c.entry];
    const double cutoff = top.full() ? std::max(opts.tau, top.worst().score)
                                     : opts.tau;
    const auto limit = max_distance_for(cutoff, u.size(), lq);
    if (!limit) continue;
    const auto d = bounded_edit_distance(q, u, *limit);
    if (!d) continue;
    const double score = similarity_from_distance(*d, lq, u.size());
    if (score >= opts.tau) top.offer({c.id, c.entry, score});
  }
  return {x, top.take(), opts.n_max};
}

std::vector<MatchSet> TMIndex::retrieve_batch(std::span<const Query> queries,
                                              const RetrieveOptions& opts) const {
  check_options(opts);
  std::vector<MatchSet> out(queries.size());
  const auto n = static_cast<std::int64_t>(queries.size());
  FirstException error;
#pragma omp parallel for schedule(dynamic, 4)
  for (std::int64_t i = 0; i < n; ++i) {
    error.run([&] {
      RetrieveOptions o = opts;
      o.query_id = queries[i].id;
      out[i] = retrieve(queries[i].tokens, o);
    });
  }
  error.rethrow();
  return out;
}

std::vector<MatchSet> TMIndex::retrieve_batch_serial(
    std::span<const Query> queries, const RetrieveOptions& opts) const {
  std::vector<MatchSet> out;
  out.reserve(queries.size());
  for (const Query& query : queries) {
    RetrieveOptions o = opts;
    o.query_id = query.id;
    out.push_back(retrieve(query.tokens, o));
  }
  return out;
}

}  // namespace tmedit
