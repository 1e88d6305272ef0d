#pragma once

// Helpers and independent oracles shared by the unit and acceptance tests.
// The oracles are deliberately naive (full tables, exhaustive enumeration)
// so that they share no code with the library.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "tmedit/decode.hpp"
#include "tmedit/realign.hpp"
#include "tmedit/rng.hpp"
#include "tmedit/token_seq.hpp"
#include "tmedit/vocab.hpp"

namespace tmtest {

using tmedit::TokenId;
using tmedit::TokenSeq;

// "a b c" -> framed sequence, interning into vocab.
inline TokenSeq seq(tmedit::Vocab& vocab, const std::string& text) {
  std::istringstream in(text);
  TokenSeq out;
  std::string tok;
  while (in >> tok) {
    out.push_back(tok == "_" ? tmedit::Vocab::kPlh : vocab.intern(tok));
  }
  return out;
}

inline std::vector<int> ids(const TokenSeq& s) {
  return {s.content().begin(), s.content().end()};
}

// Content ids drawn from a vocab of `v` regular tokens.
inline TokenSeq random_seq(tmedit::Rng& rng, std::size_t max_len, std::size_t v,
                           std::size_t min_len = 0) {
  const auto len = static_cast<std::size_t>(rng.uniform_int(
      static_cast<std::int64_t>(min_len), static_cast<std::int64_t>(max_len)));
  TokenSeq out;
  for (std::size_t i = 0; i < len; ++i) {
    out.push_back(static_cast<TokenId>(
        tmedit::Vocab::kNumReserved +
        rng.uniform_int(0, static_cast<std::int64_t>(v) - 1)));
  }
  return out;
}

inline std::size_t lev_oracle(const std::vector<int>& a, const std::vector<int>& b) {
  std::vector<std::vector<std::size_t>> d(a.size() + 1,
                                          std::vector<std::size_t>(b.size() + 1));
  for (std::size_t i = 0; i <= a.size(); ++i) d[i][0] = i;
  for (std::size_t j = 0; j <= b.size(); ++j) d[0][j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1,
                          d[i - 1][j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    }
  }
  return d[a.size()][b.size()];
}

inline std::size_t lcs_oracle(const std::vector<int>& a, const std::vector<int>& b) {
  std::vector<std::vector<std::size_t>> d(a.size() + 1,
                                          std::vector<std::size_t>(b.size() + 1, 0));
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      d[i][j] = a[i - 1] == b[j - 1] ? d[i - 1][j - 1] + 1
                                     : std::max(d[i - 1][j], d[i][j - 1]);
    }
  }
  return d[a.size()][b.size()];
}

using PairList = std::vector<std::pair<std::size_t, std::size_t>>;

// Every monotone matching of equal tokens, including the empty one.
inline std::vector<PairList> all_matchings(const std::vector<int>& a,
                                           const std::vector<int>& b) {
  std::vector<PairList> out;
  PairList cur;
  std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t i0,
                                                          std::size_t j0) {
    out.push_back(cur);
    for (std::size_t i = i0; i < a.size(); ++i) {
      for (std::size_t j = j0; j < b.size(); ++j) {
        if (a[i] != b[j]) continue;
        cur.emplace_back(i, j);
        rec(i + 1, j + 1);
        cur.pop_back();
      }
    }
  };
  rec(0, 0);
  return out;
}

struct CoverageValue {
  std::size_t covered = 0;
  std::size_t edges = 0;
  auto operator<=>(const CoverageValue&) const = default;
};

// Best (covered, edges) over every combination of per-sequence matchings.
inline CoverageValue brute_coverage(const std::vector<std::vector<int>>& ys,
                                    const std::vector<int>& ref) {
  std::vector<std::vector<PairList>> options;
  for (const auto& y : ys) options.push_back(all_matchings(y, ref));
  CoverageValue best;
  std::vector<std::size_t> pick(ys.size(), 0);
  while (true) {
    std::vector<bool> cov(ref.size(), false);
    CoverageValue v;
    for (std::size_t n = 0; n < ys.size(); ++n) {
      for (const auto& [i, j] : options[n][pick[n]]) {
        cov[j] = true;
        ++v.edges;
      }
    }
    v.covered = static_cast<std::size_t>(std::count(cov.begin(), cov.end(), true));
    best = std::max(best, v);
    std::size_t n = 0;
    while (n < ys.size() && ++pick[n] == options[n].size()) pick[n++] = 0;
    if (n == ys.size()) break;
  }
  return best;
}

// Framed keys: BOS, content ids, EOS.
inline std::vector<std::vector<int>> framed_ids(const std::vector<TokenSeq>& seqs) {
  std::vector<std::vector<int>> out;
  for (const auto& s : seqs) {
    std::vector<int> k{tmedit::Vocab::kBos};
    for (TokenId t : s.content()) k.push_back(t);
    k.push_back(tmedit::Vocab::kEos);
    out.push_back(k);
  }
  return out;
}

// Alignment loss straight from its definition: every framed token adds the
// distance to its closest equal token of another sequence within d_max.
inline double alignment_loss_oracle(const std::vector<std::vector<int>>& keys,
                                    const std::vector<std::vector<double>>& plan,
                                    double d_max) {
  std::vector<std::vector<double>> x(keys.size());
  for (std::size_t n = 0; n < keys.size(); ++n) {
    for (std::size_t i = 0; i < keys[n].size(); ++i) {
      double acc = static_cast<double>(i);
      for (std::size_t g = 0; g < i; ++g) acc += plan[n][g];
      x[n].push_back(acc);
    }
  }
  double total = 0.0;
  for (std::size_t n = 0; n < keys.size(); ++n) {
    for (std::size_t i = 0; i < keys[n].size(); ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t m = 0; m < keys.size(); ++m) {
        if (m == n) continue;
        for (std::size_t j = 0; j < keys[m].size(); ++j) {
          const double d = std::abs(x[n][i] - x[m][j]);
          if (keys[n][i] == keys[m][j] && d < d_max) best = std::min(best, d);
        }
      }
      if (std::isfinite(best)) total += best;
    }
  }
  return total;
}

// Keeps everything; count 0 beats count 1 by `margin` nats; fills `fill`.
class MarginPolicy : public tmedit::Policy {
 public:
  MarginPolicy(double margin, TokenId fill) : margin_(margin), fill_(fill) {}

  std::vector<std::vector<double>> del(
      const TokenSeq&, std::span<const TokenSeq> seqs) const override {
    std::vector<std::vector<double>> out;
    for (const auto& s : seqs) out.emplace_back(s.size(), 1.0);
    return out;
  }
  tmedit::PlhLogits plh(const TokenSeq&, std::span<const TokenSeq> seqs,
                        std::size_t k_max) const override {
    std::size_t gaps = 0;
    for (const auto& s : seqs) gaps = std::max(gaps, s.size() + 1);
    tmedit::PlhLogits out(seqs.size(), gaps, k_max);
    for (std::size_t n = 0; n < seqs.size(); ++n) {
      for (std::size_t g = 0; g <= seqs[n].size(); ++g) {
        out.valid[n * gaps + g] = 1;
        auto r = out.row(n, g);
        std::fill(r.begin(), r.end(), -margin_ - 10.0);
        r[0] = 0.0;
        r[1] = -margin_;
        tmedit::PlhLogits::normalize_row(r);
      }
    }
    return out;
  }
  std::vector<std::vector<double>> cmb(
      const TokenSeq&, std::span<const TokenSeq> seqs) const override {
    std::vector<std::vector<double>> out;
    for (const auto& s : seqs) out.emplace_back(s.size(), 1.0);
    return out;
  }
  std::vector<tmedit::TokenDist> tok(const TokenSeq&,
                                     const TokenSeq& seq) const override {
    return std::vector<tmedit::TokenDist>(
        seq.count(tmedit::Vocab::kPlh),
        tmedit::TokenDist{tmedit::TokenChoice{fill_, 1.0, ""}});
  }

 private:
  double margin_;
  TokenId fill_;
};

// Three short sequences whose argmax insertion plan misaligns them:
//   y0 = A B C   argmax gaps 0 0 0 2
//   y1 = B C     argmax gaps 0 0 1
//   y2 = A D C D argmax gaps 0 1 0 0 0
// Three gaps are uncertain (probability `pa` on the argmax, `pb` on the
// count that aligns everything); the rest are discretized Gaussians of width
// `s` around the argmax. The aligned plan is
//   0 0 0 1 | 1 0 1 | 0 0 0 0 0.
struct MisalignedExample {
  std::vector<TokenSeq> seqs;
  tmedit::PlhLogits logits;
  std::vector<std::vector<std::size_t>> aligned;
};

inline MisalignedExample misaligned_example(double pa = 0.6, double pb = 0.3,
                                        double s = 0.5, std::size_t k_max = 8) {
  const TokenId a = tmedit::Vocab::kNumReserved;
  const TokenId b = a + 1, c = a + 2, d = a + 3;
  const std::vector<std::vector<TokenId>> content = {{a, b, c}, {b, c}, {a, d, c, d}};
  const std::vector<std::vector<std::size_t>> am = {{0, 0, 0, 2}, {0, 0, 1}, {0, 1, 0, 0, 0}};
  const int alt[3][5] = {{-1, -1, -1, 1, -1}, {1, -1, -1, -1, -1}, {-1, 0, -1, -1, -1}};
  MisalignedExample ex;
  for (const auto& v : content) ex.seqs.push_back(TokenSeq::from_content(v));
  ex.logits = tmedit::PlhLogits(3, 5, k_max);
  for (std::size_t n = 0; n < 3; ++n) {
    for (std::size_t g = 0; g < am[n].size(); ++g) {
      ex.logits.valid[n * 5 + g] = 1;
      auto r = ex.logits.row(n, g);
      if (alt[n][g] >= 0) {
        const double rest = (1.0 - pa - pb) / static_cast<double>(k_max - 1);
        for (double& v : r) v = std::log(rest);
        r[am[n][g]] = std::log(pa);
        r[static_cast<std::size_t>(alt[n][g])] = std::log(pb);
      } else {
        for (std::size_t k = 0; k <= k_max; ++k) {
          const double z = static_cast<double>(k) - static_cast<double>(am[n][g]);
          r[k] = -z * z / (2.0 * s * s);
        }
      }
      tmedit::PlhLogits::normalize_row(r);
    }
  }
  ex.aligned = {{0, 0, 0, 1}, {1, 0, 1}, {0, 0, 0, 0, 0}};
  return ex;
}

}  // namespace tmtest
