#include "tmedit/metrics.hpp"

#include <algorithm>
#include <unordered_map>

#include "tmedit/errors.hpp"

namespace tmedit {

namespace {

struct KeyVecHash {
  std::size_t operator()(const std::vector<TokenKey>& v) const {
    std::size_t h = 0x9e3779b97f4a7c15ULL;
    for (TokenKey k : v) {
      h ^= std::hash<TokenKey>{}(k) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    }
    return h;
  }
};
using NgramCounts =
    std::unordered_map<std::vector<TokenKey>, std::size_t, KeyVecHash>;

std::string pattern_name(std::size_t bits, std::size_t order) {
  std::string out;
  for (std::size_t t = 0; t < order; ++t) {
    if (t) out += '-';
    out += (bits >> (order - 1 - t)) & 1U ? "copy" : "gen";
  }
  return out;
}

}  // namespace

OriginStats origin_ngram_stats(std::span<const TokenSeq> outputs,
                               std::span<const Provenance> provenance,
                               std::span<const TokenSeq> refs,
                               std::size_t max_order) {
  if (outputs.size() != refs.size() || outputs.size() != provenance.size()) {
    throw DataError("stats: " + std::to_string(outputs.size()) + " outputs, " +
                    std::to_string(provenance.size()) + " provenance records, " +
                    std::to_string(refs.size()) + " references");
  }
  if (max_order == 0 || max_order > 8) throw UsageError("stats: max_order in [1, 8]");

  OriginStats stats;
  for (std::size_t order = 1; order <= max_order; ++order) {
    OrderStats os;
    os.order = order;
    for (std::size_t bits = 0; bits < (1U << order); ++bits) {
      os.classes[pattern_name(bits, order)];
    }
    stats.orders.push_back(std::move(os));
  }

  for (std::size_t s = 0; s < outputs.size(); ++s) {
    const TokenSeq& out = outputs[s];
    if (provenance[s].size() != out.size()) {
      throw DataError("stats: provenance length differs from output length",
                      s + 1);
    }
    const std::vector<TokenSeq> pair = {out, refs[s]};
    const auto keys = token_keys(std::span<const TokenSeq>(pair));
    for (auto& os : stats.orders) {
      const std::size_t n = os.order;
      NgramCounts ref_counts;
      for (std::size_t j = 0; j + n <= keys[1].size(); ++j) {
        ++ref_counts[{keys[1].begin() + j, keys[1].begin() + j + n}];
      }
      std::vector<NgramCounts> by_class(std::size_t{1} << n);
      for (std::size_t i = 0; i + n <= keys[0].size(); ++i) {
        std::size_t bits = 0;
        for (std::size_t t = 0; t < n; ++t) {
          bits = (bits << 1) | (provenance[s][i + t].is_copy() ? 1U : 0U);
        }
        ++by_class[bits][{keys[0].begin() + i, keys[0].begin() + i + n}];
      }
      for (std::size_t bits = 0; bits < by_class.size(); ++bits) {
        ClassStats& cs = os.classes[pattern_name(bits, n)];
        for (const auto& [gram, c] : by_class[bits]) {
          cs.total += c;
          const auto it = ref_counts.find(gram);
          if (it != ref_counts.end()) cs.matched += std::min(c, it->second);
        }
      }
    }
  }

  for (auto& os : stats.orders) {
    for (const auto& [name, cs] : os.classes) os.total += cs.total;
    for (auto& [name, cs] : os.classes) {
      if (cs.total > 0) {
        cs.precision = static_cast<double>(cs.matched) / static_cast<double>(cs.total);
      }
      if (os.total > 0) {
        cs.share = static_cast<double>(cs.total) / static_cast<double>(os.total);
      }
    }
  }
  return stats;
}

CoverNoise cover_noise(const TokenSeq& ref, std::span<const TokenSeq> matches) {
  std::vector<TokenSeq> all{ref};
  all.insert(all.end(), matches.begin(), matches.end());
  const auto keys = token_keys(std::span<const TokenSeq>(all));

  std::unordered_map<TokenKey, std::size_t> ref_counts;
  for (TokenKey k : keys[0]) ++ref_counts[k];
  std::unordered_map<TokenKey, std::size_t> union_counts;
  std::size_t match_tokens = 0;
  std::size_t noisy = 0;
  for (std::size_t n = 1; n < keys.size(); ++n) {
    std::unordered_map<TokenKey, std::size_t> counts;
    for (TokenKey k : keys[n]) {
      ++counts[k];
      ++match_tokens;
      if (!ref_counts.contains(k)) ++noisy;
    }
    for (const auto& [k, c] : counts) {
      union_counts[k] = std::max(union_counts[k], c);
    }
  }

  CoverNoise out;
  if (ref.empty()) {
    out.cover = 1.0;
  } else {
    std::size_t covered = 0;
    for (const auto& [k, c] : ref_counts) {
      const auto it = union_counts.find(k);
      if (it != union_counts.end()) covered += std::min(c, it->second);
    }
    out.cover = static_cast<double>(covered) / static_cast<double>(ref.size());
  }
  if (match_tokens > 0) {
    out.noise = static_cast<double>(noisy) / static_cast<double>(match_tokens);
  }
  return out;
}

json to_json(const OriginStats& stats) {
  json orders = json::array();
  for (const auto& os : stats.orders) {
    json classes = json::object();
    for (const auto& [name, cs] : os.classes) {
      classes[name] = {{"matched", cs.matched},
                       {"total", cs.total},
                       {"precision", cs.precision ? json(*cs.precision) : json(nullptr)},
                       {"share", cs.share}};
    }
    orders.push_back({{"order", os.order}, {"total", os.total}, {"classes", classes}});
  }
  return {{"orders", orders}};
}

}  // namespace tmedit
