#include "tmedit/token_seq.hpp"

#include <unordered_map>

#include "tmedit/errors.hpp"

namespace tmedit {

TokenSeq TokenSeq::from_content(std::span<const TokenId> content) {
  TokenSeq seq;
  seq.content_.assign(content.begin(), content.end());
  return seq;
}

TokenSeq TokenSeq::from_framed(std::span<const TokenId> framed) {
  if (framed.size() < 2 || framed.front() != Vocab::kBos ||
      framed.back() != Vocab::kEos) {
    throw DataError("sequence is not framed by <BOS> ... <EOS>");
  }
  const auto content = framed.subspan(1, framed.size() - 2);
  for (TokenId id : content) {
    if (id == Vocab::kBos || id == Vocab::kEos || id == Vocab::kPad) {
      throw DataError("sentinel or padding inside a framed sequence");
    }
  }
  return from_content(content);
}

void TokenSeq::push_back(TokenId id, std::string_view surface) {
  const bool keep = id == Vocab::kUnk && !surface.empty();
  if (keep && surfaces_.empty()) surfaces_.resize(content_.size());
  content_.push_back(id);
  if (!surfaces_.empty() || keep) {
    surfaces_.emplace_back(keep ? surface : std::string_view{});
  }
}

std::vector<TokenId> TokenSeq::framed() const {
  std::vector<TokenId> out;
  out.reserve(framed_size());
  out.push_back(Vocab::kBos);
  out.insert(out.end(), content_.begin(), content_.end());
  out.push_back(Vocab::kEos);
  return out;
}

TokenId TokenSeq::framed_at(std::size_t i) const {
  if (i == 0) return Vocab::kBos;
  if (i == content_.size() + 1) return Vocab::kEos;
  return content_.at(i - 1);
}

std::string_view TokenSeq::surface(std::size_t i) const {
  if (surfaces_.empty()) return {};
  return surfaces_[i];
}

bool same_token(const TokenSeq& a, std::size_t i, const TokenSeq& b,
                std::size_t j) {
  if (a[i] != b[j]) return false;
  if (a[i] != Vocab::kUnk) return true;
  const auto s = a.surface(i);
  return !s.empty() && s == b.surface(j);
}

std::size_t TokenSeq::count(TokenId id) const {
  std::size_t n = 0;
  for (TokenId t : content_) n += (t == id);
  return n;
}

bool operator==(const TokenSeq& a, const TokenSeq& b) {
  if (a.content_ != b.content_) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a.content_[i] == Vocab::kUnk && a.surface(i) != b.surface(i)) {
      return false;
    }
  }
  return true;
}

namespace {

constexpr TokenKey kSurfaceKeyBase = TokenKey{1} << 32;

}  // namespace

std::vector<std::vector<TokenKey>> token_keys(
    std::span<const TokenSeq* const> seqs) {
  std::unordered_map<std::string_view, TokenKey> interned;
  TokenKey next_anon = -1;
  std::vector<std::vector<TokenKey>> keys;
  keys.reserve(seqs.size());
  for (const TokenSeq* seq : seqs) {
    auto& row = keys.emplace_back();
    row.reserve(seq->size());
    for (std::size_t i = 0; i < seq->size(); ++i) {
      const TokenId id = (*seq)[i];
      if (id != Vocab::kUnk) {
        row.push_back(id);
        continue;
      }
      const std::string_view s = seq->surface(i);
      if (s.empty()) {
        row.push_back(next_anon--);
      } else {
        auto [it, inserted] = interned.try_emplace(
            s, kSurfaceKeyBase + static_cast<TokenKey>(interned.size()));
        row.push_back(it->second);
      }
    }
  }
  return keys;
}

std::vector<std::vector<TokenKey>> token_keys(std::span<const TokenSeq> seqs) {
  std::vector<const TokenSeq*> ptrs;
  ptrs.reserve(seqs.size());
  for (const auto& s : seqs) ptrs.push_back(&s);
  return token_keys(std::span<const TokenSeq* const>(ptrs));
}

std::vector<std::string> token_strings(const TokenSeq& seq,
                                       const Vocab& vocab) {
  std::vector<std::string> out;
  out.reserve(seq.size());
  for (std::size_t i = 0; i < seq.size(); ++i) {
    const std::string_view s = seq.surface(i);
    out.emplace_back(s.empty() ? std::string_view(vocab.token(seq[i])) : s);
  }
  return out;
}

std::string detokenize(const TokenSeq& seq, const Vocab& vocab,
                       std::string_view plh_marker) {
  std::string out;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    if (i) out += ' ';
    const TokenId id = seq[i];
    if (id == Vocab::kPlh) {
      out += plh_marker;
    } else if (const auto s = seq.surface(i); !s.empty()) {
      out += s;
    } else {
      out += vocab.token(id);
    }
  }
  return out;
}

void check_framing(const TokenSeq& seq, std::size_t max_length,
                   bool allow_plh) {
  if (seq.framed_size() > max_length) {
    throw InvariantError("sequence of " + std::to_string(seq.framed_size()) +
                         " tokens exceeds L_max=" + std::to_string(max_length));
  }
  for (TokenId id : seq.content()) {
    if (id == Vocab::kBos || id == Vocab::kEos || id == Vocab::kPad ||
        (!allow_plh && id == Vocab::kPlh) || id < 0) {
      throw InvariantError("sentinel or padding inside sequence content");
    }
  }
}

}  // namespace tmedit
