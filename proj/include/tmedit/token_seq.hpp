#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tmedit/vocab.hpp"

namespace tmedit {

inline constexpr std::size_t kDefaultMaxLength = 1024;

// A token sequence framed by <BOS> ... <EOS>. Positions used by the public
// accessors are content positions (sentinels excluded) unless the name says
// "framed".
//
// Tokens mapped to <UNK> may carry their surface string so that two unknown
// tokens compare equal only when their surfaces agree.
class TokenSeq {
 public:
  TokenSeq() = default;

  static TokenSeq from_content(std::span<const TokenId> content);
  // Parses a framed id list; throws DataError if framing is broken.
  static TokenSeq from_framed(std::span<const TokenId> framed);

  void push_back(TokenId id, std::string_view surface = {});

  std::span<const TokenId> content() const { return content_; }
  std::vector<TokenId> framed() const;

  std::size_t size() const { return content_.size(); }
  std::size_t framed_size() const { return content_.size() + 2; }
  bool empty() const { return content_.empty(); }

  TokenId operator[](std::size_t i) const { return content_[i]; }
  // Framed access: 0 is <BOS>, framed_size()-1 is <EOS>.
  TokenId framed_at(std::size_t i) const;

  // Empty unless the token is <UNK> with a known surface form.
  std::string_view surface(std::size_t i) const;
  bool has_surfaces() const { return !surfaces_.empty(); }

  std::size_t count(TokenId id) const;

  friend bool operator==(const TokenSeq& a, const TokenSeq& b);

 private:
  std::vector<TokenId> content_;
  std::vector<std::string> surfaces_;  // empty, or parallel to content_
};

// Comparable keys for matching tokens across a group of sequences: ids for
// regular tokens, an interned key for surfaced <UNK>, and a unique negative
// key for surface-less <UNK>, which therefore matches nothing.
using TokenKey = std::int64_t;
std::vector<std::vector<TokenKey>> token_keys(
    std::span<const TokenSeq* const> seqs);
std::vector<std::vector<TokenKey>> token_keys(std::span<const TokenSeq> seqs);

// Token equality under the same rule: ids agree, and <UNK> additionally needs
// equal non-empty surfaces.
bool same_token(const TokenSeq& a, std::size_t i, const TokenSeq& b,
                std::size_t j);

// Space-joined surface forms without sentinels.
std::string detokenize(const TokenSeq& seq, const Vocab& vocab,
                       std::string_view plh_marker = "␣PLH␣");

// Content token strings (surface form for <UNK> when known).
std::vector<std::string> token_strings(const TokenSeq& seq, const Vocab& vocab);

// Throws InvariantError if a sentinel or <PAD> appears in content or the
// sequence exceeds max_length framed tokens.
void check_framing(const TokenSeq& seq,
                   std::size_t max_length = kDefaultMaxLength,
                   bool allow_plh = true);

}  // namespace tmedit
