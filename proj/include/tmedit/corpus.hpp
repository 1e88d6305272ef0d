#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "tmedit/token_seq.hpp"
#include "tmedit/vocab.hpp"

namespace tmedit {

using json = nlohmann::json;

// Calls `fn(object, line_number)` for each non-blank line. Parse failures
// throw DataError carrying the 1-based line number. Header lines written by
// the CLI ({"header": ...}) are skipped.
void for_each_jsonl(std::istream& in,
                    const std::function<void(const json&, std::size_t)>& fn);
void for_each_jsonl(const std::filesystem::path& path,
                    const std::function<void(const json&, std::size_t)>& fn);

// Token field: either an array of strings or a whitespace-split string.
std::vector<std::string> parse_token_field(const json& field, std::size_t line);

// Strings to a framed sequence. Unknown strings become <UNK> (surface kept).
TokenSeq encode(const std::vector<std::string>& tokens, const Vocab& vocab);
// Same, growing the vocabulary instead.
TokenSeq encode_growing(const std::vector<std::string>& tokens, Vocab& vocab);

struct CorpusRecord {
  std::optional<std::int64_t> id;
  TokenSeq tokens;
};

// JSONL with "tokens" (array) or "text" (whitespace-split) per line, plus an
// optional integer "id". Line order is preserved.
std::vector<TokenSeq> load_corpus(const std::filesystem::path& path,
                                  const Vocab& vocab,
                                  std::size_t max_length = kDefaultMaxLength);
std::vector<CorpusRecord> load_corpus_records(
    std::istream& in, const Vocab& vocab,
    std::size_t max_length = kDefaultMaxLength);

// Writes {"tokens": [...]} lines (plus "id" when present).
void write_corpus(std::ostream& out, const std::vector<CorpusRecord>& records,
                  const Vocab& vocab);

// Checks framed length against L_max; throws DataError naming the limit.
void check_length(const TokenSeq& seq, std::size_t max_length,
                  std::size_t line);

}  // namespace tmedit
