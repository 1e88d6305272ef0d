#include "tmedit/corpus.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "tmedit/errors.hpp"

namespace tmedit {

void for_each_jsonl(std::istream& in,
                    const std::function<void(const json&, std::size_t)>& fn) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw DataError(std::string("malformed JSON: ") + e.what(), line_no);
    }
    if (!obj.is_object()) throw DataError("expected a JSON object", line_no);
    if (obj.contains("header")) continue;
    fn(obj, line_no);
  }
}

void for_each_jsonl(const std::filesystem::path& path,
                    const std::function<void(const json&, std::size_t)>& fn) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  for_each_jsonl(in, fn);
}

std::vector<std::string> parse_token_field(const json& field,
                                           std::size_t line) {
  std::vector<std::string> tokens;
  if (field.is_string()) {
    std::istringstream ss(field.get<std::string>());
    std::string tok;
    while (ss >> tok) tokens.push_back(std::move(tok));
  } else if (field.is_array()) {
    for (const auto& t : field) {
      if (!t.is_string()) throw DataError("token is not a string", line);
      tokens.push_back(t.get<std::string>());
    }
  } else {
    throw DataError("token field must be an array of strings or a string",
                    line);
  }
  return tokens;
}

TokenSeq encode(const std::vector<std::string>& tokens, const Vocab& vocab) {
  TokenSeq seq;
  for (const auto& t : tokens) {
    const TokenId id = vocab.lookup(t);
    seq.push_back(id, id == Vocab::kUnk ? std::string_view(t)
                                        : std::string_view{});
  }
  return seq;
}

TokenSeq encode_growing(const std::vector<std::string>& tokens, Vocab& vocab) {
  TokenSeq seq;
  for (const auto& t : tokens) seq.push_back(vocab.intern(t));
  return seq;
}

void check_length(const TokenSeq& seq, std::size_t max_length,
                  std::size_t line) {
  if (seq.framed_size() > max_length) {
    throw DataError("sequence of " + std::to_string(seq.framed_size()) +
                        " tokens (with sentinels) exceeds L_max=" +
                        std::to_string(max_length),
                    line);
  }
}

std::vector<CorpusRecord> load_corpus_records(std::istream& in,
                                              const Vocab& vocab,
                                              std::size_t max_length) {
  std::vector<CorpusRecord> out;
  for_each_jsonl(in, [&](const json& obj, std::size_t line) {
    CorpusRecord rec;
    if (auto it = obj.find("id"); it != obj.end()) {
      if (!it->is_number_integer()) throw DataError("\"id\" must be an integer", line);
      rec.id = it->get<std::int64_t>();
    }
    const json* field = nullptr;
    if (auto it = obj.find("tokens"); it != obj.end()) {
      field = &*it;
    } else if (auto it2 = obj.find("text"); it2 != obj.end()) {
      field = &*it2;
    } else {
      throw DataError("record has neither \"tokens\" nor \"text\"", line);
    }
    rec.tokens = encode(parse_token_field(*field, line), vocab);
    check_length(rec.tokens, max_length, line);
    out.push_back(std::move(rec));
  });
  return out;
}

std::vector<TokenSeq> load_corpus(const std::filesystem::path& path,
                                  const Vocab& vocab, std::size_t max_length) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<TokenSeq> out;
  for (auto& rec : load_corpus_records(in, vocab, max_length)) {
    out.push_back(std::move(rec.tokens));
  }
  return out;
}

void write_corpus(std::ostream& out, const std::vector<CorpusRecord>& records,
                  const Vocab& vocab) {
  for (const auto& rec : records) {
    json obj;
    if (rec.id) obj["id"] = *rec.id;
    obj["tokens"] = token_strings(rec.tokens, vocab);
    out << obj.dump() << '\n';
  }
}

}  // namespace tmedit
