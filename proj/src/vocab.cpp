#include "tmedit/vocab.hpp"

#include <fstream>

#include "tmedit/errors.hpp"

namespace tmedit {

Vocab::Vocab() {
  for (const char* s : {"<BOS>", "<EOS>", "<PLH>", "<PAD>", "<UNK>"}) intern(s);
}

Vocab Vocab::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open vocab file " + path.string());
  Vocab vocab;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) throw DataError("empty vocab entry", line_no);
    if (vocab.contains(line)) {
      throw DataError("duplicate vocab entry '" + line + "'", line_no);
    }
    vocab.intern(line);
  }
  return vocab;
}

void Vocab::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write vocab file " + path.string());
  for (std::size_t i = kNumReserved; i < entries_.size(); ++i) {
    out << entries_[i] << '\n';
  }
}

TokenId Vocab::intern(std::string_view token) {
  if (auto it = index_.find(token); it != index_.end()) return it->second;
  const auto id = static_cast<TokenId>(entries_.size());
  entries_.emplace_back(token);
  index_.emplace(entries_.back(), id);
  return id;
}

TokenId Vocab::lookup(std::string_view token) const {
  auto it = index_.find(token);
  return it == index_.end() ? kUnk : it->second;
}

bool Vocab::contains(std::string_view token) const {
  return index_.find(token) != index_.end();
}

const std::string& Vocab::token(TokenId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= entries_.size()) {
    throw DataError("token id " + std::to_string(id) + " out of vocabulary");
  }
  return entries_[static_cast<std::size_t>(id)];
}

}  // namespace tmedit
