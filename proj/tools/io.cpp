#include <fstream>
#include <iostream>

#include "cli.hpp"
#include "tmedit/errors.hpp"

namespace tmedit::cli {

TokenSeq Codec::encode(const json& field, std::size_t line,
                       std::size_t max_length) {
  const auto tokens = parse_token_field(field, line);
  TokenSeq seq = grow_ ? encode_growing(tokens, vocab_) : tmedit::encode(tokens, vocab_);
  check_length(seq, max_length, line);
  return seq;
}

json Codec::decode(const TokenSeq& seq) const { return token_strings(seq, vocab_); }

Input::Input(const std::string& path) : path_(path) {
  if (path == "-") {
    in_ = &std::cin;
    return;
  }
  owned_ = std::make_unique<std::ifstream>(path);
  if (!*owned_) throw DataError("cannot open " + path);
  in_ = owned_.get();
}

Output::Output(const std::string& path) : path_(path) {
  if (path == "-") {
    out_ = &std::cout;
    return;
  }
  owned_ = std::make_unique<std::ofstream>(path);
  if (!*owned_) throw DataError("cannot write " + path);
  out_ = owned_.get();
}

void Output::header(const std::string& command, const Config& cfg,
                    const json& inputs) {
  line({{"header",
         {{"tool", "tmedit"},
          {"version", kVersion},
          {"command", command},
          {"config", cfg.to_json()},
          {"inputs", inputs},
          {"seed", cfg.seed}}}});
}

void Output::line(const json& j) { *out_ << j.dump() << '\n'; }

void Output::close() {
  out_->flush();
  if (!*out_) throw DataError("write failed: " + path_);
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  std::vector<std::exception_ptr> errors(n);
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < n; ++i) {
    try {
      fn(i);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace tmedit::cli
