#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace tmedit {

using TokenId = std::int32_t;

// Token string <-> id table. Ids 0..4 are reserved for the sentinels below;
// regular tokens follow in insertion order.
class Vocab {
 public:
  static constexpr TokenId kBos = 0;
  static constexpr TokenId kEos = 1;
  static constexpr TokenId kPlh = 2;
  static constexpr TokenId kPad = 3;
  static constexpr TokenId kUnk = 4;
  static constexpr TokenId kNumReserved = 5;

  Vocab();

  // One token per line; line k (0-based) gets id kNumReserved + k.
  static Vocab load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  // Returns the existing id or appends a new entry.
  TokenId intern(std::string_view token);
  // Unknown strings map to kUnk.
  TokenId lookup(std::string_view token) const;
  bool contains(std::string_view token) const;

  const std::string& token(TokenId id) const;
  std::size_t size() const { return entries_.size(); }

  static bool is_reserved(TokenId id) { return id >= 0 && id < kNumReserved; }

 private:
  struct Hash {
    using is_transparent = void;
    std::size_t operator()(std::string_view s) const {
      return std::hash<std::string_view>{}(s);
    }
  };
  std::vector<std::string> entries_;
  std::unordered_map<std::string, TokenId, Hash, std::equal_to<>> index_;
};

}  // namespace tmedit
