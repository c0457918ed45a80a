#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "fcsum/error.hpp"

namespace fcsum {

using TokenId = std::int32_t;

inline constexpr TokenId kPad = 0;
inline constexpr TokenId kUnk = 1;
inline constexpr TokenId kStart = 2;  // summary vocab only
inline constexpr TokenId kEnd = 3;    // summary vocab only

inline const std::vector<std::string> kCodeReserved = {"<pad>", "<unk>"};
inline const std::vector<std::string> kSummaryReserved = {"<pad>", "<unk>", "<st>", "<et>"};

// Bidirectional token <-> id map with contiguous ids from 0.
class Vocab {
 public:
  Vocab() = default;
  explicit Vocab(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
    for (std::size_t i = 0; i < tokens_.size(); ++i) {
      if (!index_.emplace(tokens_[i], static_cast<TokenId>(i)).second) {
        throw DataError("duplicate vocabulary token '" + tokens_[i] + "'");
      }
    }
  }

  std::size_t size() const { return tokens_.size(); }
  bool contains(const std::string& token) const { return index_.contains(token); }

  // Unknown tokens map to kUnk.
  TokenId id(const std::string& token) const {
    const auto it = index_.find(token);
    return it == index_.end() ? kUnk : it->second;
  }

  const std::string& token(TokenId id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
      throw IndexError("token id " + std::to_string(id) + " outside vocabulary of " +
                       std::to_string(tokens_.size()));
    }
    return tokens_[id];
  }

  const std::vector<std::string>& tokens() const { return tokens_; }

  // One token per line; line number is the id.
  void save(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write vocabulary " + path.string());
    for (const auto& t : tokens_) out << t << '\n';
  }

  static Vocab load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot read vocabulary " + path.string());
    std::vector<std::string> tokens;
    for (std::string line; std::getline(in, line);) tokens.push_back(line);
    return Vocab(std::move(tokens));
  }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
};

// Reserved tokens first, then remaining slots by descending frequency, ties
// broken lexicographically.
inline Vocab build_vocab(std::span<const std::vector<std::string>> streams, std::size_t cap,
                         const std::vector<std::string>& reserved) {
  if (cap <= reserved.size()) {
    throw DataError("vocabulary cap " + std::to_string(cap) + " leaves no room beyond " +
                    std::to_string(reserved.size()) + " reserved tokens");
  }
  std::map<std::string, std::size_t> counts;
  for (const auto& stream : streams)
    for (const auto& tok : stream) ++counts[tok];
  for (const auto& r : reserved) counts.erase(r);

  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });

  std::vector<std::string> tokens = reserved;
  for (const auto& [tok, n] : ranked) {
    if (tokens.size() >= cap) break;
    tokens.push_back(tok);
  }
  return Vocab(std::move(tokens));
}

}  // namespace fcsum
