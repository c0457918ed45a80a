#pragma once

#include <cctype>
#include <string>
#include <string_view>
#include <vector>

namespace fcsum {

namespace detail {

inline bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }
inline bool is_upper(char c) { return std::isupper(static_cast<unsigned char>(c)) != 0; }
inline bool is_lower(char c) { return std::islower(static_cast<unsigned char>(c)) != 0; }
inline bool is_digit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }

inline std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

// Boundary inside an alphanumeric run, before position i.
inline bool subtoken_boundary(std::string_view w, std::size_t i) {
  const char prev = w[i - 1], cur = w[i];
  if (is_lower(prev) && is_upper(cur)) return true;                  // getFlight
  if (is_digit(prev) && !is_digit(cur)) return true;                 // 3To, 2d
  if (is_upper(prev) && is_upper(cur) && i + 1 < w.size() && is_lower(w[i + 1])) return true;  // HTTPServer
  return false;
}

}  // namespace detail

// Splits identifiers into lowercase subtokens. Non-alphanumerics separate
// tokens and are dropped (so snake_case splits too); camelCase humps and
// digit-to-letter transitions split inside a run. Letter-to-digit does not
// split, keeping "mp3", "utf8", "int32" whole.
inline std::vector<std::string> tokenize_code(std::string_view source) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < source.size()) {
    while (i < source.size() && !detail::is_alnum(source[i])) ++i;
    std::size_t j = i;
    while (j < source.size() && detail::is_alnum(source[j])) ++j;
    const std::string_view run = source.substr(i, j - i);
    std::size_t start = 0;
    for (std::size_t k = 1; k < run.size(); ++k) {
      if (detail::subtoken_boundary(run, k)) {
        out.push_back(detail::lower(run.substr(start, k - start)));
        start = k;
      }
    }
    if (!run.empty()) out.push_back(detail::lower(run.substr(start)));
    i = j;
  }
  return out;
}

// Summaries go through the same splitting rules as code.
inline std::vector<std::string> tokenize_summary(std::string_view text) { return tokenize_code(text); }

// Removes // line and /* block */ comments, leaving string and char literals intact.
inline std::string strip_comments(std::string_view src) {
  std::string out;
  out.reserve(src.size());
  std::size_t i = 0;
  while (i < src.size()) {
    const char c = src[i];
    if (c == '"' || c == '\'') {
      const char quote = c;
      out.push_back(c);
      ++i;
      while (i < src.size() && src[i] != quote) {
        if (src[i] == '\\' && i + 1 < src.size()) out.push_back(src[i++]);
        out.push_back(src[i++]);
      }
      if (i < src.size()) out.push_back(src[i++]);
    } else if (c == '/' && i + 1 < src.size() && src[i + 1] == '/') {
      while (i < src.size() && src[i] != '\n') ++i;
    } else if (c == '/' && i + 1 < src.size() && src[i + 1] == '*') {
      const auto end = src.find("*/", i + 2);
      i = end == std::string_view::npos ? src.size() : end + 2;
      out.push_back(' ');
    } else {
      out.push_back(c);
      ++i;
    }
  }
  return out;
}

inline std::string join_words(const std::vector<std::string>& words, std::string_view sep = " ") {
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i > 0) out += sep;
    out += words[i];
  }
  return out;
}

inline std::vector<std::string> split_whitespace(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    if (j > i) out.emplace_back(text.substr(i, j - i));
    i = j;
  }
  return out;
}

}  // namespace fcsum
