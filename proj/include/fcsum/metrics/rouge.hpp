#pragma once

#include <algorithm>
#include <span>
#include <string>
#include <vector>

namespace fcsum {

inline std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

struct RougeLcs {
  double precision = 0;
  double recall = 0;
  double f1 = 0;
};

// P = lcs/|pred|, R = lcs/|ref|, F = 2PR/(P+R); empty sides score 0.
inline RougeLcs rouge_from_lcs(std::size_t lcs, std::size_t pred_len, std::size_t ref_len) {
  RougeLcs r;
  if (pred_len > 0) r.precision = static_cast<double>(lcs) / static_cast<double>(pred_len);
  if (ref_len > 0) r.recall = static_cast<double>(lcs) / static_cast<double>(ref_len);
  if (r.precision + r.recall > 0) r.f1 = 2 * r.precision * r.recall / (r.precision + r.recall);
  return r;
}

inline RougeLcs rouge_lcs(std::span<const std::string> pred, std::span<const std::string> ref) {
  return rouge_from_lcs(lcs_length(pred, ref), pred.size(), ref.size());
}

}  // namespace fcsum
