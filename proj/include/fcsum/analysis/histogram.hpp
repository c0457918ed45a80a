#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "fcsum/error.hpp"

namespace fcsum {

// Counts per [0,w), [w,2w), ...; a score of exactly 100 lands in the last bucket.
inline std::vector<std::size_t> bleu1_histogram(std::span<const double> scores, double bucket_width = 25.0) {
  if (!(bucket_width > 0) || bucket_width > 100) throw DataError("bucket width must be in (0, 100]");
  const auto buckets = static_cast<std::size_t>(std::ceil(100.0 / bucket_width));
  std::vector<std::size_t> counts(buckets, 0);
  for (const double s : scores) {
    if (!(s >= 0.0 && s <= 100.0)) throw DataError("BLEU1 score " + std::to_string(s) + " outside [0, 100]");
    const auto idx = std::min(static_cast<std::size_t>(s / bucket_width), buckets - 1);
    ++counts[idx];
  }
  return counts;
}

}  // namespace fcsum
