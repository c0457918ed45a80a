#pragma once

#include <algorithm>
#include <vector>

#include "fcsum/corpus/records.hpp"

namespace fcsum {

// One next-word example: encoder inputs come from `record`, the decoder sees
// the reference prefix only.
struct TrainingSample {
  const MethodRecord* record = nullptr;
  std::vector<TokenId> prefix;  // comlen, PAD-completed, prefix[0] = <st>
  TokenId target = kPad;
};

// For a summary of K words: K + 1 samples. Sample k has prefix <st> w1..wk and
// target w(k+1), the last one targets <et>.
inline std::vector<TrainingSample> expand_teacher_forcing(const MethodRecord& record) {
  const auto& s = record.summary_ids;
  if (s.empty() || s.front() != kStart) throw DataError("record '" + record.id + "': summary does not begin with <st>");
  const auto end = std::find(s.begin(), s.end(), kEnd);
  if (end == s.end()) throw DataError("record '" + record.id + "': summary has no <et>");
  const auto words = static_cast<std::size_t>(end - s.begin()) - 1;

  std::vector<TrainingSample> out;
  out.reserve(words + 1);
  for (std::size_t k = 0; k <= words; ++k) {
    TrainingSample sample{&record, std::vector<TokenId>(s.size(), kPad), s[k + 1]};
    std::copy(s.begin(), s.begin() + static_cast<std::ptrdiff_t>(k + 1), sample.prefix.begin());
    out.push_back(std::move(sample));
  }
  return out;
}

inline std::vector<TrainingSample> expand_all(const std::vector<MethodRecord>& records) {
  std::vector<TrainingSample> out;
  for (const auto& r : records) {
    auto s = expand_teacher_forcing(r);
    out.insert(out.end(), std::make_move_iterator(s.begin()), std::make_move_iterator(s.end()));
  }
  return out;
}

}  // namespace fcsum
