#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "fcsum/corpus/records.hpp"
#include "fcsum/metrics/bleu.hpp"

namespace fcsum {

// Word-level provenance of improvements from model A (baseline) to model B.
struct ProvenanceStats {
  std::size_t compared = 0;
  std::size_t tied = 0;
  std::size_t improved = 0;                // B's BLEU-A > A's
  std::size_t context_word_available = 0;  // ...and the reference has a word found in context but not code
  std::size_t used_context_word = 0;       // ...and B's prediction contains such a word
  std::size_t worsened = 0;                // B's BLEU-A < A's
  std::size_t misleading_context_word = 0; // ...and B predicted a context-only word absent from the reference

  double available_rate() const { return improved ? static_cast<double>(context_word_available) / improved : 0.0; }
  double used_rate() const {
    return context_word_available ? static_cast<double>(used_context_word) / context_word_available : 0.0;
  }
};

// Predictions and references are keyed by method id; every reference id must
// have a record and both predictions.
inline ProvenanceStats word_provenance(const std::vector<MethodRecord>& records,
                                       const std::map<std::string, std::string>& baseline,
                                       const std::map<std::string, std::string>& candidate,
                                       const std::map<std::string, std::string>& references) {
  std::map<std::string, const MethodRecord*> by_id;
  for (const auto& r : records) by_id.emplace(r.id, &r);

  ProvenanceStats st;
  for (const auto& [id, ref_text] : references) {
    const auto rec = by_id.find(id);
    if (rec == by_id.end()) throw DataError("no record for method '" + id + "'");
    const auto a_it = baseline.find(id);
    const auto b_it = candidate.find(id);
    if (a_it == baseline.end() || b_it == candidate.end()) throw DataError("missing prediction for method '" + id + "'");

    const auto ref = split_whitespace(ref_text);
    const auto pa = split_whitespace(a_it->second);
    const auto pb = split_whitespace(b_it->second);
    const double sa = sentence_bleu(pa, ref).aggregate;
    const double sb = sentence_bleu(pb, ref).aggregate;
    ++st.compared;

    const auto& code = rec->second->code_tokens;
    const auto& ctx = rec->second->context_tokens;
    const auto context_only = [&](const std::string& w) {
      return std::binary_search(ctx.begin(), ctx.end(), w) && !std::binary_search(code.begin(), code.end(), w);
    };

    if (sb > sa) {
      ++st.improved;
      std::set<std::string> decisive;
      for (const auto& w : ref)
        if (context_only(w)) decisive.insert(w);
      if (!decisive.empty()) {
        ++st.context_word_available;
        if (std::any_of(pb.begin(), pb.end(), [&](const std::string& w) { return decisive.contains(w); })) {
          ++st.used_context_word;
        }
      }
    } else if (sb < sa) {
      ++st.worsened;
      const std::set<std::string> ref_set(ref.begin(), ref.end());
      if (std::any_of(pb.begin(), pb.end(),
                      [&](const std::string& w) { return context_only(w) && !ref_set.contains(w); })) {
        ++st.misleading_context_word;
      }
    } else {
      ++st.tied;
    }
  }
  return st;
}

}  // namespace fcsum
