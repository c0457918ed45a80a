#pragma once

#include <algorithm>
#include <array>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "fcsum/corpus/dataset.hpp"
#include "fcsum/corpus/hyperparams.hpp"
#include "fcsum/corpus/tokenize.hpp"
#include "fcsum/corpus/vocab.hpp"

namespace fcsum {

// Summaries shorter than this are not used as training/evaluation targets.
inline constexpr std::size_t kMinSummaryWords = 3;

// n x m token ids of the other functions in the target's file; unused rows are PAD.
struct FileContextMatrix {
  std::size_t n = 0;
  std::size_t m = 0;
  std::vector<TokenId> ids;

  FileContextMatrix() = default;
  FileContextMatrix(std::size_t rows, std::size_t cols) : n(rows), m(cols), ids(rows * cols, kPad) {}

  std::span<const TokenId> row(std::size_t i) const { return {ids.data() + i * m, m}; }
  std::span<TokenId> row(std::size_t i) { return {ids.data() + i * m, m}; }
  TokenId operator()(std::size_t i, std::size_t j) const { return ids[i * m + j]; }

  friend bool operator==(const FileContextMatrix&, const FileContextMatrix&) = default;
};

struct MethodRecord {
  std::string id;
  std::string file_id;
  std::vector<TokenId> code_ids;     // tdatlen
  std::vector<TokenId> sbt_ids;      // astlen
  std::vector<TokenId> summary_ids;  // comlen, <st> ... <et> PAD...
  FileContextMatrix fc;              // n x m

  // Surface data kept for evaluation and word-provenance analysis.
  std::vector<std::string> code_tokens;     // unique, sorted
  std::vector<std::string> context_tokens;  // unique, sorted
  std::string reference;                    // tokenized summary joined by spaces

  friend bool operator==(const MethodRecord&, const MethodRecord&) = default;
};

// Maps tokens to ids (unknown -> UNK), keeps the first `length`, right-pads with PAD.
inline std::vector<TokenId> encode_sequence(std::span<const std::string> tokens, const Vocab& vocab,
                                            std::size_t length) {
  std::vector<TokenId> ids(length, kPad);
  const std::size_t n = std::min(length, tokens.size());
  for (std::size_t i = 0; i < n; ++i) ids[i] = vocab.id(tokens[i]);
  return ids;
}

// <st> + first (comlen - 2) words + <et>, PAD-completed to comlen.
inline std::vector<TokenId> encode_summary(std::span<const std::string> words, const Vocab& vocab,
                                           std::size_t comlen) {
  std::vector<TokenId> ids(comlen, kPad);
  ids[0] = kStart;
  const std::size_t n = std::min(words.size(), comlen - 2);
  for (std::size_t i = 0; i < n; ++i) ids[i + 1] = vocab.id(words[i]);
  ids[n + 1] = kEnd;
  return ids;
}

inline std::vector<std::string> method_code_tokens(const RawMethod& m) {
  return tokenize_code(strip_comments(m.source));
}

// Token rows for the other methods of the file, in file order, at most n rows
// of at most m tokens each. Comments never enter the context.
inline std::vector<std::vector<std::string>> file_context_tokens(std::span<const RawMethod> file_methods,
                                                                 const std::string& target_id,
                                                                 std::size_t n, std::size_t m) {
  const bool present = std::any_of(file_methods.begin(), file_methods.end(),
                                   [&](const RawMethod& r) { return r.id == target_id; });
  if (!present) throw IndexError("method '" + target_id + "' is not in the given file");
  std::vector<std::vector<std::string>> rows;
  for (const auto& other : file_methods) {
    if (rows.size() >= n) break;
    if (other.id == target_id) continue;
    auto toks = method_code_tokens(other);
    if (toks.size() > m) toks.resize(m);
    rows.push_back(std::move(toks));
  }
  return rows;
}

inline FileContextMatrix build_file_context(std::span<const RawMethod> file_methods, const std::string& target_id,
                                            const HyperParams& hp, const Vocab& code_vocab) {
  FileContextMatrix fc(hp.n, hp.m);
  const auto rows = file_context_tokens(file_methods, target_id, hp.n, hp.m);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto enc = encode_sequence(rows[i], code_vocab, hp.m);
    std::copy(enc.begin(), enc.end(), fc.row(i).begin());
  }
  return fc;
}

inline std::vector<std::string> sorted_unique(std::vector<std::string> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

// Methods grouped by file_id, files in first-appearance order, methods in file order.
inline std::vector<std::vector<RawMethod>> group_by_file(const std::vector<RawMethod>& methods) {
  std::vector<std::vector<RawMethod>> files;
  std::map<std::string, std::size_t> index;
  for (const auto& m : methods) {
    auto [it, inserted] = index.emplace(m.file_id, files.size());
    if (inserted) files.emplace_back();
    files[it->second].push_back(m);
  }
  return files;
}

inline bool is_summary_target(const RawMethod& m) {
  return m.summary && tokenize_summary(*m.summary).size() >= kMinSummaryWords;
}

struct Vocabularies {
  Vocab code, summary, ast;
};

// Counting streams for one split: code stream holds each target's own code
// tokens followed by its file-context rows, so context words compete for the
// shared code/context vocabulary.
struct TokenStreams {
  std::vector<std::vector<std::string>> code, summary, ast;
};

inline TokenStreams collect_streams(const std::vector<RawMethod>& methods, const HyperParams& hp,
                                    bool include_context = true) {
  TokenStreams s;
  for (const auto& file : group_by_file(methods)) {
    for (const auto& m : file) {
      if (!is_summary_target(m)) continue;
      s.code.push_back(method_code_tokens(m));
      if (include_context) {
        for (auto& row : file_context_tokens(file, m.id, hp.n, hp.m)) s.code.push_back(std::move(row));
      }
      s.summary.push_back(tokenize_summary(*m.summary));
      if (m.ast) s.ast.push_back(sbt_flatten(*m.ast));
    }
  }
  return s;
}

inline Vocabularies build_vocabularies(const std::vector<RawMethod>& train, const HyperParams& hp) {
  const auto s = collect_streams(train, hp);
  return {build_vocab(s.code, hp.code_vocab, kCodeReserved),
          build_vocab(s.summary, hp.summary_vocab, kSummaryReserved),
          build_vocab(s.ast, hp.ast_vocab, kCodeReserved)};
}

// Encodes every summary-bearing method of `methods` (grouped by file).
inline std::vector<MethodRecord> encode_methods(const std::vector<RawMethod>& methods, const HyperParams& hp,
                                                const Vocabularies& v) {
  std::vector<MethodRecord> out;
  for (const auto& file : group_by_file(methods)) {
    for (const auto& m : file) {
      if (!is_summary_target(m)) continue;
      MethodRecord r;
      r.id = m.id;
      r.file_id = m.file_id;
      const auto code = method_code_tokens(m);
      r.code_ids = encode_sequence(code, v.code, hp.tdatlen);
      r.sbt_ids = m.ast ? encode_sequence(sbt_flatten(*m.ast), v.ast, hp.astlen)
                        : std::vector<TokenId>(hp.astlen, kPad);
      const auto words = tokenize_summary(*m.summary);
      r.summary_ids = encode_summary(words, v.summary, hp.comlen);
      r.fc = build_file_context(file, m.id, hp, v.code);
      r.code_tokens = sorted_unique(code);
      std::vector<std::string> ctx;
      for (auto& row : file_context_tokens(file, m.id, hp.n, hp.m)) ctx.insert(ctx.end(), row.begin(), row.end());
      r.context_tokens = sorted_unique(std::move(ctx));
      r.reference = join_words(words);
      out.push_back(std::move(r));
    }
  }
  return out;
}

struct PreparedCorpus {
  HyperParams hp;  // vocab sizes set to the built vocabularies
  Vocabularies vocabs;
  std::vector<MethodRecord> train, val, test;
};

// Split by file, build vocabularies on the training partition, encode all partitions.
inline PreparedCorpus prepare_corpus(const std::vector<RawMethod>& methods, HyperParams hp,
                                     std::array<double, 3> ratios, std::uint64_t seed) {
  hp.validate();
  const auto split = split_dataset(methods, ratios, seed);
  PreparedCorpus pc;
  pc.vocabs = build_vocabularies(split.train, hp);
  hp.code_vocab = pc.vocabs.code.size();
  hp.summary_vocab = pc.vocabs.summary.size();
  hp.ast_vocab = pc.vocabs.ast.size();
  pc.hp = hp;
  pc.train = encode_methods(split.train, hp, pc.vocabs);
  pc.val = encode_methods(split.val, hp, pc.vocabs);
  pc.test = encode_methods(split.test, hp, pc.vocabs);
  return pc;
}

// ---- encoded dataset (line-delimited JSON) ----

inline nlohmann::json record_to_json(const MethodRecord& r) {
  nlohmann::json fc = nlohmann::json::array();
  for (std::size_t i = 0; i < r.fc.n; ++i) fc.push_back(std::vector<TokenId>(r.fc.row(i).begin(), r.fc.row(i).end()));
  return {{"id", r.id},
          {"file_id", r.file_id},
          {"code", r.code_ids},
          {"sbt", r.sbt_ids},
          {"summary", r.summary_ids},
          {"fc", fc},
          {"code_tokens", r.code_tokens},
          {"context_tokens", r.context_tokens},
          {"reference", r.reference}};
}

inline MethodRecord record_from_json(const nlohmann::json& j) {
  MethodRecord r;
  r.id = j.at("id").get<std::string>();
  r.file_id = j.at("file_id").get<std::string>();
  r.code_ids = j.at("code").get<std::vector<TokenId>>();
  r.sbt_ids = j.at("sbt").get<std::vector<TokenId>>();
  r.summary_ids = j.at("summary").get<std::vector<TokenId>>();
  const auto rows = j.at("fc").get<std::vector<std::vector<TokenId>>>();
  r.fc.n = rows.size();
  r.fc.m = rows.empty() ? 0 : rows.front().size();
  for (const auto& row : rows) {
    if (row.size() != r.fc.m) throw DataError("ragged file-context matrix for '" + r.id + "'");
    r.fc.ids.insert(r.fc.ids.end(), row.begin(), row.end());
  }
  r.code_tokens = j.value("code_tokens", std::vector<std::string>{});
  r.context_tokens = j.value("context_tokens", std::vector<std::string>{});
  r.reference = j.value("reference", std::string{});
  return r;
}

inline void save_records(const std::filesystem::path& path, const std::vector<MethodRecord>& records) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  for (const auto& r : records) out << record_to_json(r).dump() << '\n';
}

inline std::vector<MethodRecord> load_records(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read " + path.string());
  std::vector<MethodRecord> out;
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(record_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

// Checks every sequence length and id range against hp.
inline void validate_record(const MethodRecord& r, const HyperParams& hp) {
  const auto check = [&](std::span<const TokenId> ids, std::size_t len, std::size_t vocab, const char* what) {
    if (ids.size() != len) {
      throw DataError("record '" + r.id + "': " + what + " has length " + std::to_string(ids.size()) +
                      ", expected " + std::to_string(len));
    }
    for (const auto id : ids) {
      if (id < 0 || static_cast<std::size_t>(id) >= vocab) {
        throw IndexError("record '" + r.id + "': " + what + " id " + std::to_string(id) + " outside vocabulary of " +
                         std::to_string(vocab));
      }
    }
  };
  check(r.code_ids, hp.tdatlen, hp.code_vocab, "code");
  check(r.sbt_ids, hp.astlen, hp.ast_vocab, "sbt");
  check(r.summary_ids, hp.comlen, hp.summary_vocab, "summary");
  if (r.fc.n != hp.n || r.fc.m != hp.m) {
    throw DataError("record '" + r.id + "': file context is " + std::to_string(r.fc.n) + "x" +
                    std::to_string(r.fc.m) + ", expected " + std::to_string(hp.n) + "x" + std::to_string(hp.m));
  }
  check(r.fc.ids, hp.n * hp.m, hp.code_vocab, "file context");
}

}  // namespace fcsum
