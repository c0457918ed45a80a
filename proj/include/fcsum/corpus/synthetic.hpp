#pragma once

#include <algorithm>
#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fcsum/corpus/dataset.hpp"
#include "fcsum/corpus/records.hpp"
#include "fcsum/rng.hpp"

// Generated Java-like corpora with a planted file-context signal: each file has
// a topic word that appears in exactly one other function of the file (a
// getter such as getFlightId) and in every setter's summary, never in the
// setter's own code.

namespace fcsum {

namespace synth {

inline const std::array<std::string_view, 12> kTopics = {"flight",  "airline", "customer", "account",
                                                          "invoice", "ticket",  "booking",  "vehicle",
                                                          "patient", "student", "library",  "warehouse"};

inline const std::array<std::string_view, 16> kFields = {"name",    "destination", "price",  "status",
                                                          "address", "email",       "phone",  "date",
                                                          "code",    "owner",       "title",  "label",
                                                          "weight",  "capacity",    "region", "comment"};

struct Distractor {
  std::string_view source;
  std::string_view summary;
};

inline const std::array<Distractor, 5> kDistractors = {{
    {"public int size() {\n    return count;\n}", "returns the number of items"},
    {"public boolean isEmpty() {\n    return count == 0;\n}", "checks whether nothing is stored"},
    {"public void clear() {\n    items.clear();\n}", "removes all stored items"},
    {"public void reset() {\n    total = 0;\n}", "resets the running total"},
    {"public String toString() {\n    return label;\n}", "returns a printable label"},
}};

inline std::string capitalize(std::string_view s) {
  std::string out(s);
  if (!out.empty() && out[0] >= 'a' && out[0] <= 'z') out[0] = static_cast<char>(out[0] - 'a' + 'A');
  return out;
}

inline AstNode leaf(std::string label, std::string value = {}) { return {std::move(label), std::move(value), {}}; }

inline AstNode node(std::string label, std::vector<AstNode> children) {
  return {std::move(label), {}, std::move(children)};
}

inline AstNode setter_ast(const std::string& method, const std::string& type, const std::string& field) {
  return node("MethodDeclaration",
              {leaf("Modifier", "public"), leaf("PrimitiveType", "void"), leaf("SimpleName", method),
               node("SingleVariableDeclaration", {leaf("SimpleType", type), leaf("SimpleName", field)}),
               node("Block", {node("ExpressionStatement",
                                   {node("Assignment", {node("FieldAccess", {leaf("ThisExpression"),
                                                                             leaf("SimpleName", field)}),
                                                        leaf("SimpleName", field)})})})});
}

inline AstNode getter_ast(const std::string& method, const std::string& type, const std::string& field) {
  return node("MethodDeclaration",
              {leaf("Modifier", "public"), leaf("PrimitiveType", type), leaf("SimpleName", method),
               node("Block", {node("ReturnStatement", {leaf("SimpleName", field)})})});
}

inline RawMethod setter(std::string id, std::string file_id, const std::string& field, const std::string& type,
                        std::optional<std::string> summary) {
  const std::string name = "set" + capitalize(field);
  RawMethod m;
  m.id = std::move(id);
  m.file_id = std::move(file_id);
  m.source = "public void " + name + "(" + type + " " + field + ") {\n    this." + field + " = " + field + ";\n}";
  m.ast = setter_ast(name, type, field);
  m.summary = std::move(summary);
  return m;
}

inline RawMethod getter(std::string id, std::string file_id, const std::string& field, const std::string& type,
                        std::optional<std::string> summary) {
  const std::string name = "get" + capitalize(field);
  RawMethod m;
  m.id = std::move(id);
  m.file_id = std::move(file_id);
  m.source = "public " + type + " " + name + "() {\n    return " + field + ";\n}";
  m.ast = getter_ast(name, type, field);
  m.summary = std::move(summary);
  return m;
}

}  // namespace synth

struct SyntheticOptions {
  std::size_t files = 60;
  std::size_t setters_per_file = 3;
  std::size_t distractors_per_file = 2;
  bool summarize_context = false;  // give getters and distractors summaries too
  std::uint64_t seed = 0;
};

// Where the topic word of a setter's summary lives.
struct PlantedSignal {
  std::string topic;
  std::string informative_id;  // the getter carrying the topic word
};

struct SyntheticCorpus {
  std::vector<RawMethod> methods;
  std::map<std::string, PlantedSignal> planted;  // keyed by setter method id
};

inline std::string planted_summary(const std::string& field, const std::string& topic) {
  return "sets the " + field + " value for this " + topic;
}

inline SyntheticCorpus generate_fc_corpus(const SyntheticOptions& opt) {
  if (opt.setters_per_file == 0 || opt.setters_per_file > synth::kFields.size()) {
    throw DataError("setters per file must be in [1, " + std::to_string(synth::kFields.size()) + "]");
  }
  if (opt.distractors_per_file > synth::kDistractors.size()) throw DataError("too many distractors per file");
  Rng rng(opt.seed);
  SyntheticCorpus out;
  for (std::size_t f = 0; f < opt.files; ++f) {
    const std::string file_id = "file" + std::to_string(f);
    const std::string topic(synth::kTopics[rng.below(synth::kTopics.size())]);

    std::vector<std::size_t> fields(synth::kFields.size());
    for (std::size_t i = 0; i < fields.size(); ++i) fields[i] = i;
    rng.shuffle(std::span<std::size_t>(fields));
    std::vector<std::size_t> distractors(synth::kDistractors.size());
    for (std::size_t i = 0; i < distractors.size(); ++i) distractors[i] = i;
    rng.shuffle(std::span<std::size_t>(distractors));

    std::vector<RawMethod> file;
    const std::string info_id = file_id + ".get" + synth::capitalize(topic) + "Id";
    file.push_back(synth::getter(info_id, file_id, topic + "Id", "long",
                                 opt.summarize_context ? std::optional<std::string>("returns the " + topic + " id")
                                                       : std::nullopt));
    for (std::size_t s = 0; s < opt.setters_per_file; ++s) {
      const std::string field(synth::kFields[fields[s]]);
      const std::string id = file_id + ".set" + synth::capitalize(field);
      file.push_back(synth::setter(id, file_id, field, "String", planted_summary(field, topic)));
      out.planted[id] = {topic, info_id};
    }
    for (std::size_t d = 0; d < opt.distractors_per_file; ++d) {
      const auto& dis = synth::kDistractors[distractors[d]];
      RawMethod m;
      m.id = file_id + ".util" + std::to_string(d);
      m.file_id = file_id;
      m.source = std::string(dis.source);
      if (opt.summarize_context) m.summary = std::string(dis.summary);
      file.push_back(std::move(m));
    }
    rng.shuffle(std::span<RawMethod>(file));
    for (auto& m : file) out.methods.push_back(std::move(m));
  }
  return out;
}

// Row of `informative_id` in the target's file-context matrix, if it made the cut.
inline std::optional<std::size_t> informative_context_row(const std::vector<RawMethod>& methods,
                                                          const std::string& target_id,
                                                          const std::string& informative_id, std::size_t n) {
  std::optional<std::string> file_id;
  for (const auto& m : methods)
    if (m.id == target_id) file_id = m.file_id;
  if (!file_id) throw IndexError("method '" + target_id + "' is not in the corpus");
  std::size_t row = 0;
  for (const auto& m : methods) {
    if (m.file_id != *file_id || m.id == target_id) continue;
    if (row >= n) break;
    if (m.id == informative_id) return row;
    ++row;
  }
  return std::nullopt;
}

inline const std::string kExampleTargetId = "Flight.java#setIntermediate";
inline const std::string kExampleReference = "sets the intermediate value for this flight";

// A 32-method corpus for memorization: the flight file around setIntermediate
// (its twelve neighbours in their listed order) plus generated files, with a
// summary on almost every method.
inline SyntheticCorpus generate_overfit_corpus(std::uint64_t seed = 0) {
  using synth::getter;
  using synth::setter;
  const std::string f = "Flight.java";
  const std::string jls = "java.lang.String";
  SyntheticCorpus out;
  auto& ms = out.methods;
  ms.push_back(setter(f + "#setAirlineName", f, "airlineName", jls, "sets the airline name for this flight"));
  ms.push_back(setter(f + "#setDestination", f, "destination", jls, "sets the destination value for this flight"));
  ms.push_back(getter(f + "#getFlightId", f, "flightId", "long", "returns the flight id"));
  ms.push_back(setter(f + "#setFlightId", f, "flightId", "long", "sets the id of this flight"));
  ms.push_back(setter(f + "#setFlightNumber", f, "flightNumber", jls, "sets the flight number"));
  ms.push_back(setter(f + "#setIntermediate(java.lang.String)", f, "intermediate", jls, std::nullopt));
  ms.push_back(setter(f + "#setIntermediateArrivalTime", f, "intermediateArrivalTime", jls,
                      "sets the intermediate arrival time"));
  ms.push_back(setter(f + "#setIntermediateDepartureTime", f, "intermediateDepartureTime", jls,
                      "sets the intermediate departure time"));
  ms.push_back(getter(f + "#getNumAvailableSeats", f, "numAvailableSeats", "int",
                      "returns the number of available seats"));
  ms.push_back(setter(f + "#setNumAvailableSeats", f, "numAvailableSeats", "int",
                      "sets the number of available seats"));
  ms.push_back(getter(f + "#getNumSeats", f, "numSeats", "int", "returns the number of seats"));
  ms.push_back(setter(f + "#setNumSeats", f, "numSeats", "int", "sets the number of seats"));
  ms.push_back(setter(kExampleTargetId, f, "intermediate", "String", kExampleReference));
  out.planted[kExampleTargetId] = {"flight", f + "#getFlightId"};

  SyntheticOptions opt;
  opt.files = 4;
  opt.setters_per_file = 3;
  opt.distractors_per_file = 1;
  opt.summarize_context = true;
  opt.seed = seed;
  auto extra = generate_fc_corpus(opt);
  const std::size_t wanted = 32 - ms.size();
  for (std::size_t i = 0; i < wanted; ++i) ms.push_back(std::move(extra.methods[i]));
  for (const auto& [id, sig] : extra.planted)
    if (std::any_of(ms.begin(), ms.end(), [&](const RawMethod& m) { return m.id == id; })) out.planted[id] = sig;
  return out;
}

}  // namespace fcsum
