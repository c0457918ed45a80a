#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <sstream>
#include <string>

#include "fcsum/model/params.hpp"
#include "fcsum/training/trainer.hpp"

namespace fcsum {

// Everything a `train` run needs. Defaults are the desk preset with both
// optional encoders on.
struct RunConfig {
  HyperParams hp = HyperParams::desk();
  ModelFlags flags{true, true};
  TrainConfig train;
};

using ConfigEntries = std::map<std::string, std::string>;

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline std::size_t parse_count(const std::string& key, const std::string& v) {
  std::size_t out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size()) throw DataError("config '" + key + "': not a count: " + v);
  return out;
}

inline std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size()) throw DataError("config '" + key + "': not an integer: " + v);
  return out;
}

inline double parse_real(const std::string& key, const std::string& v) {
  std::istringstream in(v);
  in.imbue(std::locale::classic());
  double out = 0;
  if (!(in >> out) || !in.eof()) throw DataError("config '" + key + "': not a number: " + v);
  return out;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw DataError("config '" + key + "': not a boolean: " + v);
}

}  // namespace detail

// Flat `key = value` lines; '#' starts a comment.
inline ConfigEntries parse_config(std::istream& in, const std::string& source = "<config>") {
  ConfigEntries out;
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto body = detail::trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw ParseError(source + ":" + std::to_string(line_no) + ": expected key = value");
    auto key = detail::trim(std::string_view(body).substr(0, eq));
    auto value = detail::trim(std::string_view(body).substr(eq + 1));
    if (key.empty()) throw ParseError(source + ":" + std::to_string(line_no) + ": empty key");
    out[key] = value;
  }
  return out;
}

inline ConfigEntries load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read config " + path.string());
  return parse_config(in, path.string());
}

inline const std::map<std::string, std::function<void(RunConfig&, const std::string&, const std::string&)>>&
config_setters() {
  using Setter = std::function<void(RunConfig&, const std::string&, const std::string&)>;
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> t;
    const auto hp_field = [&](const char* key, std::size_t HyperParams::*field) {
      t[key] = [field](RunConfig& c, const std::string& k, const std::string& v) {
        c.hp.*field = detail::parse_count(k, v);
      };
    };
    hp_field("n", &HyperParams::n);
    hp_field("m", &HyperParams::m);
    hp_field("tdatlen", &HyperParams::tdatlen);
    hp_field("astlen", &HyperParams::astlen);
    hp_field("comlen", &HyperParams::comlen);
    hp_field("code_vocab", &HyperParams::code_vocab);
    hp_field("summary_vocab", &HyperParams::summary_vocab);
    hp_field("ast_vocab", &HyperParams::ast_vocab);
    hp_field("embed_code", &HyperParams::embed_code);
    hp_field("embed_ast", &HyperParams::embed_ast);
    hp_field("rnn_units", &HyperParams::rnn_units);
    hp_field("squash_units", &HyperParams::squash_units);
    t["use_ast"] = [](RunConfig& c, const std::string& k, const std::string& v) { c.flags.use_ast = detail::parse_bool(k, v); };
    t["use_fc"] = [](RunConfig& c, const std::string& k, const std::string& v) { c.flags.use_fc = detail::parse_bool(k, v); };
    t["variant"] = [](RunConfig& c, const std::string&, const std::string& v) { c.flags = ModelFlags::from_variant(v); };
    t["epochs"] = [](RunConfig& c, const std::string& k, const std::string& v) { c.train.epochs = detail::parse_count(k, v); };
    t["batch_size"] = [](RunConfig& c, const std::string& k, const std::string& v) { c.train.batch_size = detail::parse_count(k, v); };
    t["learning_rate"] = [](RunConfig& c, const std::string& k, const std::string& v) { c.train.learning_rate = detail::parse_real(k, v); };
    t["seed"] = [](RunConfig& c, const std::string& k, const std::string& v) { c.train.seed = detail::parse_u64(k, v); };
    t["checkpoint_dir"] = [](RunConfig& c, const std::string&, const std::string& v) { c.train.checkpoint_dir = v; };
    t["preset"] = [](RunConfig& c, const std::string&, const std::string& v) {
      if (v == "desk") c.hp = HyperParams::desk();
      else if (v == "full") c.hp = HyperParams::full();
      else throw DataError("config 'preset': unknown preset " + v);
    };
    return t;
  }();
  return table;
}

// Applies entries onto `cfg`; `preset` first so explicit keys override it.
// Unknown keys are errors.
inline void apply_config(RunConfig& cfg, const ConfigEntries& entries) {
  const auto& setters = config_setters();
  for (const auto& [key, value] : entries)
    if (!setters.contains(key)) throw DataError("unknown config key '" + key + "'");
  if (const auto it = entries.find("preset"); it != entries.end()) setters.at("preset")(cfg, it->first, it->second);
  for (const auto& [key, value] : entries)
    if (key != "preset") setters.at(key)(cfg, key, value);
}

inline std::string hyperparams_to_config(const HyperParams& hp) {
  std::ostringstream out;
  out << "n = " << hp.n << "\nm = " << hp.m << "\ntdatlen = " << hp.tdatlen << "\nastlen = " << hp.astlen
      << "\ncomlen = " << hp.comlen << "\ncode_vocab = " << hp.code_vocab << "\nsummary_vocab = " << hp.summary_vocab
      << "\nast_vocab = " << hp.ast_vocab << "\nembed_code = " << hp.embed_code << "\nembed_ast = " << hp.embed_ast
      << "\nrnn_units = " << hp.rnn_units << "\nsquash_units = " << hp.squash_units << "\n";
  return out.str();
}

}  // namespace fcsum
