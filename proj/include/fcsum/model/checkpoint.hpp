#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "fcsum/model/params.hpp"

namespace fcsum {

// Binary layout, all integers little-endian uint32:
//   "FCSM" | version | hyperparameter count K | K values
//   | parameter count P | P x (name length, name bytes, rank, dims..., float32 payload)
// Hyperparameter order: n m tdatlen astlen comlen code_vocab summary_vocab
// ast_vocab embed_code embed_ast rnn_units squash_units use_ast use_fc.
inline constexpr std::array<char, 4> kCheckpointMagic = {'F', 'C', 'S', 'M'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

namespace detail {

inline void put_u32(std::ostream& out, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

inline std::uint32_t get_u32(std::istream& in, const char* what) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw ParseError(std::string("checkpoint truncated reading ") + what);
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

inline std::vector<std::uint32_t> hyperparameter_block(const HyperParams& hp, const ModelFlags& f) {
  return {static_cast<std::uint32_t>(hp.n),          static_cast<std::uint32_t>(hp.m),
          static_cast<std::uint32_t>(hp.tdatlen),    static_cast<std::uint32_t>(hp.astlen),
          static_cast<std::uint32_t>(hp.comlen),     static_cast<std::uint32_t>(hp.code_vocab),
          static_cast<std::uint32_t>(hp.summary_vocab), static_cast<std::uint32_t>(hp.ast_vocab),
          static_cast<std::uint32_t>(hp.embed_code), static_cast<std::uint32_t>(hp.embed_ast),
          static_cast<std::uint32_t>(hp.rnn_units),  static_cast<std::uint32_t>(hp.squash_units),
          f.use_ast ? 1u : 0u,                       f.use_fc ? 1u : 0u};
}

}  // namespace detail

template <class T>
void save_checkpoint(const std::filesystem::path& path, const ModelParams<T>& params) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write checkpoint " + path.string());
  out.write(kCheckpointMagic.data(), 4);
  detail::put_u32(out, kCheckpointVersion);
  const auto block = detail::hyperparameter_block(params.hp, params.flags);
  detail::put_u32(out, static_cast<std::uint32_t>(block.size()));
  for (const auto v : block) detail::put_u32(out, v);
  detail::put_u32(out, static_cast<std::uint32_t>(params.tensors.size()));
  for (const auto& [name, m] : params.tensors) {
    detail::put_u32(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    detail::put_u32(out, 2);
    detail::put_u32(out, static_cast<std::uint32_t>(m.rows()));
    detail::put_u32(out, static_cast<std::uint32_t>(m.cols()));
    for (const auto v : m.values()) detail::put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  }
  if (!out) throw DataError("failed writing checkpoint " + path.string());
}

// Rejects unknown versions and any parameter whose name or dims disagree with
// the shapes implied by the stored hyperparameters.
template <class T = float>
ModelParams<T> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read checkpoint " + path.string());
  std::array<char, 4> magic{};
  if (!in.read(magic.data(), 4) || magic != kCheckpointMagic) {
    throw ParseError(path.string() + " is not a checkpoint (bad magic)");
  }
  const auto version = detail::get_u32(in, "version");
  if (version != kCheckpointVersion) {
    throw ParseError("unsupported checkpoint version " + std::to_string(version));
  }
  const auto k = detail::get_u32(in, "hyperparameter count");
  if (k != 14) throw ParseError("unexpected hyperparameter block size " + std::to_string(k));
  std::array<std::uint32_t, 14> b{};
  for (auto& v : b) v = detail::get_u32(in, "hyperparameters");

  ModelParams<T> params;
  auto& hp = params.hp;
  hp.n = b[0];
  hp.m = b[1];
  hp.tdatlen = b[2];
  hp.astlen = b[3];
  hp.comlen = b[4];
  hp.code_vocab = b[5];
  hp.summary_vocab = b[6];
  hp.ast_vocab = b[7];
  hp.embed_code = b[8];
  hp.embed_ast = b[9];
  hp.rnn_units = b[10];
  hp.squash_units = b[11];
  params.flags = {b[12] != 0, b[13] != 0};
  hp.validate();

  std::map<std::string, ParamShape> expected;
  for (auto& s : parameter_shapes(hp, params.flags)) expected.emplace(s.name, s);

  const auto count = detail::get_u32(in, "parameter count");
  if (count != expected.size()) {
    throw DataError("checkpoint holds " + std::to_string(count) + " parameters, hyperparameters imply " +
                    std::to_string(expected.size()));
  }
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto len = detail::get_u32(in, "name length");
    if (len > 4096) throw ParseError("implausible parameter name length");
    std::string name(len, '\0');
    if (!in.read(name.data(), len)) throw ParseError("checkpoint truncated reading parameter name");
    const auto it = expected.find(name);
    if (it == expected.end()) throw DataError("unexpected parameter '" + name + "' in checkpoint");
    const auto rank = detail::get_u32(in, "rank");
    if (rank != 2) throw DataError("parameter '" + name + "' has rank " + std::to_string(rank));
    const auto rows = detail::get_u32(in, "dims");
    const auto cols = detail::get_u32(in, "dims");
    if (rows != it->second.rows || cols != it->second.cols) {
      throw DataError("parameter '" + name + "' is " + std::to_string(rows) + "x" + std::to_string(cols) +
                      ", hyperparameters imply " + std::to_string(it->second.rows) + "x" +
                      std::to_string(it->second.cols));
    }
    Matrix<T> m(rows, cols);
    for (auto& v : m.values()) v = static_cast<T>(std::bit_cast<float>(detail::get_u32(in, "payload")));
    params.tensors.emplace(name, std::move(m));
  }
  if (params.tensors.size() != expected.size()) throw DataError("checkpoint repeats a parameter name");
  return params;
}

}  // namespace fcsum
