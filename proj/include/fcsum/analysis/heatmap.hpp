#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "fcsum/error.hpp"
#include "fcsum/inference/decode.hpp"

namespace fcsum {

struct HeatmapOptions {
  bool pgm = false;
  std::size_t cell_pixels = 8;
};

// The CSV is laid out with one row per file-context function and one column per
// summary position, so every column sums to one.
template <class T>
Matrix<double> heatmap_matrix(const AttentionRecord<T>& attention) {
  if (!attention.sattn) throw DataError("model has no file-context attention to export");
  const auto& s = *attention.sattn;  // comlen x n
  Matrix<double> out(s.cols(), s.rows());
  for (std::size_t pos = 0; pos < s.rows(); ++pos)
    for (std::size_t fn = 0; fn < s.cols(); ++fn) out(fn, pos) = static_cast<double>(s(pos, fn));
  return out;
}

inline void write_heatmap_csv(const std::filesystem::path& path, const Matrix<double>& h) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write heatmap " + path.string());
  out << "function";
  for (std::size_t c = 0; c < h.cols(); ++c) out << ",pos_" << c + 1;
  out << '\n';
  char buf[40];
  for (std::size_t r = 0; r < h.rows(); ++r) {
    out << r + 1;
    for (std::size_t c = 0; c < h.cols(); ++c) {
      std::snprintf(buf, sizeof buf, ",%.9g", h(r, c));
      out << buf;
    }
    out << '\n';
  }
  if (!out) throw DataError("failed writing heatmap " + path.string());
}

inline Matrix<double> read_heatmap_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read heatmap " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path.string() + ": empty heatmap");
  const auto cols = static_cast<std::size_t>(std::count(line.begin(), line.end(), ','));
  std::vector<double> values;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    row.imbue(std::locale::classic());
    std::string cell;
    std::getline(row, cell, ',');  // function index
    std::size_t got = 0;
    while (std::getline(row, cell, ',')) {
      try {
        values.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw ParseError(path.string() + ":" + std::to_string(rows + 2) + ": bad value '" + cell + "'");
      }
      ++got;
    }
    if (got != cols) throw ParseError(path.string() + ":" + std::to_string(rows + 2) + ": wrong column count");
    ++rows;
  }
  return Matrix<double>(rows, cols, std::move(values));
}

// Greyscale P2 image; the largest weight is white.
inline void write_heatmap_pgm(const std::filesystem::path& path, const Matrix<double>& h, std::size_t cell) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write heatmap image " + path.string());
  const double peak = h.values().empty() ? 0.0 : *std::max_element(h.values().begin(), h.values().end());
  const std::size_t width = h.cols() * cell;
  const std::size_t height = h.rows() * cell;
  out << "P2\n" << width << ' ' << height << "\n255\n";
  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t x = 0; x < width; ++x) {
      const double w = h(y / cell, x / cell);
      const long px = peak > 0 ? std::lround(255.0 * w / peak) : 0;
      out << px << (x + 1 == width ? '\n' : ' ');
    }
  }
}

// Writes the file-context attention captured just before decoding step `step`
// to `path` (CSV), plus `path` with a .pgm extension when requested.
template <class T>
Matrix<double> export_attention_heatmap(const AttentionRecord<T>& attention, std::size_t step,
                                        const std::filesystem::path& path, const HeatmapOptions& opts = {}) {
  const auto h = heatmap_matrix(attention);
  if (step >= h.cols()) {
    throw IndexError("step " + std::to_string(step) + " out of range for comlen " + std::to_string(h.cols()));
  }
  write_heatmap_csv(path, h);
  if (opts.pgm) {
    auto img = path;
    img.replace_extension(".pgm");
    write_heatmap_pgm(img, h, std::max<std::size_t>(1, opts.cell_pixels));
  }
  return h;
}

template <class T>
Matrix<double> export_attention_heatmap(const std::vector<DecodeStep<T>>& steps, std::size_t step,
                                        const std::filesystem::path& path, const HeatmapOptions& opts = {}) {
  if (step >= steps.size()) {
    throw IndexError("decoding step " + std::to_string(step) + " out of range (" + std::to_string(steps.size()) +
                     " steps)");
  }
  return export_attention_heatmap(steps[step].attention, step, path, opts);
}

}  // namespace fcsum
