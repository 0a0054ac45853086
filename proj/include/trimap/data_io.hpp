#pragma once

#include <array>
#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

#include "trimap/rng.hpp"
#include "trimap/types.hpp"

namespace trimap {

enum class MatrixFormat { csv, raw_f32 };

namespace detail {

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open file '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) throw InputError("error reading file '" + path.string() + "'");
  return std::move(buffer).str();
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

// Splits text into lines; a single trailing newline does not produce an empty last line.
inline std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    const std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) {
      lines.push_back(text.substr(start));
      break;
    }
    lines.push_back(text.substr(start, end - start));
    start = end + 1;
  }
  return lines;
}

template <typename T>
bool parse_number(std::string_view cell, T& out) {
  cell = trim(cell);
  if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
  if (cell.empty()) return false;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), out);
  return ec == std::errc() && ptr == cell.data() + cell.size();
}

inline std::string position(Index line, Index column) {
  return "line " + std::to_string(line) + ", column " + std::to_string(column);
}

inline DataMatrix parse_csv(std::string_view text) {
  const auto lines = split_lines(text);
  std::vector<double> values;
  Index cols = -1;
  Index rows = 0;
  for (std::size_t li = 0; li < lines.size(); ++li) {
    const Index line_no = static_cast<Index>(li) + 1;
    const std::string_view line = trim(lines[li]);
    Index count = 0;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      const std::string_view cell =
          line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
      double v = 0.0;
      if (!parse_number(cell, v)) {
        throw InputError("non-numeric cell at " + position(line_no, count + 1), line_no, count + 1);
      }
      if (!std::isfinite(v)) {
        throw InputError("non-finite value at " + position(line_no, count + 1), line_no, count + 1);
      }
      values.push_back(v);
      ++count;
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (cols < 0) {
      cols = count;
    } else if (count != cols) {
      throw InputError("ragged row at line " + std::to_string(line_no), line_no, 0);
    }
    ++rows;
  }
  if (rows == 0) throw InputError("empty matrix file");
  RowMatrix m(rows, cols);
  std::copy(values.begin(), values.end(), m.data());
  return DataMatrix(std::move(m));
}

inline std::uint32_t read_le_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

inline void write_le_u32(std::string& out, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xffu));
}

inline DataMatrix parse_raw_f32(std::string_view bytes) {
  if (bytes.size() < 8) throw InputError("raw-f32 header truncated: expected 8 bytes, got " + std::to_string(bytes.size()));
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::uint64_t n = read_le_u32(p);
  const std::uint64_t m = read_le_u32(p + 4);
  const std::uint64_t expected = 8 + 4 * n * m;
  if (bytes.size() != expected) {
    throw InputError("raw-f32 header/payload size mismatch: header (" + std::to_string(n) + ", " + std::to_string(m) +
                     ") needs " + std::to_string(expected) + " bytes, file has " + std::to_string(bytes.size()));
  }
  if (n == 0 || m == 0) throw InputError("raw-f32 header declares an empty matrix");
  RowMatrix values(static_cast<Index>(n), static_cast<Index>(m));
  for (std::uint64_t idx = 0; idx < n * m; ++idx) {
    const float f = std::bit_cast<float>(read_le_u32(p + 8 + 4 * idx));
    if (!std::isfinite(f)) {
      const auto row = static_cast<Index>(idx / m) + 1;
      const auto col = static_cast<Index>(idx % m) + 1;
      throw InputError("non-finite value at row " + std::to_string(row) + ", column " + std::to_string(col), row, col);
    }
    values.data()[idx] = f;
  }
  return DataMatrix(std::move(values));
}

inline void append_shortest(std::string& out, double v) {
  std::array<char, 32> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  out.append(buf.data(), ptr);
}

inline void write_file(const std::filesystem::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  out.flush();
  if (!out) throw Error("failed writing '" + path.string() + "'");
}

}  // namespace detail

inline MatrixFormat parse_matrix_format(std::string_view name) {
  if (name == "csv") return MatrixFormat::csv;
  if (name == "raw-f32") return MatrixFormat::raw_f32;
  throw ArgumentError("unknown matrix format '" + std::string(name) + "'");
}

// Loads a point-per-row matrix. CSV: comma-separated, no header. raw-f32: two little-endian
// uint32 (n, m) followed by n*m little-endian float32 values in row order.
inline DataMatrix load_matrix(const std::filesystem::path& path, MatrixFormat format) {
  const std::string content = detail::read_file(path);
  return format == MatrixFormat::csv ? detail::parse_csv(content) : detail::parse_raw_f32(content);
}

inline DataMatrix parse_matrix_csv(std::string_view text) { return detail::parse_csv(text); }

inline LabelVector parse_labels(std::string_view text) {
  LabelVector labels;
  const auto lines = detail::split_lines(text);
  for (std::size_t li = 0; li < lines.size(); ++li) {
    std::int64_t v = 0;
    if (!detail::parse_number(lines[li], v)) {
      const Index line_no = static_cast<Index>(li) + 1;
      throw InputError("non-integer label at line " + std::to_string(line_no), line_no, 1);
    }
    labels.push_back(v);
  }
  return labels;
}

// One integer per line. Length agreement with the data is the caller's check.
inline LabelVector load_labels(const std::filesystem::path& path) { return parse_labels(detail::read_file(path)); }

inline void save_raw_f32(const DataMatrix& x, const std::filesystem::path& path) {
  std::string out;
  out.reserve(8 + 4 * static_cast<std::size_t>(x.n() * x.m()));
  detail::write_le_u32(out, static_cast<std::uint32_t>(x.n()));
  detail::write_le_u32(out, static_cast<std::uint32_t>(x.m()));
  for (Index i = 0; i < x.n(); ++i) {
    for (Index j = 0; j < x.m(); ++j) detail::write_le_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(x(i, j))));
  }
  detail::write_file(path, out);
}

// CSV text for an embedding, shortest round-trippable decimals, optional trailing label column.
inline std::string format_embedding_csv(const Embedding& y, const LabelVector* labels = nullptr) {
  if (labels != nullptr && static_cast<Index>(labels->size()) != y.n()) {
    throw ArgumentError("label count " + std::to_string(labels->size()) + " does not match embedding rows " +
                        std::to_string(y.n()));
  }
  std::string out;
  out.reserve(static_cast<std::size_t>(y.n() * (y.d() + 1) * 12));
  for (Index i = 0; i < y.n(); ++i) {
    for (Index j = 0; j < y.d(); ++j) {
      if (j > 0) out.push_back(',');
      detail::append_shortest(out, y(i, j));
    }
    if (labels != nullptr) {
      out.push_back(',');
      out += std::to_string((*labels)[static_cast<std::size_t>(i)]);
    }
    out.push_back('\n');
  }
  return out;
}

inline void write_embedding(const Embedding& y, const LabelVector* labels, const std::filesystem::path& path) {
  detail::write_file(path, format_embedding_csv(y, labels));
}

struct LabeledData {
  DataMatrix data;
  LabelVector labels;
};

// Uniform samples from the 3-D S-shaped manifold: (sin t, u, sign(t)(cos t - 1)) with
// t ~ U[-3pi/2, 3pi/2], u ~ U[0, 2]. Labels are 10 equal-width bins of t.
inline LabeledData make_s_curve(Index n, std::uint64_t seed) {
  if (n < 1) throw ArgumentError("make_s_curve needs n >= 1");
  Rng rng = substream(seed, 0, stream_tag::kSynthetic);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  constexpr double span = 3.0 * std::numbers::pi;
  RowMatrix values(n, 3);
  LabelVector labels(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    const double frac = unit(rng);
    const double t = span * (frac - 0.5);
    const double u = 2.0 * unit(rng);
    const double sign = t > 0.0 ? 1.0 : (t < 0.0 ? -1.0 : 0.0);
    values(i, 0) = std::sin(t);
    values(i, 1) = u;
    values(i, 2) = sign * (std::cos(t) - 1.0);
    labels[static_cast<std::size_t>(i)] = std::min<std::int64_t>(9, static_cast<std::int64_t>(frac * 10.0));
  }
  return {DataMatrix(std::move(values)), std::move(labels)};
}

// Isotropic Gaussian clusters: centers ~ N(0, center_spread^2 I), points ~ N(center, I).
// clusters == 1 gives a single standard Gaussian blob.
inline LabeledData make_gaussian_blobs(Index n, Index dims, Index clusters, double center_spread, std::uint64_t seed) {
  if (n < 1 || dims < 1 || clusters < 1) throw ArgumentError("make_gaussian_blobs needs n, dims, clusters >= 1");
  Rng rng = substream(seed, 0, stream_tag::kSynthetic);
  std::normal_distribution<double> normal(0.0, 1.0);
  RowMatrix centers(clusters, dims);
  for (Index c = 0; c < clusters; ++c) {
    for (Index j = 0; j < dims; ++j) centers(c, j) = clusters == 1 ? 0.0 : center_spread * normal(rng);
  }
  RowMatrix values(n, dims);
  LabelVector labels(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    const Index c = i % clusters;
    labels[static_cast<std::size_t>(i)] = c;
    for (Index j = 0; j < dims; ++j) values(i, j) = centers(c, j) + normal(rng);
  }
  return {DataMatrix(std::move(values)), std::move(labels)};
}

}  // namespace trimap
