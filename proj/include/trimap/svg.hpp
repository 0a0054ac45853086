#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>

#include "trimap/data_io.hpp"
#include "trimap/types.hpp"

namespace trimap {

// 20-color categorical cycle; classes get colors in ascending label order.
inline constexpr std::array<std::string_view, 20> kPalette = {
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
    "#aec7e8", "#ffbb78", "#98df8a", "#ff9896", "#c5b0d5", "#c49c94", "#f7b6d2", "#c7c7c7", "#dbdb8d", "#9edae5"};
inline constexpr std::string_view kUnlabeledColor = "#808080";
inline constexpr double kPointRadius = 1.5;
inline constexpr double kPlotPadding = 0.05;

namespace detail {

inline void append_fixed(std::string& out, double v) {
  std::array<char, 32> buf{};
  if (v == 0.0) v = 0.0;  // no "-0.00"
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::fixed, 2);
  out.append(buf.data(), ptr);
}

}  // namespace detail

// Standalone SVG 1.1 scatter of a 2-D embedding: one circle per point, uniform scaling
// into the viewport with 5% padding, y axis pointing up.
inline std::string scatter_svg(const Embedding& y, const LabelVector* labels, int width = 800, int height = 800) {
  if (y.d() != 2) throw ArgumentError("render_scatter needs a 2-D embedding, got d = " + std::to_string(y.d()));
  if (labels != nullptr && static_cast<Index>(labels->size()) != y.n()) throw ArgumentError("render_scatter: label count mismatch");
  if (width < 1 || height < 1) throw ArgumentError("render_scatter: width and height must be positive");

  std::map<std::int64_t, std::string_view> colors;
  if (labels != nullptr) {
    for (auto l : *labels) colors.emplace(l, kUnlabeledColor);
    std::size_t rank = 0;
    for (auto& [label, color] : colors) color = kPalette[rank++ % kPalette.size()];
  }

  double min_x = 0.0, max_x = 0.0, min_y = 0.0, max_y = 0.0;
  if (y.n() > 0) {
    min_x = y.values().col(0).minCoeff();
    max_x = y.values().col(0).maxCoeff();
    min_y = y.values().col(1).minCoeff();
    max_y = y.values().col(1).maxCoeff();
  }
  const double inner_w = width * (1.0 - 2.0 * kPlotPadding);
  const double inner_h = height * (1.0 - 2.0 * kPlotPadding);
  const double span_x = max_x - min_x;
  const double span_y = max_y - min_y;
  double scale = std::min(span_x > 0.0 ? inner_w / span_x : 1e300, span_y > 0.0 ? inner_h / span_y : 1e300);
  if (scale == 1e300) scale = 1.0;
  const double cx = 0.5 * (min_x + max_x);
  const double cy = 0.5 * (min_y + max_y);

  std::string out;
  out.reserve(static_cast<std::size_t>(y.n()) * 64 + 512);
  const std::string w = std::to_string(width);
  const std::string h = std::to_string(height);
  out += "<?xml version=\"1.0\" encoding=\"UTF-8\" standalone=\"no\"?>\n";
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" + w + "\" height=\"" + h +
         "\" viewBox=\"0 0 " + w + " " + h + "\">\n";
  out += "<rect x=\"0\" y=\"0\" width=\"" + w + "\" height=\"" + h + "\" fill=\"#ffffff\"/>\n";
  for (Index i = 0; i < y.n(); ++i) {
    const double px = 0.5 * width + (y(i, 0) - cx) * scale;
    const double py = 0.5 * height - (y(i, 1) - cy) * scale;
    const std::string_view fill = labels != nullptr ? colors.at((*labels)[static_cast<std::size_t>(i)]) : kUnlabeledColor;
    out += "<circle cx=\"";
    detail::append_fixed(out, px);
    out += "\" cy=\"";
    detail::append_fixed(out, py);
    out += "\" r=\"1.5\" fill=\"";
    out += fill;
    out += "\"/>\n";
  }
  out += "</svg>\n";
  return out;
}

inline void render_scatter(const Embedding& y, const LabelVector* labels, const std::filesystem::path& path, int width = 800,
                           int height = 800) {
  detail::write_file(path, scatter_svg(y, labels, width, height));
}

}  // namespace trimap
