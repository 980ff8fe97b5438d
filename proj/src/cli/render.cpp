#include <algorithm>
#include <cmath>
#include <cstdio>

#include "cgsmask/cli.hpp"
#include "cgsmask/modeladapter.hpp"

namespace cgsmask::cli {

namespace {

constexpr int kCell = 14;
constexpr int kTop = 8;
constexpr int kBottom = 26;
constexpr int kRight = 8;

std::string ramp(double v) {
  // 0 -> red, 1 -> green
  static constexpr int kRed[3] = {215, 48, 39};
  static constexpr int kGreen[3] = {26, 152, 80};
  const double w = std::clamp(v, 0.0, 1.0);
  char buf[8];
  int rgb[3];
  for (int k = 0; k < 3; ++k) rgb[k] = static_cast<int>(std::lround(kRed[k] + w * (kGreen[k] - kRed[k])));
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", rgb[0], rgb[1], rgb[2]);
  return buf;
}

std::string escape_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&':
        out += "&amp;";
        break;
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      case '"':
        out += "&quot;";
        break;
      default:
        out += c;
    }
  }
  return out;
}

}  // namespace

std::string render_heatmap_svg(const Matrix& mask, const std::vector<std::string>& labels) {
  const Index D = mask.rows();
  const Index T = mask.cols();
  std::vector<std::string> names = labels;
  if (names.empty()) {
    for (Index d = 0; d < D; ++d) names.push_back("f" + std::to_string(d + 1));
  }
  if (static_cast<Index>(names.size()) != D) throw DimensionError("label count does not match mask rows");

  std::size_t widest = 1;
  for (const auto& n : names) widest = std::max(widest, n.size());
  const int left = static_cast<int>(widest) * 7 + 10;
  const int width = left + static_cast<int>(T) * kCell + kRight;
  const int height = kTop + static_cast<int>(D) * kCell + kBottom;
  const Index tick = T <= 20 ? 1 : (T <= 100 ? 5 : 10);

  std::string svg;
  svg += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width) + "\" height=\"" +
         std::to_string(height) + "\" viewBox=\"0 0 " + std::to_string(width) + " " + std::to_string(height) +
         "\" font-family=\"monospace\" font-size=\"10\">\n";
  svg += "<rect x=\"0\" y=\"0\" width=\"" + std::to_string(width) + "\" height=\"" + std::to_string(height) +
         "\" fill=\"#ffffff\"/>\n";

  for (Index d = 0; d < D; ++d) {
    const int y = kTop + static_cast<int>(d) * kCell;
    svg += "<text x=\"" + std::to_string(left - 4) + "\" y=\"" + std::to_string(y + kCell - 3) +
           "\" text-anchor=\"end\">" + escape_xml(names[static_cast<std::size_t>(d)]) + "</text>\n";
    for (Index t = 0; t < T; ++t) {
      const int x = left + static_cast<int>(t) * kCell;
      svg += "<rect x=\"" + std::to_string(x) + "\" y=\"" + std::to_string(y) + "\" width=\"" + std::to_string(kCell) +
             "\" height=\"" + std::to_string(kCell) + "\" fill=\"" + ramp(mask(d, t)) + "\"/>\n";
    }
  }

  const int axis_y = kTop + static_cast<int>(D) * kCell;
  for (Index t = 0; t < T; ++t) {
    if (t != 0 && (t + 1) % tick != 0) continue;
    const int x = left + static_cast<int>(t) * kCell + kCell / 2;
    svg += "<line x1=\"" + std::to_string(x) + "\" y1=\"" + std::to_string(axis_y) + "\" x2=\"" + std::to_string(x) +
           "\" y2=\"" + std::to_string(axis_y + 4) + "\" stroke=\"#000000\"/>\n";
    svg += "<text x=\"" + std::to_string(x) + "\" y=\"" + std::to_string(axis_y + 15) +
           "\" text-anchor=\"middle\">" + std::to_string(t + 1) + "</text>\n";
  }
  svg += "</svg>\n";
  return svg;
}

void render_heatmap(const std::filesystem::path& mask_path, const std::filesystem::path& series_path,
                    const std::filesystem::path& out_path) {
  const AnyMask mask = read_mask_json(mask_path);
  const SeriesFile series = read_series_file(series_path);
  const Matrix values = mask_values(mask);
  if (values.rows() != series.series.features() || values.cols() != series.series.steps()) {
    throw DimensionError("mask and series differ in shape");
  }
  write_file_atomic(out_path, render_heatmap_svg(values, series.labels));
}

}  // namespace cgsmask::cli
