#include "outputs.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>

#include "vjsim/core.hpp"

namespace vjsim {

namespace {

// %g keeps tick labels short; full precision belongs in the CSVs, not here.
std::string short_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return std::string(buf);
}

const char* kPalette[] = {"#1f6fb2", "#c94e32", "#3a8a4d", "#8452a0", "#b0852a"};

}  // namespace

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory '" + dir + "': " + ec.message());
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot open '" + path + "' for writing");
  out << content;
  if (!out) throw ConfigError("write to '" + path + "' failed");
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
  std::string text;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) text += ',';
    text += header[i];
  }
  text += '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) text += ',';
      text += row[i];
    }
    text += '\n';
  }
  write_text_file(path, text);
}

std::string svg_line_chart(const std::string& title, const std::string& x_label,
                           const std::string& y_label, const std::vector<Series>& series) {
  const double width = 720, height = 440;
  const double ml = 64, mr = 20, mt = 36, mb = 48;  // margins
  const double pw = width - ml - mr, ph = height - mt - mb;

  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  for (const Series& s : series)
    for (const auto& [x, y] : s.points) {
      xmin = std::min(xmin, x);
      xmax = std::max(xmax, x);
      ymin = std::min(ymin, y);
      ymax = std::max(ymax, y);
    }
  if (!(xmin <= xmax)) {  // nothing to plot
    xmin = 0;
    xmax = 1;
    ymin = 0;
    ymax = 1;
  }
  if (xmax == xmin) xmax = xmin + 1;
  if (ymax == ymin) ymax = ymin + (ymin == 0 ? 1 : std::abs(ymin) * 0.1);
  // a little headroom so curves do not sit on the frame
  const double ypad = (ymax - ymin) * 0.05;
  ymin -= ypad;
  ymax += ypad;

  auto sx = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * pw; };
  auto sy = [&](double y) { return mt + ph - (y - ymin) / (ymax - ymin) * ph; };

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + short_num(width) +
         "\" height=\"" + short_num(height) + "\" viewBox=\"0 0 " + short_num(width) + " " +
         short_num(height) + "\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg += "<text x=\"" + short_num(width / 2) + "\" y=\"22\" text-anchor=\"middle\" " +
         "font-family=\"sans-serif\" font-size=\"15\">" + title + "</text>\n";

  // frame and ticks
  svg += "<rect x=\"" + short_num(ml) + "\" y=\"" + short_num(mt) + "\" width=\"" +
         short_num(pw) + "\" height=\"" + short_num(ph) +
         "\" fill=\"none\" stroke=\"#444\" stroke-width=\"1\"/>\n";
  const int nticks = 5;
  for (int i = 0; i <= nticks; ++i) {
    const double fx = xmin + (xmax - xmin) * i / nticks;
    const double fy = ymin + (ymax - ymin) * i / nticks;
    const double px = sx(fx), py = sy(fy);
    svg += "<line x1=\"" + short_num(px) + "\" y1=\"" + short_num(mt + ph) + "\" x2=\"" +
           short_num(px) + "\" y2=\"" + short_num(mt + ph + 5) + "\" stroke=\"#444\"/>\n";
    svg += "<text x=\"" + short_num(px) + "\" y=\"" + short_num(mt + ph + 18) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" +
           short_num(fx) + "</text>\n";
    svg += "<line x1=\"" + short_num(ml - 5) + "\" y1=\"" + short_num(py) + "\" x2=\"" +
           short_num(ml) + "\" y2=\"" + short_num(py) + "\" stroke=\"#444\"/>\n";
    svg += "<text x=\"" + short_num(ml - 8) + "\" y=\"" + short_num(py + 4) +
           "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" + short_num(fy) +
           "</text>\n";
  }
  svg += "<text x=\"" + short_num(ml + pw / 2) + "\" y=\"" + short_num(height - 10) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" + x_label +
         "</text>\n";
  svg += "<text x=\"16\" y=\"" + short_num(mt + ph / 2) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" " +
         "transform=\"rotate(-90 16 " + short_num(mt + ph / 2) + ")\">" + y_label + "</text>\n";

  for (std::size_t si = 0; si < series.size(); ++si) {
    const char* color = kPalette[si % (sizeof(kPalette) / sizeof(kPalette[0]))];
    std::string pts;
    for (const auto& [x, y] : series[si].points) {
      if (!pts.empty()) pts += ' ';
      pts += short_num(sx(x)) + "," + short_num(sy(y));
    }
    svg += "<polyline fill=\"none\" stroke=\"" + std::string(color) +
           "\" stroke-width=\"1.5\" points=\"" + pts + "\"/>\n";
    if (series.size() > 1) {
      const double lx = ml + pw - 150, ly = mt + 16 + 16 * static_cast<double>(si);
      svg += "<line x1=\"" + short_num(lx) + "\" y1=\"" + short_num(ly - 4) + "\" x2=\"" +
             short_num(lx + 22) + "\" y2=\"" + short_num(ly - 4) + "\" stroke=\"" + color +
             "\" stroke-width=\"1.5\"/>\n";
      svg += "<text x=\"" + short_num(lx + 28) + "\" y=\"" + short_num(ly) +
             "\" font-family=\"sans-serif\" font-size=\"11\">" + series[si].name + "</text>\n";
    }
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace vjsim
