#pragma once

#include <string>
#include <utility>
#include <vector>

namespace vjsim {

// Named point series for the SVG charts.
struct Series {
  std::string name;
  std::vector<std::pair<double, double>> points;
};

// Create `dir` (and parents) if needed.  Throws ConfigError if that fails.
void ensure_dir(const std::string& dir);

// Write `content` to `path`, replacing any previous file.
void write_text_file(const std::string& path, const std::string& content);

// CSV with a header row.  Cells are written as given; numeric cells should be
// produced with format_double so the decimal separator is always '.'.
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

// Self-contained SVG line chart, one polyline per series.
std::string svg_line_chart(const std::string& title, const std::string& x_label,
                           const std::string& y_label, const std::vector<Series>& series);

}  // namespace vjsim
