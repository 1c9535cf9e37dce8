#pragma once

#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

namespace penscore::cli {

// Grid spec "lin:a:b:k" or "log:a:b:k" (k points, both ends included), or a
// comma separated list of values.
std::vector<double> parse_grid(const std::string& spec);

// Shortest round-trip decimal form of a double.
std::string format_number(double v);

// RFC-4180 writer: fields quoted when needed, CRLF line endings.
class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& out) : out_(out) {}
  void row(const std::vector<std::string>& fields);
  static std::string quote(const std::string& field);

 private:
  std::ostream& out_;
};

struct Series {
  std::string label;
  std::vector<double> x, y;
  std::string color = "#1f77b4";
  bool dashed = false;
  double width = 1.5;
};

struct PlotSpec {
  std::string title, x_label, y_label;
  std::vector<Series> series;
  double width = 720, height = 480;
  bool legend = true;
};

// Line plot as a standalone SVG document. Non-finite points break the line.
std::string render_svg(const PlotSpec& spec);

// Fixed categorical palette.
const std::string& palette(std::size_t i);

std::string sha256_file(const std::string& path);

struct RunManifest {
  std::string command;
  std::vector<std::string> argv;
  nlohmann::ordered_json flags = nlohmann::ordered_json::object();
  std::vector<std::string> inputs;
  std::string seed;  // empty when the command uses no randomness
  nlohmann::ordered_json to_json() const;
};

void write_text_file(const std::string& path, const std::string& content);

}  // namespace penscore::cli
