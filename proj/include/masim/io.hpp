#pragma once

#include <json.hpp>
#include <string>
#include <vector>

#include "masim/limits.hpp"
#include "masim/ruin.hpp"
#include "masim/segments.hpp"

namespace masim {

/// Deterministic numeric formatting shared by every writer ("%.12g").
std::string format_double(double v);

/// Minimal CSV writer; rows are rendered with format_double so repeated
/// runs are byte-identical.
class CsvWriter {
 public:
  explicit CsvWriter(const std::string& path);
  ~CsvWriter();
  void header(const std::vector<std::string>& cols);
  void row(const std::vector<std::string>& cells);
  void row_numeric(const std::vector<double>& cells);

 private:
  struct Impl;
  Impl* impl_;
};

// JSON mirrors of the result records.
nlohmann::json to_json(const RuinEstimate& e);
nlohmann::json to_json(const RuinAsymptote& a);
nlohmann::json to_json(const RateBounds& b);
nlohmann::json to_json(const GrowthRow& r);
nlohmann::json to_json(const DecayFit& f);

/// Hand-rolled SVG line plot: data series plus optional horizontal
/// reference lines (theory values).
struct PlotSeries {
  std::vector<std::pair<double, double>> points;
  std::string label;
  std::string color = "#1f77b4";
  bool dashed = false;
};
struct PlotRef {
  double y = 0.0;
  std::string label;
  std::string color = "#d62728";
};
void write_svg_plot(const std::string& path, const std::string& title,
                    const std::string& xlabel, const std::string& ylabel,
                    const std::vector<PlotSeries>& series,
                    const std::vector<PlotRef>& refs = {});

/// Raw-path dump: 8-byte magic "MAPATH1\0", then little-endian u64 fields
/// {m, L, seed} followed by m float64 path values.
void write_path_dump(const Path& p, const std::string& file);
struct PathDump {
  uint64_t m = 0;
  uint64_t L = 0;
  uint64_t seed = 0;
  std::vector<double> x;
};
PathDump read_path_dump(const std::string& file);

}  // namespace masim
