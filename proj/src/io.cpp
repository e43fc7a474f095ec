#include "masim/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

namespace masim {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (v == kInf) return "inf";
  if (v == -kInf) return "-inf";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

struct CsvWriter::Impl {
  std::ofstream out;
};

CsvWriter::CsvWriter(const std::string& path) : impl_(new Impl) {
  impl_->out.open(path, std::ios::binary);
  if (!impl_->out) throw ConfigError("cannot open '" + path + "' for writing");
}

CsvWriter::~CsvWriter() { delete impl_; }

void CsvWriter::header(const std::vector<std::string>& cols) {
  row(cols);
}

void CsvWriter::row(const std::vector<std::string>& cells) {
  for (size_t i = 0; i < cells.size(); ++i) {
    if (i) impl_->out << ',';
    impl_->out << cells[i];
  }
  impl_->out << '\n';
}

void CsvWriter::row_numeric(const std::vector<double>& cells) {
  std::vector<std::string> s;
  s.reserve(cells.size());
  for (double v : cells) s.push_back(format_double(v));
  row(s);
}

nlohmann::json to_json(const RuinEstimate& e) {
  nlohmann::json j;
  j["u"] = e.u;
  j["rho_hat"] = e.rho_hat;
  j["se"] = e.se;
  j["method"] = e.method == RuinMethod::Plain ? "plain" : "tilted";
  j["horizon"] = e.horizon;
  j["tail_bound"] = e.tail_bound;
  j["tail_certified"] = e.tail_certified;
  j["hit_time_q25"] = e.hit_time_quantiles[0];
  j["hit_time_q50"] = e.hit_time_quantiles[1];
  j["hit_time_q75"] = e.hit_time_quantiles[2];
  j["seed"] = e.seed;
  j["n_paths"] = e.n_paths;
  j["n_hits"] = e.n_hits;
  if (!e.notes.empty()) j["notes"] = e.notes;
  return j;
}

namespace {
nlohmann::json num_or_string(double v) {
  if (std::isfinite(v)) return v;
  return format_double(v);
}
}  // namespace

nlohmann::json to_json(const RuinAsymptote& a) {
  nlohmann::json j;
  j["lower"] = num_or_string(a.lower);
  j["upper"] = num_or_string(a.upper);
  if (a.exact) j["exact"] = *a.exact;
  j["constants"] = a.constants;
  j["empty_feasible"] = a.empty_feasible;
  if (!a.notes.empty()) j["notes"] = a.notes;
  return j;
}

nlohmann::json to_json(const RateBounds& b) {
  nlohmann::json j;
  j["lower"] = num_or_string(b.lower);
  j["upper"] = num_or_string(b.upper);
  j["regime"] = regime_name(b.tag);
  j["lambda_star"] = num_or_string(b.lambda_star);
  j["theta_threshold"] = b.theta_threshold;
  if (!b.notes.empty()) j["notes"] = b.notes;
  return j;
}

nlohmann::json to_json(const GrowthRow& r) {
  nlohmann::json j;
  j["m"] = r.m;
  j["mean_stat"] = r.mean_stat;
  j["sd_stat"] = r.sd_stat;
  j["n_paths"] = r.n_paths;
  return j;
}

nlohmann::json to_json(const DecayFit& f) {
  nlohmann::json j;
  j["slope"] = f.slope;
  j["intercept"] = f.intercept;
  j["r2"] = f.r2;
  j["theory_lower"] = num_or_string(f.theory_lower);
  j["theory_upper"] = num_or_string(f.theory_upper);
  j["inside"] = f.inside;
  // Distance to the bracket relative to its magnitude: the asymptotic
  // bracket is often a single point, so the raw inside flag alone is a
  // harsh reading of a finite-sample slope.
  double gap = 0.0;
  if (!f.inside && std::isfinite(f.theory_lower)) {
    double lo = std::min(std::abs(f.slope - f.theory_lower),
                         std::abs(f.slope - f.theory_upper));
    gap = lo / std::max(std::abs(f.theory_lower), std::abs(f.theory_upper));
  }
  j["rel_gap_to_bracket"] = gap;
  j["n_used"] = f.n_used;
  return j;
}

namespace {

struct Extent {
  double xlo = kInf, xhi = -kInf, ylo = kInf, yhi = -kInf;
  void add(double x, double y) {
    xlo = std::min(xlo, x);
    xhi = std::max(xhi, x);
    ylo = std::min(ylo, y);
    yhi = std::max(yhi, y);
  }
};

}  // namespace

void write_svg_plot(const std::string& path, const std::string& title,
                    const std::string& xlabel, const std::string& ylabel,
                    const std::vector<PlotSeries>& series,
                    const std::vector<PlotRef>& refs) {
  const double W = 720, H = 480;
  const double ml = 80, mr = 30, mt = 44, mb = 58;
  Extent e;
  for (const auto& s : series)
    for (auto [x, y] : s.points) e.add(x, y);
  for (const auto& r : refs) e.add(e.xlo, r.y);
  if (!(e.xhi > e.xlo)) {
    e.xlo -= 1;
    e.xhi += 1;
  }
  if (!(e.yhi > e.ylo)) {
    e.ylo -= 1;
    e.yhi += 1;
  }
  double padx = 0.05 * (e.xhi - e.xlo), pady = 0.08 * (e.yhi - e.ylo);
  e.xlo -= padx;
  e.xhi += padx;
  e.ylo -= pady;
  e.yhi += pady;
  auto X = [&](double x) {
    return ml + (x - e.xlo) / (e.xhi - e.xlo) * (W - ml - mr);
  };
  auto Y = [&](double y) {
    return H - mb - (y - e.ylo) / (e.yhi - e.ylo) * (H - mt - mb);
  };

  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open '" + path + "' for writing");
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W
      << "\" height=\"" << H << "\" viewBox=\"0 0 " << W << " " << H
      << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" "
      << "font-family=\"sans-serif\" font-size=\"16\">" << title
      << "</text>\n";

  // Axes and ticks.
  out << "<line x1=\"" << ml << "\" y1=\"" << H - mb << "\" x2=\"" << W - mr
      << "\" y2=\"" << H - mb << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml
      << "\" y2=\"" << H - mb << "\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 5; ++k) {
    double xv = e.xlo + (e.xhi - e.xlo) * k / 5.0;
    double yv = e.ylo + (e.yhi - e.ylo) * k / 5.0;
    out << "<line x1=\"" << X(xv) << "\" y1=\"" << H - mb << "\" x2=\""
        << X(xv) << "\" y2=\"" << H - mb + 5 << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << X(xv) << "\" y=\"" << H - mb + 20
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"11\">"
        << format_double(xv) << "</text>\n";
    out << "<line x1=\"" << ml - 5 << "\" y1=\"" << Y(yv) << "\" x2=\"" << ml
        << "\" y2=\"" << Y(yv) << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << ml - 8 << "\" y=\"" << Y(yv) + 4
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
           "font-size=\"11\">"
        << format_double(yv) << "</text>\n";
  }
  out << "<text x=\"" << (ml + W - mr) / 2 << "\" y=\"" << H - 16
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"13\">"
      << xlabel << "</text>\n";
  out << "<text x=\"20\" y=\"" << (mt + H - mb) / 2
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"13\" transform=\"rotate(-90 20 "
      << (mt + H - mb) / 2 << ")\">" << ylabel << "</text>\n";

  for (const auto& r : refs) {
    out << "<line x1=\"" << ml << "\" y1=\"" << Y(r.y) << "\" x2=\""
        << W - mr << "\" y2=\"" << Y(r.y) << "\" stroke=\"" << r.color
        << "\" stroke-dasharray=\"6,4\"/>\n";
    out << "<text x=\"" << W - mr - 4 << "\" y=\"" << Y(r.y) - 4
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
           "font-size=\"11\" fill=\""
        << r.color << "\">" << r.label << "</text>\n";
  }

  double ly = mt + 10;
  for (const auto& s : series) {
    out << "<polyline fill=\"none\" stroke=\"" << s.color << "\""
        << (s.dashed ? " stroke-dasharray=\"4,3\"" : "") << " points=\"";
    for (auto [x, y] : s.points) out << X(x) << "," << Y(y) << " ";
    out << "\"/>\n";
    for (auto [x, y] : s.points)
      out << "<circle cx=\"" << X(x) << "\" cy=\"" << Y(y)
          << "\" r=\"2.5\" fill=\"" << s.color << "\"/>\n";
    if (!s.label.empty()) {
      out << "<text x=\"" << W - mr - 4 << "\" y=\"" << ly
          << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
             "font-size=\"12\" fill=\""
          << s.color << "\">" << s.label << "</text>\n";
      ly += 16;
    }
  }
  out << "</svg>\n";
}

namespace {
void put_u64(std::ofstream& out, uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}
uint64_t get_u64(std::ifstream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(b[i]) << (8 * i);
  return v;
}
}  // namespace

void write_path_dump(const Path& p, const std::string& file) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw ConfigError("cannot open '" + file + "' for writing");
  const char magic[8] = {'M', 'A', 'P', 'A', 'T', 'H', '1', '\0'};
  out.write(magic, 8);
  put_u64(out, static_cast<uint64_t>(p.x.size()));
  put_u64(out, static_cast<uint64_t>(p.truncation));
  put_u64(out, p.seed);
  static_assert(sizeof(double) == 8);
  for (double v : p.x) {
    uint64_t bits;
    std::memcpy(&bits, &v, 8);
    put_u64(out, bits);
  }
}

PathDump read_path_dump(const std::string& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw ConfigError("cannot open '" + file + "'");
  char magic[8];
  in.read(magic, 8);
  if (std::memcmp(magic, "MAPATH1\0", 8) != 0)
    throw ConfigError("'" + file + "' is not a path dump");
  PathDump d;
  d.m = get_u64(in);
  d.L = get_u64(in);
  d.seed = get_u64(in);
  d.x.resize(d.m);
  for (uint64_t i = 0; i < d.m; ++i) {
    uint64_t bits = get_u64(in);
    double v;
    std::memcpy(&v, &bits, 8);
    d.x[i] = v;
  }
  return d;
}

}  // namespace masim
