// Command-line runner: config-driven experiments for moving-average
// rate functions, long strange segments and ruin probabilities.

#include <CLI11.hpp>
#include <json.hpp>
#include <omp.h>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>

#include "masim/acceptance.hpp"
#include "masim/io.hpp"
#include "masim/limits.hpp"
#include "masim/ratefn.hpp"
#include "masim/ruin.hpp"
#include "masim/segments.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace masim;

namespace {

json require(const json& j, const std::string& key, const std::string& where) {
  if (!j.contains(key))
    throw ConfigError("missing key '" + where + "." + key + "'");
  return j.at(key);
}

double num(const json& j, const std::string& key, const std::string& where) {
  json v = require(j, key, where);
  if (!v.is_number())
    throw ConfigError("key '" + where + "." + key + "' must be a number");
  return v.get<double>();
}

double num_or(const json& j, const std::string& key, double fallback) {
  return j.contains(key) ? j.at(key).get<double>() : fallback;
}

CoefficientFamily family_from_json(const json& j) {
  std::string kind = require(j, "kind", "family").get<std::string>();
  bool normalized = j.value("normalized", false);
  if (kind == "finite_lag") {
    std::vector<std::pair<long, double>> taps;
    for (const auto& t : require(j, "taps", "family"))
      taps.emplace_back(t.at(0).get<long>(), t.at(1).get<double>());
    return CoefficientFamily::finite_lag(taps, normalized);
  }
  if (kind == "geometric")
    return CoefficientFamily::geometric(num(j, "ratio", "family"),
                                        num_or(j, "scale", 1.0), normalized);
  if (kind == "power_summable")
    return CoefficientFamily::power_summable(num(j, "exponent", "family"),
                                             num_or(j, "scale", 1.0),
                                             normalized);
  if (kind == "balanced_power")
    return CoefficientFamily::balanced_power(
        num(j, "alpha", "family"), num(j, "p", "family"),
        num_or(j, "scale", 1.0), num_or(j, "log_power", 0.0));
  throw ConfigError("unknown family.kind '" + kind + "'");
}

InnovationModel innovations_from_json(const json& j) {
  std::string law = require(j, "law", "innovations").get<std::string>();
  InnovationModel m = InnovationModel::gaussian1(1.0);
  if (law == "gaussian") {
    if (j.contains("covariance")) {
      auto rows = j.at("covariance");
      int d = static_cast<int>(rows.size());
      Eigen::MatrixXd sig(d, d);
      for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b) sig(a, b) = rows.at(a).at(b).get<double>();
      m = InnovationModel::gaussian(sig);
    } else {
      m = InnovationModel::gaussian1(num_or(j, "variance", 1.0));
    }
  } else if (law == "centered_exponential") {
    m = InnovationModel::centered_exponential(num(j, "rate", "innovations"));
  } else if (law == "centered_gamma") {
    m = InnovationModel::centered_gamma(num(j, "shape", "innovations"),
                                        num(j, "rate", "innovations"));
  } else if (law == "bounded_uniform") {
    m = InnovationModel::bounded_uniform(num(j, "half_width", "innovations"));
  } else if (law == "two_sided_discrete") {
    std::vector<std::pair<double, double>> atoms;
    for (const auto& t : require(j, "atoms", "innovations"))
      atoms.emplace_back(t.at(0).get<double>(), t.at(1).get<double>());
    m = InnovationModel::two_sided_discrete(atoms);
  } else {
    throw ConfigError("unknown innovations.law '" + law + "'");
  }
  if (j.contains("heavy_profile")) {
    const json& h = j.at("heavy_profile");
    double beta = num(h, "beta", "innovations.heavy_profile");
    if (h.contains("a"))
      m = m.with_heavy_profile(
          HeavyProfile::isotropic(beta, h.at("a").get<double>()));
    else
      m = m.with_heavy_profile(HeavyProfile::one_dim(
          beta, num(h, "xi_plus", "innovations.heavy_profile"),
          num_or(h, "xi_minus",
                 num(h, "xi_plus", "innovations.heavy_profile"))));
  }
  return m;
}

TargetSet set_from_json(const json& j) {
  std::string type = j.value("type", "half_line");
  if (type == "half_line") return TargetSet::half_line(num(j, "level", "set"));
  if (type == "half_space") {
    auto vv = require(j, "v", "set");
    Eigen::VectorXd v(vv.size());
    for (size_t i = 0; i < vv.size(); ++i) v(i) = vv.at(i).get<double>();
    return TargetSet::half_space(v, num(j, "level", "set"));
  }
  throw ConfigError("unknown set.type '" + type + "'");
}

RegimeSpec regime_from_json(const json& j, const CoefficientFamily& fam) {
  std::string tag = require(j, "tag", "regime").get<std::string>();
  if (tag == "S1") return RegimeSpec::s1();
  if (tag == "S2") return RegimeSpec::s2();
  if (tag == "S3") return RegimeSpec::s3(num(j, "omega", "regime"));
  if (tag == "S4")
    return RegimeSpec::s4(num(j, "omega", "regime"), num(j, "beta", "regime"));
  if (tag == "R1") return RegimeSpec::r1(fam);
  if (tag == "R2") return RegimeSpec::r2(fam);
  if (tag == "R3") return RegimeSpec::r3(num(j, "omega", "regime"), fam);
  if (tag == "R4")
    return RegimeSpec::r4(num(j, "omega", "regime"), num(j, "beta", "regime"),
                          fam);
  throw ConfigError("unknown regime.tag '" + tag + "'");
}

struct Setup {
  json cfg;
  CoefficientFamily fam = CoefficientFamily::finite_lag({{0, 1.0}});
  InnovationModel model = InnovationModel::gaussian1(1.0);
  RegimeSpec reg = RegimeSpec::s1();
  TargetSet set = TargetSet::half_line(1.0);
  double mu = 0.5;
  uint64_t seed = 1;
  fs::path out_dir = "out";
  std::string format = "both";
  bool svg = false;
};

json merge(json base, const json& over) {
  for (auto it = over.begin(); it != over.end(); ++it) {
    if (it->is_object() && base.contains(it.key()) &&
        base.at(it.key()).is_object())
      base[it.key()] = merge(base.at(it.key()), *it);
    else
      base[it.key()] = *it;
  }
  return base;
}

Setup load_setup(const std::string& config_path, const std::string& out_dir,
                 uint64_t seed_override, const std::string& format,
                 bool svg) {
  Setup s;
  fs::path defaults = fs::path(MASIM_CONFIG_DIR) / "defaults.json";
  std::ifstream din(defaults);
  if (!din) throw ConfigError("defaults file missing: " + defaults.string());
  json cfg = json::parse(din);
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) throw ConfigError("cannot open config '" + config_path + "'");
    cfg = merge(cfg, json::parse(in));
  }
  s.cfg = cfg;
  s.fam = family_from_json(require(cfg, "family", "config"));
  s.model = innovations_from_json(require(cfg, "innovations", "config"));
  s.reg = regime_from_json(require(cfg, "regime", "config"), s.fam);
  s.set = set_from_json(require(cfg, "set", "config"));
  const json& exp = require(cfg, "experiment", "config");
  s.mu = num_or(exp, "mu", 0.5);
  s.seed = seed_override ? seed_override
                         : static_cast<uint64_t>(exp.value("seed", 1));
  s.out_dir = out_dir;
  s.format = format;
  s.svg = svg;
  fs::create_directories(s.out_dir);
  return s;
}

// Timestamps live in a sidecar so the data artifacts stay byte-identical
// across reruns with the same config and seed.
void write_sidecar(const Setup& s, const std::string& sub) {
  std::ofstream out(s.out_dir / (sub + ".run.txt"));
  auto now = std::chrono::system_clock::now();
  out << "subcommand: " << sub << "\n"
      << "timestamp_unix: "
      << std::chrono::duration_cast<std::chrono::seconds>(
             now.time_since_epoch())
             .count()
      << "\nthreads: " << omp_get_max_threads() << "\n";
}

void maybe_write_json(const Setup& s, const std::string& name, const json& j) {
  if (s.format == "csv") return;
  std::ofstream out(s.out_dir / (name + ".json"), std::ios::binary);
  out << j.dump(2) << "\n";
}

Eigen::VectorXd mu_vector(const Setup& s) {
  Eigen::VectorXd mu(s.set.dim());
  if (s.set.dim() == 1) {
    mu(0) = s.mu;
  } else {
    mu = s.mu * s.set.direction() / s.set.direction().norm();
    if (s.cfg.at("experiment").contains("mu_vector")) {
      auto mv = s.cfg.at("experiment").at("mu_vector");
      for (size_t i = 0; i < mv.size(); ++i) mu(i) = mv.at(i).get<double>();
    }
  }
  return mu;
}

RuinAsymptote theory_for(const Setup& s) {
  Eigen::VectorXd mu = mu_vector(s);
  switch (s.reg.tag()) {
    case Regime::S1:
    case Regime::S2:
      return ruin_cramer_bounds(s.fam, s.model, s.set, mu);
    case Regime::S3:
      return ruin_gaussian_bounds(s.model.covariance(), mu, s.set,
                                  s.reg.omega());
    case Regime::S4: {
      auto hp = s.model.heavy_profile();
      if (!hp) throw MissingHeavyProfile("S4 theory bounds");
      return ruin_heavy_bounds(*hp, mu, s.set, s.reg.omega());
    }
    case Regime::R1:
    case Regime::R2:
      return ruin_lm_bounds(s.fam, s.model, mu, s.set);
    case Regime::R3:
      return ruin_lm_gaussian_bounds(s.model.covariance(), mu, s.set,
                                     s.fam.alpha(), s.fam.p(), s.reg.omega());
    case Regime::R4: {
      auto hp = s.model.heavy_profile();
      if (!hp) throw MissingHeavyProfile("R4 theory bounds");
      return ruin_lm_heavy_bounds(*hp, mu, s.set, s.fam.alpha(), s.fam.p(),
                                  s.reg.omega());
    }
  }
  throw ConfigError("unhandled regime");
}

// --------------------------------------------------------------------------

int cmd_rate(const Setup& s) {
  json j;
  j["regime"] = regime_name(s.reg.tag());
  j["seed"] = s.seed;
  RateBounds rb = segment_rate_bounds(s.fam, s.model, s.reg, s.set);
  j["segment_rate"] = to_json(rb);
  try {
    RuinAsymptote ra = theory_for(s);
    j["ruin_asymptote"] = to_json(ra);
  } catch (const Error& e) {
    j["ruin_asymptote_error"] = e.what();
  }
  if (s.set.dim() == 1 && s.model.dim() == 1) {
    TiltRegion pi = pi_region(s.fam, s.model, s.reg);
    json pj;
    pj["decided"] = pi.decided;
    pj["lambda_max"] = format_double(pi.lambda_max);
    pj["lambda_min"] = format_double(pi.lambda_min);
    pj["margin"] = pi.margin;
    if (!pi.reason.empty()) pj["reason"] = pi.reason;
    j["tilt_region"] = pj;
  }
  maybe_write_json(s, "rate", j);
  if (s.format != "json") {
    CsvWriter csv((s.out_dir / "rate.csv").string());
    csv.header({"quantity", "lower", "upper", "regime", "seed"});
    csv.row({"segment_rate", format_double(rb.lower), format_double(rb.upper),
             regime_name(s.reg.tag()), std::to_string(s.seed)});
    if (j.contains("ruin_asymptote"))
      csv.row({"ruin_asymptote", j["ruin_asymptote"]["lower"].dump(),
               j["ruin_asymptote"]["upper"].dump(), regime_name(s.reg.tag()),
               std::to_string(s.seed)});
  }
  std::cout << j.dump(2) << "\n";
  return 0;
}

int cmd_segments(const Setup& s, long dump_paths) {
  const json& exp = s.cfg.at("experiment");
  long n_paths = static_cast<long>(exp.value("paths", 20));
  std::vector<long> m_grid;
  if (exp.contains("m_grid"))
    for (const auto& v : exp.at("m_grid")) m_grid.push_back(v.get<long>());
  else
    m_grid = {10000, 100000, 1000000};
  long m_max = *std::max_element(m_grid.begin(), m_grid.end());
  long trunc = static_cast<long>(exp.value("truncation", 0));

  PathConfig proto{s.fam,  s.model, m_max, trunc,
                   s.seed, 0,       s.reg.tag(), s.mu};

  std::vector<std::vector<long>> lengths(static_cast<size_t>(n_paths));
#pragma omp parallel for schedule(dynamic)
  for (long k = 0; k < n_paths; ++k) {
    PathConfig c = proto;
    c.path_index = static_cast<uint64_t>(k);
    Path p = sample_path(c);
    lengths[static_cast<size_t>(k)] =
        segment_lengths_on_grid(p, s.set, s.reg, m_grid);
    if (k < dump_paths)
      write_path_dump(p, (s.out_dir / ("path_" + std::to_string(k) +
                                       ".mapath"))
                             .string());
  }

  RateBounds rb = segment_rate_bounds(s.fam, s.model, s.reg, s.set);
  json j;
  j["regime"] = regime_name(s.reg.tag());
  j["seed"] = s.seed;
  j["segment_rate"] = to_json(rb);

  if (s.format != "json") {
    CsvWriter csv((s.out_dir / "segments.csv").string());
    csv.header({"m", "path_id", "R_m", "b_R", "statistic", "regime", "seed"});
    for (size_t i = 0; i < m_grid.size(); ++i) {
      for (long k = 0; k < n_paths; ++k) {
        long R = lengths[static_cast<size_t>(k)][i];
        double bR = R > 0 ? s.reg.b(R) : 0.0;
        double stat =
            R > 0 ? bR / std::log(static_cast<double>(m_grid[i])) : 0.0;
        csv.row({std::to_string(m_grid[i]), std::to_string(k),
                 std::to_string(R), format_double(bR), format_double(stat),
                 regime_name(s.reg.tag()), std::to_string(s.seed)});
      }
    }
  }

  json rows = json::array();
  std::vector<std::pair<double, double>> mean_pts;
  for (size_t i = 0; i < m_grid.size(); ++i) {
    double mean = 0.0, var = 0.0;
    auto stat_of = [&](long k) {
      long R = lengths[static_cast<size_t>(k)][i];
      return R > 0 ? s.reg.b(R) / std::log(static_cast<double>(m_grid[i]))
                   : 0.0;
    };
    for (long k = 0; k < n_paths; ++k) mean += stat_of(k);
    mean /= static_cast<double>(n_paths);
    for (long k = 0; k < n_paths; ++k) {
      double d = stat_of(k) - mean;
      var += d * d;
    }
    var /= std::max<double>(1.0, static_cast<double>(n_paths - 1));
    json row;
    row["m"] = m_grid[i];
    row["mean_stat"] = mean;
    row["sd_stat"] = std::sqrt(var);
    row["n_paths"] = n_paths;
    rows.push_back(row);
    mean_pts.emplace_back(std::log10(static_cast<double>(m_grid[i])), mean);
  }
  j["growth"] = rows;
  maybe_write_json(s, "segments", j);

  if (s.svg) {
    std::vector<PlotRef> refs;
    if (std::isfinite(rb.lower) && rb.lower > 0.0)
      refs.push_back({1.0 / rb.lower, "1/I_lower", "#d62728"});
    if (std::isfinite(rb.upper) && rb.upper > 0.0 && rb.upper != rb.lower)
      refs.push_back({1.0 / rb.upper, "1/I_upper", "#9467bd"});
    write_svg_plot((s.out_dir / "segments.svg").string(),
                   "growth statistic b_R / log m", "log10 m", "statistic",
                   {{mean_pts, "mean over paths", "#1f77b4", false}}, refs);
  }
  std::cout << j["growth"].dump(2) << "\n";
  return 0;
}

int cmd_ruin(const Setup& s) {
  const json& exp = s.cfg.at("experiment");
  long n_paths = static_cast<long>(exp.value("n_paths", 100000));
  int M = static_cast<int>(exp.value("horizon_multiplier", 20));
  std::string method = exp.value("method", "tilted");
  std::vector<double> us;
  if (exp.contains("u_grid"))
    for (const auto& v : exp.at("u_grid")) us.push_back(v.get<double>());
  else
    us = {4, 5, 6, 7, 8, 9, 10, 11, 12};

  RuinProblem prob{s.fam, s.model, s.reg, s.mu, s.set};
  std::vector<RuinEstimate> ests;
  for (size_t i = 0; i < us.size(); ++i) {
    RuinEstimate e =
        method == "tilted"
            ? ruin_is(prob, us[i], n_paths, s.seed + 1000 * i)
            : ruin_mc(prob, us[i], n_paths, M, s.seed + 1000 * i);
    ests.push_back(e);
  }

  json j;
  j["regime"] = regime_name(s.reg.tag());
  j["seed"] = s.seed;
  json rows = json::array();
  for (const auto& e : ests) rows.push_back(to_json(e));
  j["estimates"] = rows;

  double lo = -kInf, hi = 0.0;
  try {
    RuinAsymptote theory = theory_for(s);
    j["theory"] = to_json(theory);
    lo = theory.lower;
    hi = theory.upper;
  } catch (const Error& e) {
    j["theory_error"] = e.what();
  }
  try {
    DecayFit fit = ruin_decay_fit(ests, s.reg, lo, hi);
    j["fit"] = to_json(fit);
  } catch (const InsufficientData& e) {
    j["fit_error"] = e.what();
  }

  if (s.format != "json") {
    CsvWriter csv((s.out_dir / "ruin.csv").string());
    csv.header({"u", "rho_hat", "se", "method", "horizon", "tail_bound",
                "n_paths", "seed", "regime"});
    for (const auto& e : ests)
      csv.row({format_double(e.u), format_double(e.rho_hat),
               format_double(e.se),
               e.method == RuinMethod::Plain ? "plain" : "tilted",
               std::to_string(e.horizon), format_double(e.tail_bound),
               std::to_string(e.n_paths), std::to_string(e.seed),
               regime_name(s.reg.tag())});
  }
  maybe_write_json(s, "ruin", j);

  if (s.svg) {
    std::vector<std::pair<double, double>> pts;
    for (const auto& e : ests)
      if (e.rho_hat > 0.0)
        pts.emplace_back(s.reg.b(s.reg.a_inverse(e.u)), std::log(e.rho_hat));
    std::vector<PlotSeries> series{{pts, "log rho_hat", "#1f77b4", false}};
    if (j.contains("fit") && !pts.empty()) {
      double slope = j["fit"]["slope"].get<double>();
      double icpt = j["fit"]["intercept"].get<double>();
      auto line_for = [&](double sl, const std::string& label,
                          const std::string& color) {
        std::vector<std::pair<double, double>> line{
            {pts.front().first, icpt + sl * pts.front().first},
            {pts.back().first, icpt + sl * pts.back().first}};
        series.push_back({line, label, color, true});
      };
      line_for(slope, "fit", "#2ca02c");
      if (std::isfinite(lo)) line_for(lo, "theory lower", "#d62728");
      if (std::isfinite(hi) && hi != lo)
        line_for(hi, "theory upper", "#ff7f0e");
    }
    write_svg_plot((s.out_dir / "ruin.svg").string(),
                   "ruin decay vs theory band", "b at a-inverse(u)",
                   "log rho_hat", series);
  }
  std::cout << (j.contains("fit") ? j["fit"].dump(2) : "{}") << "\n";
  return 0;
}

int cmd_tables(const Setup& s) {
  const json& exp = s.cfg.at("experiment");
  double alpha = exp.value("alpha", 0.75);
  double beta = exp.value("beta", 2.0);
  std::vector<double> omegas;
  if (exp.contains("omega_grid"))
    for (const auto& v : exp.at("omega_grid"))
      omegas.push_back(v.get<double>());
  else
    for (double w = 0.5; w <= 3.001; w += 0.25) omegas.push_back(w);

  json rows = json::array();
  std::unique_ptr<CsvWriter> csv;
  if (s.format != "json") {
    csv = std::make_unique<CsvWriter>((s.out_dir / "tables.csv").string());
    csv->header({"table", "memory", "omega", "alpha", "beta", "theta"});
  }
  for (double w : omegas) {
    for (auto [mem, name] :
         {std::pair<Memory, const char*>{Memory::Short, "short"},
          {Memory::Long, "long"}}) {
      double t1 = growth_theta(mem, w, alpha, beta);
      double t2 = decay_theta(mem, w, alpha, beta);
      json r;
      r["omega"] = w;
      r["memory"] = name;
      r["growth_theta"] = format_double(t1);
      r["decay_theta"] = format_double(t2);
      rows.push_back(r);
      if (csv) {
        csv->row({"growth", name, format_double(w), format_double(alpha),
                  format_double(beta), format_double(t1)});
        csv->row({"decay", name, format_double(w), format_double(alpha),
                  format_double(beta), format_double(t2)});
      }
    }
  }
  json j;
  j["alpha"] = alpha;
  j["beta"] = beta;
  j["rows"] = rows;
  maybe_write_json(s, "tables", j);
  std::cout << j.dump(2) << "\n";
  return 0;
}

int cmd_verify(uint64_t seed) {
  auto results = run_acceptance(std::cout, seed ? seed : 20240801);
  for (const auto& r : results)
    if (!r.pass) return 3;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"moving-average large deviations and ruin toolkit"};
  app.require_subcommand(1);
  app.fallthrough();  // accept the global flags after the subcommand too

  std::string config, out_dir = "out", format = "both";
  uint64_t seed = 0;
  int threads = 0;
  bool svg = false;
  long dump_paths = 0;
  app.add_option("--config", config, "JSON config file");
  app.add_option("--seed", seed, "override experiment.seed");
  app.add_option("--threads", threads, "worker threads (0 = library default)");
  app.add_option("--out-dir", out_dir, "output directory");
  app.add_option("--format", format, "csv, json, or both")
      ->check(CLI::IsMember({"csv", "json", "both"}));
  app.add_flag("--svg", svg, "emit SVG plots");

  auto* rate = app.add_subcommand("rate", "rate bounds and ruin asymptotes");
  auto* segments =
      app.add_subcommand("segments", "simulate and measure long segments");
  segments->add_option("--dump-paths", dump_paths,
                       "write the first N raw paths (MAPATH1 format)");
  auto* ruin = app.add_subcommand("ruin", "Monte Carlo ruin estimation");
  auto* tables = app.add_subcommand("tables", "exponent tables");
  auto* verify = app.add_subcommand("verify", "run the acceptance suite");
  std::string suite = "primary";
  verify->add_option("--suite", suite, "suite name (primary)");

  CLI11_PARSE(app, argc, argv);
  if (threads > 0) omp_set_num_threads(threads);

  try {
    if (verify->parsed()) return cmd_verify(seed);
    Setup s = load_setup(config, out_dir, seed, format, svg);
    if (rate->parsed()) {
      write_sidecar(s, "rate");
      return cmd_rate(s);
    }
    if (segments->parsed()) {
      write_sidecar(s, "segments");
      return cmd_segments(s, dump_paths);
    }
    if (ruin->parsed()) {
      write_sidecar(s, "ruin");
      return cmd_ruin(s);
    }
    if (tables->parsed()) {
      write_sidecar(s, "tables");
      return cmd_tables(s);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const Error& e) {
    std::cerr << "numeric certification failure: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
