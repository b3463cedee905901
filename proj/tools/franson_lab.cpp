// franson-lab: simulate, calibrate, tomo and report commands.
//
// stdout carries one `key=value` pair per line. Exit codes: 0 success,
// 1 usage or unexpected error, 2 invalid configuration, 3 I/O failure,
// 4 fit failure, 5 likelihood reconstruction failure, 6 missing artifacts.

#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "franson_lab/analysis.hpp"
#include "franson_lab/io.hpp"
#include "franson_lab/simulate.hpp"
#include "franson_lab/tomography.hpp"

namespace fs = std::filesystem;
using namespace franson_lab;
using io::json;

namespace {

enum Exit : int { ok = 0, usage = 1, config_error = 2, io_error = 3, fit_error = 4, mle_error = 5,
                  missing_artifacts = 6 };

constexpr double default_window_ps = 250.0;
constexpr double default_bin_ps = 8.0;
constexpr int default_trials = 5000;

class MissingArtifacts : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string utc_now() {
  std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Ordered `key=value` lines for stdout.
class Summary {
 public:
  template <class T>
  void add(const std::string& key, const T& value) {
    std::ostringstream ss;
    if constexpr (std::is_floating_point_v<T>)
      ss << io::format_number(value);
    else if constexpr (std::is_same_v<T, bool>)
      ss << (value ? "true" : "false");
    else
      ss << value;
    lines_.push_back(key + "=" + ss.str());
  }
  std::string str() const {
    std::string out;
    for (const auto& l : lines_) out += l + "\n";
    return out;
  }

 private:
  std::vector<std::string> lines_;
};

/// Output directory of one command: data files plus a manifest written last.
class Run {
 public:
  Run(std::string command, std::string config_path, std::uint64_t seed, fs::path out)
      : command_(std::move(command)),
        config_path_(std::move(config_path)),
        seed_(seed),
        out_(std::move(out)),
        started_(utc_now()) {
    io::ensure_directory(out_);
    std::error_code ec;
    fs::remove(out_ / "manifest.json", ec);
  }

  void write(const std::string& name, const std::string& text) {
    io::write_text(out_ / name, text);
    files_.push_back(name);
  }
  void write(const std::string& name, const json& j) { write(name, io::dump(j)); }

  json& options() { return options_; }

  void finish() {
    json m = {{"schema_version", io::schema_version},
              {"command", command_},
              {"config_path", config_path_},
              {"seed", seed_},
              {"output_dir", out_.string()},
              {"tool_version", FRANSON_LAB_VERSION},
              {"options", options_},
              {"files", files_},
              {"timestamps", {{"started", started_}, {"finished", utc_now()}}}};
    io::write_json(out_ / "manifest.json", m);
  }

 private:
  std::string command_, config_path_;
  std::uint64_t seed_;
  fs::path out_;
  std::string started_;
  json options_ = json::object();
  std::vector<std::string> files_;
};

struct Acquisition {
  TimeTagStream stream;
  std::vector<TripleRecord> records;
  Histogram2D hist;
};

Acquisition acquire(const ExperimentConfig& cfg, double window, double bin) {
  Acquisition a;
  a.stream = run_experiment(cfg);
  a.records = match_triples(a.stream, window, cfg.tau_ps);
  a.hist = build_histogram2d(a.records, bin, cfg.tau_ps, window, cfg.jitter_sigma_ps);
  return a;
}

void check_analysis_options(double window, double bin) {
  if (!(window >= 0.0) || !std::isfinite(window)) throw ConfigError("--window must be >= 0");
  if (!(bin > 0.0) || !std::isfinite(bin)) throw ConfigError("--bin must be > 0");
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  double window = default_window_ps;
  double bin = default_bin_ps;
};

int cmd_simulate(const SimulateArgs& a) {
  check_analysis_options(a.window, a.bin);
  ExperimentConfig cfg = io::load_experiment_config(a.config);
  if (a.seed) cfg.rng_seed = *a.seed;
  cfg.validate();

  Run run("simulate", a.config, cfg.rng_seed, a.out);
  run.options() = {{"window_ps", a.window}, {"bin_ps", a.bin}};
  Acquisition acq = acquire(cfg, a.window, a.bin);
  SinglesCounts singles = count_tags(acq.stream);
  Collapsed1D collapsed = collapse_histogram(acq.hist);

  run.write("config.json", io::to_json(cfg));
  run.write("timetags.csv", io::time_tags_csv(acq.stream));
  run.write("coincidences.csv", io::triples_csv(acq.records));
  run.write("histogram2d.csv", io::histogram_csv(acq.hist));
  run.write("regions.json", io::region_summary_json(acq.hist));
  run.write("collapsed.csv", io::collapsed_csv(collapsed, cfg.tau_ps));
  run.write("profile.csv", io::profile_csv(collapsed_profile(acq.records, acq.hist, a.bin)));
  run.finish();

  Summary s;
  s.add("command", "simulate");
  s.add("seed", cfg.rng_seed);
  s.add("pulse_pairs", acq.stream.pulse_pairs);
  s.add("tags", acq.stream.tags.size());
  s.add("singles.trigger", singles.triggers);
  s.add("singles.signal", singles.signal);
  s.add("singles.idler", singles.idler);
  s.add("records", acq.hist.records);
  s.add("sigma_ps", acq.hist.sigma_ps);
  for (int k = 0; k < 9; ++k)
    s.add("region." + std::string(regions::names[k]), acq.hist.region_counts[k]);
  s.add("output", a.out);
  std::cout << s.str();
  return ok;
}

// ---------------------------------------------------------------------------

struct CalibrateArgs {
  std::string grid;
  std::optional<std::uint64_t> seed;
  std::string out;
  double window = default_window_ps;
  double bin = default_bin_ps;
};

std::vector<double> axis_from_json(const json& j, const std::string& name) {
  io::ObjectReader r(j, name);
  double start = r.require<double>("start"), stop = r.require<double>("stop");
  int steps = r.require<int>("steps");
  r.finish();
  if (steps < 1) throw ConfigError(name + ".steps must be >= 1");
  if (!(start >= 0.0) || !(stop >= 0.0)) throw ConfigError(name + " powers must be >= 0");
  std::vector<double> v;
  for (int k = 0; k < steps; ++k)
    v.push_back(steps == 1 ? start : start + (stop - start) * k / (steps - 1));
  return v;
}

int cmd_calibrate(const CalibrateArgs& a) {
  check_analysis_options(a.window, a.bin);
  json doc = io::read_json(a.grid);
  io::ObjectReader r(doc, "map_grid");
  io::check_schema(r);

  std::vector<MapPoint> points;
  std::string source;
  std::uint64_t seed = a.seed.value_or(1);
  if (r.has("points")) {
    source = "measured";
    points = io::map_points_from_json(r.raw("points"));
    r.finish();
  } else {
    source = "simulated";
    ExperimentConfig cfg = io::experiment_config_from_json(r.raw("experiment"), false);
    auto ps = axis_from_json(r.raw("power_s"), "power_s");
    auto pi_ = axis_from_json(r.raw("power_i"), "power_i");
    r.finish();
    seed = a.seed.value_or(cfg.rng_seed);
    for (double x : ps)
      for (double y : pi_) {
        ExperimentConfig c = cfg;
        c.heater_power_s = x;
        c.heater_power_i = y;
        c.rng_seed = derive_seed(seed, points.size(), 11);
        c.validate();
        Acquisition acq = acquire(c, a.window, a.bin);
        points.push_back({x, y, static_cast<double>(acq.hist.region_counts[regions::TT])});
      }
  }
  if (points.empty()) throw ConfigError("map grid has no points");

  Run run("calibrate", a.grid, seed, a.out);
  run.options() = {{"window_ps", a.window}, {"bin_ps", a.bin}, {"source", source}};
  CalibrationFit fit = fit_calibration_map(points);

  json projectors = json::array();
  for (const auto& st : standard_settings()) {
    ProjectorPowers p = projector_powers(fit, st.phi_s, st.phi_i);
    projectors.push_back(
        {{"phi_s", st.phi_s}, {"phi_i", st.phi_i}, {"power_s", p.power_s}, {"power_i", p.power_i}});
  }
  json result = {{"schema_version", io::schema_version}, {"source", source}};
  result.update(io::to_json(fit));
  result["projectors"] = projectors;

  io::CsvWriter map({"power_s_mw", "power_i_mw", "counts", "model"});
  for (const auto& p : points) map.row(p.power_s, p.power_i, p.counts, fit.model(p.power_s, p.power_i));
  run.write("calibration.json", result);
  run.write("map.csv", map.str());
  run.finish();

  Summary s;
  s.add("command", "calibrate");
  s.add("source", source);
  s.add("points", points.size());
  s.add("kappa_s", fit.kappa_s);
  s.add("kappa_i", fit.kappa_i);
  s.add("phi_p", fit.phi_p);
  s.add("phi_p_error", fit.phi_p_error());
  s.add("visibility", fit.visibility);
  s.add("residual_norm", fit.residual_norm);
  for (std::size_t k = 0; k < projectors.size(); ++k)
    s.add("projector." + std::to_string(k),
          io::format_number(projectors[k]["power_s"].get<double>()) + "," +
              io::format_number(projectors[k]["power_i"].get<double>()));
  s.add("output", a.out);
  std::cout << s.str();
  return ok;
}

// ---------------------------------------------------------------------------

struct TomoArgs {
  std::string records;
  std::string from_sim;
  std::optional<std::uint64_t> seed;
  std::string out;
  int trials = default_trials;
  double window = default_window_ps;
  double bin = default_bin_ps;
};

std::optional<FringeFit> fringe_of(const std::vector<MeasurementRecord>& records) {
  std::vector<FringePoint> pts;
  for (const auto& r : records) pts.push_back({r.phi_s + r.phi_i, r.counts[regions::TT]});
  try {
    return fit_fringe(pts);
  } catch (const FitError&) {
    return std::nullopt;
  }
}

int cmd_tomo(const TomoArgs& a) {
  check_analysis_options(a.window, a.bin);
  if (a.records.empty() == a.from_sim.empty())
    throw ConfigError("give either a records file or --from-sim <config>");
  if (a.trials < 1) throw ConfigError("--trials must be >= 1");

  io::RecordSet set;
  std::uint64_t seed = a.seed.value_or(1);
  std::vector<Acquisition> sims;
  std::vector<ProjectorPowers> powers;
  if (!a.records.empty()) {
    set = io::record_set_from_json(io::read_json(a.records));
  } else {
    ExperimentConfig cfg = io::load_experiment_config(a.from_sim);
    seed = a.seed.value_or(cfg.rng_seed);
    auto settings = standard_settings();
    for (std::size_t j = 0; j < settings.size(); ++j) {
      ExperimentConfig c = cfg;
      c.rng_seed = derive_seed(seed, j, 12);
      c.set_analysis_phases(settings[j].phi_s + cfg.phi_p / 2.0, settings[j].phi_i + cfg.phi_p / 2.0);
      c.validate();
      powers.push_back({c.heater_power_s, c.heater_power_i});
      sims.push_back(acquire(c, a.window, a.bin));
      MeasurementRecord m;
      m.phi_s = settings[j].phi_s;
      m.phi_i = settings[j].phi_i;
      m.acquisition_s = c.acquisition_s;
      for (int k = 0; k < 9; ++k) m.counts[k] = static_cast<double>(sims.back().hist.region_counts[k]);
      set.records.push_back(m);
    }
    set.mle.arms = EventModel(cfg).normalized_arms();
  }
  set.mle.seed = seed;

  Run run("tomo", a.records.empty() ? a.from_sim : a.records, seed, a.out);
  run.options() = {{"trials", a.trials},
                   {"source", a.records.empty() ? "simulated" : "records"},
                   {"window_ps", a.window},
                   {"bin_ps", a.bin},
                   {"mle", io::to_json(set.mle)}};
  TomographyResult res = tomography(set.records, set.mle, a.trials);
  auto fringe = fringe_of(set.records);

  json result = io::to_json(res);
  result["fringe"] = fringe ? io::to_json(*fringe) : json(nullptr);
  run.write("records.json", io::to_json(set));
  run.write("tomography.json", result);
  const std::pair<const char*, const MetricDistribution*> hists[] = {
      {"fidelity", &res.monte_carlo.fidelity}, {"concurrence", &res.monte_carlo.concurrence},
      {"entropy", &res.monte_carlo.entropy},   {"purity", &res.monte_carlo.purity},
      {"chsh", &res.monte_carlo.chsh}};
  for (const auto& [name, d] : hists) run.write(std::string(name) + "_hist.csv", io::metric_histogram_csv(*d));

  io::CsvWriter fp({"setting", "phase_sum", "counts", "model"});
  for (std::size_t j = 0; j < set.records.size(); ++j) {
    const auto& r = set.records[j];
    double phase = r.phi_s + r.phi_i;
    fp.row(j, phase, r.counts[regions::TT], fringe ? fringe->model(phase) : 0.0);
  }
  run.write("fringe_points.csv", fp.str());

  if (!sims.empty()) {
    io::CsvWriter st({"setting", "phi_s", "phi_i", "power_s_mw", "power_i_mw", "records", "EE", "ET",
                      "EL", "TE", "TT", "TL", "LE", "LT", "LL"});
    for (std::size_t j = 0; j < sims.size(); ++j) {
      const auto& h = sims[j].hist;
      const auto& c = h.region_counts;
      st.row(j, set.records[j].phi_s, set.records[j].phi_i, powers[j].power_s, powers[j].power_i,
             h.records, c[0], c[1], c[2], c[3], c[4], c[5], c[6], c[7], c[8]);
      const std::string tag = "_setting" + std::to_string(j);
      run.write("histogram2d" + tag + ".csv", io::histogram_csv(h));
      run.write("collapsed" + tag + ".csv", io::collapsed_csv(collapse_histogram(h), h.tau_ps));
    }
    run.write("settings.csv", st.str());
  }
  run.finish();

  Summary s;
  s.add("command", "tomo");
  s.add("seed", seed);
  s.add("trials", res.monte_carlo.trials);
  s.add("failures", res.monte_carlo.failures);
  if (fringe) {
    s.add("visibility", fringe->visibility);
    s.add("visibility_error", fringe->visibility_error);
  }
  s.add("fidelity", res.metrics.fidelity);
  s.add("fidelity_std", res.monte_carlo.fidelity.std);
  s.add("concurrence", res.metrics.concurrence);
  s.add("concurrence_std", res.monte_carlo.concurrence.std);
  s.add("entropy", res.metrics.entropy);
  s.add("entropy_std", res.monte_carlo.entropy.std);
  s.add("chsh", res.metrics.chsh);
  s.add("purity", res.metrics.purity);
  s.add("informational_rank", res.informational_rank);
  s.add("ambiguity", res.ambiguity);
  s.add("output", a.out);
  std::cout << s.str();
  return ok;
}

// ---------------------------------------------------------------------------

json require_json(const fs::path& p) {
  if (!fs::is_regular_file(p)) throw MissingArtifacts("missing " + p.string());
  try {
    return json::parse(io::read_text(p));
  } catch (const json::parse_error&) {
    throw MissingArtifacts("unreadable " + p.string());
  }
}

std::vector<std::vector<std::string>> read_csv_cells(const fs::path& p) {
  std::istringstream in(io::read_text(p));
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

/// Histogram matrix file to long format rows (signal, idler, counts).
std::string long_map(const fs::path& p) {
  auto rows = read_csv_cells(p);
  io::CsvWriter w({"dt_signal_ps", "dt_idler_ps", "counts"});
  if (rows.empty()) return w.str();
  for (std::size_t r = 1; r < rows.size(); ++r)
    for (std::size_t c = 1; c < rows[r].size() && c < rows[0].size(); ++c)
      w.row(std::string_view(rows[r][0]), std::string_view(rows[0][c]), std::string_view(rows[r][c]));
  return w.str();
}

std::string fringe_curve(const json& f) {
  io::CsvWriter w({"phase", "model"});
  const double c = f["offset"].get<double>(), amp = f["amplitude"].get<double>(),
               ph = f["phase"].get<double>();
  for (int k = 0; k <= 72; ++k) {
    double phi = two_pi * k / 72.0;
    w.row(phi, c + amp * std::cos(phi + ph));
  }
  return w.str();
}

double num(const json& j) { return j.get<double>(); }

int cmd_report(const std::string& dir_arg) {
  const fs::path dir(dir_arg);
  json manifest = require_json(dir / "manifest.json");
  if (!manifest.contains("command") || !manifest.contains("files") || !manifest["files"].is_array())
    throw MissingArtifacts("manifest lacks command or file list");
  for (const auto& f : manifest["files"])
    if (!fs::is_regular_file(dir / f.get<std::string>()))
      throw MissingArtifacts("missing " + f.get<std::string>());
  const std::string command = manifest["command"].get<std::string>();

  Summary s;
  json summary = {{"command", command}, {"seed", manifest["seed"]}};
  s.add("command", command);
  s.add("seed", manifest["seed"].get<std::uint64_t>());
  std::vector<std::pair<std::string, std::string>> plots;

  try {
    if (command == "simulate") {
      json reg = require_json(dir / "regions.json");
      s.add("records", reg["records"].get<std::uint64_t>());
      s.add("sigma_ps", num(reg["sigma_ps"]));
      for (int k = 0; k < 9; ++k) {
        std::string n(regions::names[k]);
        s.add("region." + n, reg["regions"][n].get<std::uint64_t>());
      }
      summary["regions"] = reg["regions"];
      summary["records"] = reg["records"];
      plots.push_back({"plot_map.csv", long_map(dir / "histogram2d.csv")});
      plots.push_back({"plot_peaks.csv", io::read_text(dir / "collapsed.csv")});
    } else if (command == "calibrate") {
      json cal = require_json(dir / "calibration.json");
      const json& p = cal["parameters"];
      for (const char* k : {"kappa_s", "kappa_i", "phi_p", "visibility", "offset"}) {
        s.add(k, num(p[k]));
        summary[k] = p[k];
      }
      s.add("phi_p_error", num(cal["errors"]["phi_p"]));
      summary["projectors"] = cal["projectors"];
      CalibrationFit fit = io::calibration_fit_from_json(cal);
      auto rows = read_csv_cells(dir / "map.csv");
      double smax = 0.0, imax = 0.0;
      for (std::size_t r = 1; r < rows.size(); ++r) {
        smax = std::max(smax, std::stod(rows[r].at(0)));
        imax = std::max(imax, std::stod(rows[r].at(1)));
      }
      io::CsvWriter map({"power_s_mw", "power_i_mw", "model"});
      io::CsvWriter fr({"power_mw", "signal_model", "idler_model"});
      const int n = 60;
      for (int a = 0; a <= n; ++a)
        for (int b = 0; b <= n; ++b)
          map.row(smax * a / n, imax * b / n, fit.model(smax * a / n, imax * b / n));
      const double pmax = std::max(smax, imax);
      for (int a = 0; a <= 4 * n; ++a) {
        double x = pmax * a / (4 * n);
        fr.row(x, fit.model(x, 0.0), fit.model(0.0, x));
      }
      plots.push_back({"plot_map.csv", map.str()});
      plots.push_back({"plot_fringe.csv", fr.str()});
    } else if (command == "tomo") {
      json t = require_json(dir / "tomography.json");
      const json& m = t["metrics"];
      const json& mc = t["monte_carlo"];
      if (!t["fringe"].is_null()) {
        s.add("V", num(t["fringe"]["visibility"]));
        s.add("V_error", num(t["fringe"]["visibility_error"]));
        summary["V"] = t["fringe"]["visibility"];
        plots.push_back({"plot_fringe.csv", fringe_curve(t["fringe"])});
      }
      s.add("F", num(m["fidelity"]));
      s.add("F_std", num(mc["fidelity"]["std"]));
      s.add("C", num(m["concurrence"]));
      s.add("C_std", num(mc["concurrence"]["std"]));
      s.add("S", num(m["entropy"]));
      s.add("S_std", num(mc["entropy"]["std"]));
      s.add("CHSH", num(m["chsh"]));
      s.add("chsh_violation", m["chsh_violation"].get<bool>());
      summary["F"] = m["fidelity"];
      summary["C"] = m["concurrence"];
      summary["S"] = m["entropy"];
      summary["CHSH"] = m["chsh"];
      summary["monte_carlo"] = mc;
      io::CsvWriter rho({"row", "col", "real", "imag"});
      for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c)
          rho.row(r, c, num(t["rho"]["real"][r][c]), num(t["rho"]["imag"][r][c]));
      plots.push_back({"plot_rho.csv", rho.str()});
      for (int j = 0; fs::is_regular_file(dir / ("histogram2d_setting" + std::to_string(j) + ".csv")); ++j) {
        const std::string tag = "_setting" + std::to_string(j);
        plots.push_back({"plot_map" + tag + ".csv", long_map(dir / ("histogram2d" + tag + ".csv"))});
        plots.push_back({"plot_peaks" + tag + ".csv", io::read_text(dir / ("collapsed" + tag + ".csv"))});
      }
    } else {
      throw MissingArtifacts("unknown command in manifest: " + command);
    }
  } catch (const json::exception& e) {
    throw MissingArtifacts(std::string("malformed artifact: ") + e.what());
  }

  for (const auto& [name, text] : plots) io::write_text(dir / name, text);
  const std::string text = s.str();
  io::write_text(dir / "summary.txt", text);
  io::write_json(dir / "summary.json", summary);
  std::cout << text;
  return ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Time-bin entanglement lab: simulation, calibration and tomography"};
  app.set_version_flag("--version", FRANSON_LAB_VERSION);
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* c_sim = app.add_subcommand("simulate", "Simulate one acquisition and histogram it");
  c_sim->add_option("config", sim.config, "Experiment config JSON")->required();
  c_sim->add_option("--seed", sim.seed, "Override the config seed");
  c_sim->add_option("--out", sim.out, "Output directory")->required();
  c_sim->add_option("--window", sim.window, "Coincidence window margin (ps)");
  c_sim->add_option("--bin", sim.bin, "Histogram bin width (ps)");

  CalibrateArgs cal;
  auto* c_cal = app.add_subcommand("calibrate", "Fit the heater calibration map");
  c_cal->add_option("map_grid", cal.grid, "Map grid JSON")->required();
  c_cal->add_option("--seed", cal.seed, "Override the config seed");
  c_cal->add_option("--out", cal.out, "Output directory")->required();
  c_cal->add_option("--window", cal.window, "Coincidence window margin (ps)");
  c_cal->add_option("--bin", cal.bin, "Histogram bin width (ps)");

  TomoArgs tomo;
  auto* c_tomo = app.add_subcommand("tomo", "Reconstruct the two-qubit state");
  c_tomo->add_option("records", tomo.records, "Measurement records JSON");
  c_tomo->add_option("--from-sim", tomo.from_sim, "Simulate the four settings from this config");
  c_tomo->add_option("--seed", tomo.seed, "Seed for simulation and reconstruction");
  c_tomo->add_option("--out", tomo.out, "Output directory")->required();
  c_tomo->add_option("--trials", tomo.trials, "Monte-Carlo trials (1 = point estimate)");
  c_tomo->add_option("--window", tomo.window, "Coincidence window margin (ps)");
  c_tomo->add_option("--bin", tomo.bin, "Histogram bin width (ps)");

  std::string report_dir;
  auto* c_rep = app.add_subcommand("report", "Summarise a finished run directory");
  c_rep->add_option("run_dir", report_dir, "Run directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (c_sim->parsed()) return cmd_simulate(sim);
    if (c_cal->parsed()) return cmd_calibrate(cal);
    if (c_tomo->parsed()) return cmd_tomo(tomo);
    if (c_rep->parsed()) return cmd_report(report_dir);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return config_error;
  } catch (const InvalidArgument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return config_error;
  } catch (const io::IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return io_error;
  } catch (const FitError& e) {
    std::cerr << "fit error: " << e.what() << "\n";
    return fit_error;
  } catch (const MleError& e) {
    std::cerr << "reconstruction error: " << e.what() << "\n";
    return mle_error;
  } catch (const MissingArtifacts& e) {
    std::cerr << "missing artifacts: " << e.what() << "\n";
    return missing_artifacts;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return usage;
  }
  return usage;
}
