#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "franson_lab/analysis.hpp"
#include "franson_lab/simulate.hpp"
#include "franson_lab/tomography.hpp"

namespace franson_lab::io {

using json = nlohmann::ordered_json;

inline constexpr int schema_version = 1;

/// Raised when a file cannot be read or written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Files

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("cannot read " + path.string());
  return ss.str();
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.flush();
  if (!out) throw IoError("cannot write " + path.string());
}

/// Parses a JSON file; malformed content is a configuration error.
inline json read_json(const std::filesystem::path& path) {
  std::string text = read_text(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

inline std::string dump(const json& j) { return j.dump(2) + "\n"; }

inline void write_json(const std::filesystem::path& path, const json& j) {
  write_text(path, dump(j));
}

inline void ensure_directory(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir))
    throw IoError("cannot create directory " + dir.string());
}

// ---------------------------------------------------------------------------
// Number formatting

/// Shortest representation that round-trips.
inline void append_number(std::string& out, double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, res.ptr);
}

inline void append_number(std::string& out, std::int64_t v) {
  char buf[24];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, res.ptr);
}

inline void append_number(std::string& out, std::uint64_t v) {
  char buf[24];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, res.ptr);
}

inline std::string format_number(double v) {
  std::string s;
  append_number(s, v);
  return s;
}

/// Minimal CSV builder; cells are never quoted.
class CsvWriter {
 public:
  explicit CsvWriter(std::initializer_list<std::string_view> header) {
    bool first = true;
    for (auto h : header) {
      if (!first) text_ += ',';
      text_ += h;
      first = false;
    }
    text_ += '\n';
  }

  template <class... T>
  void row(const T&... cells) {
    bool first = true;
    ((cell(cells, first)), ...);
    text_ += '\n';
  }

  std::string& text() { return text_; }
  const std::string& str() const { return text_; }

 private:
  template <class T>
  void cell(const T& v, bool& first) {
    if (!first) text_ += ',';
    first = false;
    if constexpr (std::is_convertible_v<T, std::string_view>) {
      text_ += std::string_view(v);
    } else if constexpr (std::is_floating_point_v<T>) {
      append_number(text_, static_cast<double>(v));
    } else if constexpr (std::is_signed_v<T>) {
      append_number(text_, static_cast<std::int64_t>(v));
    } else {
      append_number(text_, static_cast<std::uint64_t>(v));
    }
  }

  std::string text_;
};

// ---------------------------------------------------------------------------
// Strict object reading

/// Reads members of a JSON object by name and rejects unknown keys.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string context) : j_(j), context_(std::move(context)) {
    if (!j_.is_object()) throw ConfigError(context_ + " must be a JSON object");
  }

  bool has(const std::string& key) const { return j_.contains(key) && !j_.at(key).is_null(); }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    if (!j_.contains(key)) throw ConfigError(context_ + "." + key + " is required");
    return j_.at(key);
  }

  template <class T>
  void get(const std::string& key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    out = convert<T>(j_.at(key), key);
  }

  template <class T>
  void get(const std::string& key, std::optional<T>& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    const json& v = j_.at(key);
    if (v.is_null())
      out.reset();
    else
      out = convert<T>(v, key);
  }

  template <class T>
  T require(const std::string& key) {
    seen_.insert(key);
    if (!j_.contains(key)) throw ConfigError(context_ + "." + key + " is required");
    return convert<T>(j_.at(key), key);
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) throw ConfigError(context_ + ": unknown field '" + it.key() + "'");
  }

  const std::string& context() const { return context_; }

 private:
  template <class T>
  T convert(const json& v, const std::string& key) const {
    const std::string where = context_ + "." + key;
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw ConfigError(where + " must be a boolean");
      return v.get<bool>();
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) throw ConfigError(where + " must be a number");
      return v.get<T>();
    } else if constexpr (std::is_integral_v<T> && std::is_unsigned_v<T>) {
      if (!v.is_number_unsigned()) throw ConfigError(where + " must be a non-negative integer");
      return v.get<T>();
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) throw ConfigError(where + " must be an integer");
      return v.get<T>();
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw ConfigError(where + " must be a string");
      return v.get<std::string>();
    } else {
      static_assert(sizeof(T) == 0, "unsupported field type");
    }
  }

  const json& j_;
  std::string context_;
  std::set<std::string> seen_;
};

/// Checks the top-level schema_version field.
inline void check_schema(ObjectReader& r) {
  int v = r.require<int>("schema_version");
  if (v != schema_version)
    throw ConfigError(r.context() + ": unsupported schema_version " + std::to_string(v));
}

// ---------------------------------------------------------------------------
// Experiment configuration

template <class T>
json optional_json(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

inline json to_json(const ExperimentConfig& c) {
  json anchors = json::array();
  for (const auto& a : c.visibility_anchors)
    anchors.push_back({{"bandwidth_nm", a.bandwidth_nm}, {"visibility", a.visibility}});
  return {
      {"schema_version", schema_version},
      {"rep_rate", c.rep_rate},
      {"tau_ps", c.tau_ps},
      {"pair_probability", c.pair_probability},
      {"squeezing", optional_json(c.squeezing)},
      {"phi_p", c.phi_p},
      {"heater_power_s", c.heater_power_s},
      {"heater_power_i", c.heater_power_i},
      {"heater_s", {{"kappa", c.heater_s.kappa}, {"phi0", c.heater_s.phi0}}},
      {"heater_i", {{"kappa", c.heater_i.kappa}, {"phi0", c.heater_i.phi0}}},
      {"long_arm_excess_loss_db", c.long_arm_excess_loss_db},
      {"voa_transmission_s", optional_json(c.voa_transmission_s)},
      {"voa_transmission_i", optional_json(c.voa_transmission_i)},
      {"signal_loss_db", c.signal_loss_db},
      {"idler_loss_db", c.idler_loss_db},
      {"detector_efficiency", c.detector_efficiency},
      {"jitter_sigma_ps", c.jitter_sigma_ps},
      {"dark_rate_hz", c.dark_rate_hz},
      {"acquisition_s", c.acquisition_s},
      {"routing", to_string(c.routing)},
      {"trigger_filter", to_string(c.trigger_filter)},
      {"visibility", optional_json(c.visibility)},
      {"bandwidth_nm", c.bandwidth_nm},
      {"visibility_anchors", anchors},
      {"rng_seed", c.rng_seed},
      {"block_pulses", c.block_pulses},
  };
}

inline ThermoOpticMap heater_from_json(const json& j, const std::string& ctx) {
  ObjectReader r(j, ctx);
  ThermoOpticMap m;
  r.get("kappa", m.kappa);
  r.get("phi0", m.phi0);
  r.finish();
  return m;
}

/// Reads a config document. Missing fields keep their defaults; unknown
/// fields, wrong types and failed validation raise ConfigError.
inline ExperimentConfig experiment_config_from_json(const json& j, bool require_schema = true) {
  ObjectReader r(j, "config");
  if (require_schema)
    check_schema(r);
  else if (r.has("schema_version"))
    check_schema(r);
  ExperimentConfig c;
  r.get("rep_rate", c.rep_rate);
  r.get("tau_ps", c.tau_ps);
  r.get("pair_probability", c.pair_probability);
  r.get("squeezing", c.squeezing);
  r.get("phi_p", c.phi_p);
  r.get("heater_power_s", c.heater_power_s);
  r.get("heater_power_i", c.heater_power_i);
  if (r.has("heater_s")) c.heater_s = heater_from_json(r.raw("heater_s"), "config.heater_s");
  if (r.has("heater_i")) c.heater_i = heater_from_json(r.raw("heater_i"), "config.heater_i");
  r.get("long_arm_excess_loss_db", c.long_arm_excess_loss_db);
  r.get("voa_transmission_s", c.voa_transmission_s);
  r.get("voa_transmission_i", c.voa_transmission_i);
  r.get("signal_loss_db", c.signal_loss_db);
  r.get("idler_loss_db", c.idler_loss_db);
  r.get("detector_efficiency", c.detector_efficiency);
  r.get("jitter_sigma_ps", c.jitter_sigma_ps);
  r.get("dark_rate_hz", c.dark_rate_hz);
  r.get("acquisition_s", c.acquisition_s);
  std::string routing = to_string(c.routing), filter = to_string(c.trigger_filter);
  r.get("routing", routing);
  r.get("trigger_filter", filter);
  c.routing = routing_from_string(routing);
  c.trigger_filter = trigger_filter_from_string(filter);
  r.get("visibility", c.visibility);
  r.get("bandwidth_nm", c.bandwidth_nm);
  if (r.has("visibility_anchors")) {
    const json& a = r.raw("visibility_anchors");
    if (!a.is_array()) throw ConfigError("config.visibility_anchors must be an array");
    c.visibility_anchors.clear();
    for (std::size_t k = 0; k < a.size(); ++k) {
      ObjectReader ar(a[k], "config.visibility_anchors[" + std::to_string(k) + "]");
      VisibilityAnchor v;
      v.bandwidth_nm = ar.require<double>("bandwidth_nm");
      v.visibility = ar.require<double>("visibility");
      ar.finish();
      c.visibility_anchors.push_back(v);
    }
  }
  r.get("rng_seed", c.rng_seed);
  r.get("block_pulses", c.block_pulses);
  r.finish();
  c.validate();
  return c;
}

inline ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  return experiment_config_from_json(read_json(path));
}

// ---------------------------------------------------------------------------
// Time tags and histograms

inline std::string time_tags_csv(const TimeTagStream& s) {
  std::string out = "channel,timestamp_ps\n";
  out.reserve(out.size() + s.tags.size() * 20);
  for (const auto& t : s.tags) {
    out += channel_name(t.channel);
    out += ',';
    append_number(out, t.time_ps);
    out += '\n';
  }
  return out;
}

inline Channel channel_from_name(std::string_view name) {
  if (name == "trigger") return Channel::trigger;
  if (name == "signal") return Channel::signal;
  if (name == "idler") return Channel::idler;
  throw ConfigError("unknown channel '" + std::string(name) + "'");
}

inline std::vector<TimeTag> parse_time_tags_csv(const std::string& text) {
  std::vector<TimeTag> tags;
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "channel,timestamp_ps")
    throw ConfigError("time-tag CSV must start with 'channel,timestamp_ps'");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto comma = line.find(',');
    if (comma == std::string::npos) throw ConfigError("malformed time-tag line: " + line);
    TimeTag t;
    t.channel = channel_from_name(std::string_view(line).substr(0, comma));
    const char* b = line.data() + comma + 1;
    const char* e = line.data() + line.size();
    auto res = std::from_chars(b, e, t.time_ps);
    if (res.ec != std::errc() || res.ptr != e) throw ConfigError("malformed timestamp: " + line);
    tags.push_back(t);
  }
  return tags;
}

inline std::string triples_csv(const std::vector<TripleRecord>& records) {
  CsvWriter w({"dt_signal_ps", "dt_idler_ps"});
  for (const auto& r : records) w.row(r.dt_signal, r.dt_idler);
  return w.str();
}

/// Count matrix: first column holds the signal-delay bin centre, the header
/// row the idler-delay bin centres.
inline std::string histogram_csv(const Histogram2D& h) {
  std::string out = "signal_ps/idler_ps";
  auto centre = [&](int k) { return h.origin_ps + (k + 0.5) * h.bin_width; };
  for (int c = 0; c < h.bins; ++c) {
    out += ',';
    append_number(out, centre(c));
  }
  out += '\n';
  for (int r = 0; r < h.bins; ++r) {
    append_number(out, centre(r));
    for (int c = 0; c < h.bins; ++c) {
      out += ',';
      append_number(out, h.at(r, c));
    }
    out += '\n';
  }
  return out;
}

inline json region_counts_json(const std::array<std::uint64_t, 9>& counts) {
  json j = json::object();
  for (int k = 0; k < 9; ++k) j[std::string(regions::names[k])] = counts[k];
  return j;
}

inline json to_json(const Collapsed1D& c) {
  return {{"peaks", c.peaks}, {"corner_el", c.corner_el}, {"corner_le", c.corner_le}};
}

inline json region_summary_json(const Histogram2D& h) {
  return {
      {"schema_version", schema_version},
      {"bin_width_ps", h.bin_width},
      {"tau_ps", h.tau_ps},
      {"origin_ps", h.origin_ps},
      {"bins", h.bins},
      {"records", h.records},
      {"assigned", h.assigned()},
      {"unassigned", h.unassigned},
      {"out_of_range", h.out_of_range},
      {"sigma_ps", h.sigma_ps},
      {"sigma_fitted", h.sigma_fitted},
      {"radius_ps", h.radius_ps},
      {"regions", region_counts_json(h.region_counts)},
      {"collapsed", to_json(collapse_histogram(h))},
  };
}

/// Five-peak view: centre delay (mean of both channels) and counts.
inline std::string collapsed_csv(const Collapsed1D& c, double tau_ps) {
  static constexpr std::array<std::string_view, 5> labels = {"EE", "ET+TE", "TT", "TL+LT", "LL"};
  CsvWriter w({"peak", "label", "delay_ps", "counts"});
  for (int k = 0; k < 5; ++k) w.row(k, labels[k], 0.5 * k * tau_ps, c.peaks[k]);
  w.row(5, "EL", tau_ps, c.corner_el);
  w.row(6, "LE", tau_ps, c.corner_le);
  return w.str();
}

inline std::string profile_csv(const std::vector<Sample>& profile) {
  CsvWriter w({"delay_ps", "counts"});
  for (const auto& s : profile) w.row(s.x, s.y);
  return w.str();
}

// ---------------------------------------------------------------------------
// Measurement records

inline json to_json(const MeasurementRecord& r) {
  json counts = json::object();
  for (int k = 0; k < 9; ++k) counts[std::string(regions::names[k])] = r.counts[k];
  return {{"phi_s", r.phi_s}, {"phi_i", r.phi_i}, {"acquisition_s", r.acquisition_s},
          {"counts", counts}};
}

inline MeasurementRecord measurement_record_from_json(const json& j, const std::string& ctx) {
  ObjectReader r(j, ctx);
  MeasurementRecord m;
  m.phi_s = r.require<double>("phi_s");
  m.phi_i = r.require<double>("phi_i");
  r.get("acquisition_s", m.acquisition_s);
  ObjectReader c(r.raw("counts"), ctx + ".counts");
  for (int k = 0; k < 9; ++k) c.get(std::string(regions::names[k]), m.counts[k]);
  c.finish();
  r.finish();
  for (double v : m.counts)
    if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError(ctx + ": counts must be finite and >= 0");
  return m;
}

inline json to_json(const MleConfig& c) {
  return {{"tolerance", c.tolerance},
          {"max_iterations", c.max_iterations},
          {"restarts", c.restarts},
          {"mc_restarts", c.mc_restarts},
          {"region_acceptance", c.region_acceptance},
          {"corner_weight", c.corner_weight},
          {"use_corner_regions", c.use_corner_regions}};
}

inline void read_mle_options(const json& j, MleConfig& c) {
  ObjectReader r(j, "mle");
  r.get("tolerance", c.tolerance);
  r.get("max_iterations", c.max_iterations);
  r.get("restarts", c.restarts);
  r.get("mc_restarts", c.mc_restarts);
  r.get("region_acceptance", c.region_acceptance);
  r.get("corner_weight", c.corner_weight);
  r.get("use_corner_regions", c.use_corner_regions);
  r.finish();
}

struct RecordSet {
  std::vector<MeasurementRecord> records;
  MleConfig mle;
};

inline json to_json(const RecordSet& s) {
  json recs = json::array();
  for (const auto& r : s.records) recs.push_back(to_json(r));
  return {{"schema_version", schema_version}, {"records", recs}, {"mle", to_json(s.mle)}};
}

inline RecordSet record_set_from_json(const json& j) {
  ObjectReader r(j, "records_file");
  check_schema(r);
  RecordSet s;
  const json& recs = r.raw("records");
  if (!recs.is_array() || recs.empty()) throw ConfigError("records must be a non-empty array");
  for (std::size_t k = 0; k < recs.size(); ++k)
    s.records.push_back(measurement_record_from_json(recs[k], "records[" + std::to_string(k) + "]"));
  if (r.has("mle")) read_mle_options(r.raw("mle"), s.mle);
  r.finish();
  s.mle.validate();
  return s;
}

// ---------------------------------------------------------------------------
// Fit reports

inline json to_json(const FringeFit& f) {
  return {{"visibility", f.visibility},         {"visibility_error", f.visibility_error},
          {"offset", f.offset},                 {"offset_error", f.offset_error},
          {"amplitude", f.amplitude},           {"phase", f.phase},
          {"phase_error", f.phase_error},       {"objective", f.objective}};
}

inline json matrix_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

inline json to_json(const CalibrationFit& f) {
  return {
      {"parameters",
       {{"offset", f.offset},
        {"visibility", f.visibility},
        {"kappa_s", f.kappa_s},
        {"kappa_i", f.kappa_i},
        {"phi0_s", f.phi0_s},
        {"phi0_i", f.phi0_i},
        {"phi_p", f.phi_p}}},
      {"errors",
       {{"visibility", f.visibility_error()},
        {"kappa_s", f.kappa_s_error()},
        {"kappa_i", f.kappa_i_error()},
        {"phi_p", f.phi_p_error()}}},
      {"covariance_order", {"offset", "visibility", "kappa_s", "kappa_i", "phi_p"}},
      {"covariance", matrix_json(f.covariance)},
      {"objective", f.objective},
      {"residual_norm", f.residual_norm},
      {"iterations", f.iterations},
      {"points", f.points},
  };
}

inline CalibrationFit calibration_fit_from_json(const json& j) {
  if (!j.is_object() || !j.contains("parameters")) throw ConfigError("calibration JSON lacks parameters");
  const json& p = j.at("parameters");
  CalibrationFit f;
  try {
    f.offset = p.at("offset").get<double>();
    f.visibility = p.at("visibility").get<double>();
    f.kappa_s = p.at("kappa_s").get<double>();
    f.kappa_i = p.at("kappa_i").get<double>();
    f.phi0_s = p.at("phi0_s").get<double>();
    f.phi0_i = p.at("phi0_i").get<double>();
    f.phi_p = p.at("phi_p").get<double>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("calibration JSON: ") + e.what());
  }
  return f;
}

inline std::vector<MapPoint> map_points_from_json(const json& a) {
  if (!a.is_array()) throw ConfigError("points must be an array");
  std::vector<MapPoint> pts;
  for (std::size_t k = 0; k < a.size(); ++k) {
    ObjectReader r(a[k], "points[" + std::to_string(k) + "]");
    MapPoint p;
    p.power_s = r.require<double>("power_s");
    p.power_i = r.require<double>("power_i");
    p.counts = r.require<double>("counts");
    r.finish();
    pts.push_back(p);
  }
  return pts;
}

// ---------------------------------------------------------------------------
// Tomography results

inline json density_matrix_json(const DensityMatrix4& rho) {
  json re = json::array(), im = json::array();
  const Matrix4c& m = rho.matrix();
  for (int r = 0; r < 4; ++r) {
    json a = json::array(), b = json::array();
    for (int c = 0; c < 4; ++c) {
      a.push_back(m(r, c).real());
      b.push_back(m(r, c).imag());
    }
    re.push_back(a);
    im.push_back(b);
  }
  return {{"basis", {"EE", "EL", "LE", "LL"}}, {"real", re}, {"imag", im}};
}

inline json to_json(const StateMetrics& m) {
  return {{"fidelity", m.fidelity},
          {"concurrence", m.concurrence},
          {"entropy", m.entropy},
          {"reduced_entropy", m.reduced_entropy},
          {"chsh", m.chsh},
          {"purity", m.purity},
          {"chsh_violation", m.chsh_violation},
          {"concurrence_above_chsh_threshold", m.concurrence_above_chsh_threshold}};
}

inline json to_json(const MetricDistribution& d) { return {{"mean", d.mean}, {"std", d.std}}; }

inline json to_json(const MonteCarloSummary& s) {
  return {{"trials", s.trials},
          {"failures", s.failures},
          {"fidelity", to_json(s.fidelity)},
          {"concurrence", to_json(s.concurrence)},
          {"entropy", to_json(s.entropy)},
          {"purity", to_json(s.purity)},
          {"chsh", to_json(s.chsh)}};
}

inline json to_json(const TomographyResult& r) {
  return {{"schema_version", schema_version},
          {"rho", density_matrix_json(r.rho)},
          {"metrics", to_json(r.metrics)},
          {"monte_carlo", to_json(r.monte_carlo)},
          {"log_likelihood", r.log_likelihood},
          {"iterations", r.iterations},
          {"converged_starts", r.converged_starts},
          {"informational_rank", r.informational_rank},
          {"informationally_complete", r.informationally_complete},
          {"ambiguity", r.ambiguity},
          {"corner_counts", r.corner_counts},
          {"corner_fraction", r.corner_fraction}};
}

/// Equal-width histogram of Monte-Carlo samples.
inline std::string metric_histogram_csv(const MetricDistribution& d, int bins = 50) {
  CsvWriter w({"bin_low", "bin_high", "count"});
  if (d.samples.empty()) return w.str();
  auto [lo_it, hi_it] = std::minmax_element(d.samples.begin(), d.samples.end());
  double lo = *lo_it, hi = *hi_it;
  if (hi <= lo) {
    w.row(lo, hi, d.samples.size());
    return w.str();
  }
  std::vector<std::uint64_t> h(static_cast<std::size_t>(bins), 0);
  const double width = (hi - lo) / bins;
  for (double v : d.samples) {
    int k = std::min(bins - 1, static_cast<int>((v - lo) / width));
    ++h[static_cast<std::size_t>(k)];
  }
  for (int k = 0; k < bins; ++k) w.row(lo + k * width, lo + (k + 1) * width, h[k]);
  return w.str();
}

}  // namespace franson_lab::io
