// Config ingestion and result persistence: JSON scenario configs, CSV series,
// report bundles, and deterministic SVG charts.
//
// Files always carry SI units. Configs may attach explicit unit suffixes to
// numeric fields ("325 MHz", "10 cm", "5 %", "30 deg"); they are normalized
// on load. Doubles are written with %.17g so files round-trip exactly.

#pragma once

#include <surfscat/experiments.hpp>

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace surfscat::io {

using Json = nlohmann::json;
using numerics::Complex;
using numerics::ComplexVector;

// Config-shaped problems (bad field, bad unit, missing file) map to usage
// errors in the CLI; OverwriteError asks for --force.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct OverwriteError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

[[noreturn]] inline void fail(const std::string& where, const std::string& what) {
  throw ConfigError(where + ": " + what);
}

inline std::string trimmed(std::string s) {
  const auto notspace = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), notspace));
  s.erase(std::find_if(s.rbegin(), s.rend(), notspace).base(), s.end());
  return s;
}

struct Unit {
  const char* suffix;
  double scale;
};

// A number is taken as already-SI; a string must be "<number> <suffix>" with
// a suffix from the table (or no suffix at all).
inline double parse_quantity(const Json& v, const std::string& where,
                             std::initializer_list<Unit> units) {
  if (v.is_number()) return v.get<double>();
  if (!v.is_string()) fail(where, "expected a number or \"<value> <unit>\" string");
  const std::string s = trimmed(v.get<std::string>());
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr == s.data()) {
    fail(where, "cannot parse a number from \"" + s + "\"");
  }
  const std::string suffix = trimmed(std::string(ptr, s.data() + s.size()));
  if (suffix.empty()) return value;
  for (const Unit& u : units) {
    if (suffix == u.suffix) return value * u.scale;
  }
  std::string known;
  for (const Unit& u : units) {
    if (!known.empty()) known += ", ";
    known += u.suffix;
  }
  fail(where, "unknown unit \"" + suffix + "\" (accepted: " + known + ")");
}

}  // namespace detail

inline double parse_frequency(const Json& v, const std::string& where) {
  return detail::parse_quantity(
      v, where, {{"Hz", 1.0}, {"kHz", 1e3}, {"MHz", 1e6}, {"GHz", 1e9}});
}

inline double parse_length(const Json& v, const std::string& where) {
  return detail::parse_quantity(v, where, {{"m", 1.0}, {"cm", 1e-2}, {"mm", 1e-3}});
}

inline double parse_fraction(const Json& v, const std::string& where) {
  return detail::parse_quantity(v, where, {{"%", 1e-2}});
}

inline double parse_angle(const Json& v, const std::string& where) {
  return detail::parse_quantity(
      v, where, {{"rad", 1.0}, {"deg", numerics::pi / 180.0}});
}

namespace detail {

inline const Json& member(const Json& obj, const char* key,
                          const std::string& where) {
  const auto it = obj.find(key);
  if (it == obj.end()) fail(where, std::string("missing required field \"") + key + "\"");
  return *it;
}

inline const Json* opt(const Json& obj, const char* key) {
  const auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

inline void check_object(const Json& obj, const std::string& where,
                         std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) fail(where, "expected an object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed) ok = ok || it.key() == k;
    if (!ok) fail(where + "." + it.key(), "unknown field");
  }
}

inline double parse_plain(const Json& v, const std::string& where) {
  if (!v.is_number()) fail(where, "expected a number");
  return v.get<double>();
}

inline int parse_int(const Json& v, const std::string& where) {
  if (!v.is_number_integer()) fail(where, "expected an integer");
  return v.get<int>();
}

inline std::uint64_t parse_seed(const Json& v, const std::string& where) {
  if (!(v.is_number_unsigned() ||
        (v.is_number_integer() && v.get<std::int64_t>() >= 0))) {
    fail(where, "expected an unsigned integer");
  }
  return v.get<std::uint64_t>();
}

inline bool parse_bool(const Json& v, const std::string& where) {
  if (!v.is_boolean()) fail(where, "expected true or false");
  return v.get<bool>();
}

inline std::string parse_string(const Json& v, const std::string& where) {
  if (!v.is_string()) fail(where, "expected a string");
  return v.get<std::string>();
}

}  // namespace detail

// A scenario config plus the CLI-level extras that sit outside run_scenario.
struct ExperimentSpec {
  experiments::ScenarioConfig scenario;
  bool compare_single = false;  // also invert at the top frequency alone
  std::string measurements;     // CSV path; empty means synthesize
};

namespace detail {

inline experiments::SurfaceSpec load_surface(const Json& j, const std::string& where) {
  if (!j.is_object()) fail(where, "expected an object");
  const std::string kind = parse_string(member(j, "kind", where), where + ".kind");
  if (kind == "random") {
    check_object(j, where, {"kind", "corr_length", "height_std", "domain_length",
                            "grid_count", "edge_taper", "seed"});
    experiments::RandomSurfaceSpec s;
    s.params.corr_length =
        parse_length(member(j, "corr_length", where), where + ".corr_length");
    s.params.height_std =
        parse_length(member(j, "height_std", where), where + ".height_std");
    if (const Json* v = opt(j, "domain_length"))
      s.params.domain_length = parse_length(*v, where + ".domain_length");
    if (const Json* v = opt(j, "grid_count"))
      s.params.grid_count = parse_int(*v, where + ".grid_count");
    if (const Json* v = opt(j, "edge_taper"))
      s.params.edge_taper = parse_length(*v, where + ".edge_taper");
    if (const Json* v = opt(j, "seed")) s.seed = parse_seed(*v, where + ".seed");
    return s;
  }
  if (kind == "triangular") {
    check_object(j, where, {"kind", "domain_length", "grid_count"});
    experiments::TriangularSurfaceSpec s;
    if (const Json* v = opt(j, "domain_length"))
      s.domain_length = parse_length(*v, where + ".domain_length");
    if (const Json* v = opt(j, "grid_count"))
      s.grid_count = parse_int(*v, where + ".grid_count");
    return s;
  }
  if (kind == "coefficients") {
    check_object(j, where, {"kind", "values", "domain_length", "grid_count"});
    experiments::CoefficientSurfaceSpec s;
    const Json& vals = member(j, "values", where);
    if (!vals.is_array()) fail(where + ".values", "expected an array");
    for (std::size_t i = 0; i < vals.size(); ++i) {
      s.coeffs.push_back(
          parse_length(vals[i], where + ".values[" + std::to_string(i) + "]"));
    }
    if (const Json* v = opt(j, "domain_length"))
      s.domain_length = parse_length(*v, where + ".domain_length");
    if (const Json* v = opt(j, "grid_count"))
      s.grid_count = parse_int(*v, where + ".grid_count");
    return s;
  }
  fail(where + ".kind", "expected \"random\", \"triangular\" or \"coefficients\"");
}

inline forward::Medium load_medium(const Json& j, const std::string& where,
                                   forward::Medium base) {
  check_object(j, where, {"eps_r", "mu_r", "sigma"});
  if (const Json* v = opt(j, "eps_r")) base.eps_r = parse_plain(*v, where + ".eps_r");
  if (const Json* v = opt(j, "mu_r")) base.mu_r = parse_plain(*v, where + ".mu_r");
  if (const Json* v = opt(j, "sigma")) base.sigma = parse_plain(*v, where + ".sigma");
  return base;
}

}  // namespace detail

inline ExperimentSpec load_experiment_spec(const Json& doc,
                                           const std::string& where = "$") {
  using namespace detail;
  check_object(doc, where,
               {"name", "surface", "media", "wave", "receivers", "schedule",
                "inverse", "noise", "mesh_factor", "sweep", "profile_samples",
                "compare_single_frequency", "measurements"});
  ExperimentSpec spec;
  experiments::ScenarioConfig& c = spec.scenario;

  if (const Json* v = opt(doc, "name"))
    c.name = parse_string(*v, where + ".name");
  c.surface = load_surface(member(doc, "surface", where), where + ".surface");

  if (const Json* v = opt(doc, "media")) {
    check_object(*v, where + ".media", {"upper", "lower"});
    if (const Json* u = opt(*v, "upper"))
      c.upper = load_medium(*u, where + ".media.upper", c.upper);
    if (const Json* l = opt(*v, "lower"))
      c.lower = load_medium(*l, where + ".media.lower", c.lower);
  }
  if (const Json* v = opt(doc, "wave")) {
    check_object(*v, where + ".wave", {"angle", "taper"});
    if (const Json* a = opt(*v, "angle"))
      c.wave.angle = parse_angle(*a, where + ".wave.angle");
    if (const Json* t = opt(*v, "taper"))
      c.wave.taper = parse_length(*t, where + ".wave.taper");
  }
  if (const Json* v = opt(doc, "receivers")) {
    check_object(*v, where + ".receivers",
                 {"x_start", "x_end", "spacing", "height", "include_endpoint"});
    if (const Json* f = opt(*v, "x_start"))
      c.receivers.x_start = parse_length(*f, where + ".receivers.x_start");
    if (const Json* f = opt(*v, "x_end"))
      c.receivers.x_end = parse_length(*f, where + ".receivers.x_end");
    if (const Json* f = opt(*v, "spacing"))
      c.receivers.spacing = parse_length(*f, where + ".receivers.spacing");
    if (const Json* f = opt(*v, "height"))
      c.receivers.height = parse_length(*f, where + ".receivers.height");
    if (const Json* f = opt(*v, "include_endpoint"))
      c.receivers.include_endpoint =
          parse_bool(*f, where + ".receivers.include_endpoint");
  }
  if (const Json* v = opt(doc, "schedule")) {
    check_object(*v, where + ".schedule", {"start", "step", "stop"});
    c.schedule.start =
        parse_frequency(member(*v, "start", where + ".schedule"), where + ".schedule.start");
    c.schedule.stop =
        parse_frequency(member(*v, "stop", where + ".schedule"), where + ".schedule.stop");
    if (const Json* s = opt(*v, "step"))
      c.schedule.step = parse_frequency(*s, where + ".schedule.step");
    else
      c.schedule.step = c.schedule.stop - c.schedule.start > 0.0
                            ? c.schedule.stop - c.schedule.start
                            : c.schedule.start;
  }
  if (const Json* v = opt(doc, "inverse")) {
    check_object(*v, where + ".inverse",
                 {"tau", "step_threshold", "max_iterations", "spline_count",
                  "spline_order", "points_per_wavelength"});
    if (const Json* f = opt(*v, "tau"))
      c.inverse.tau = parse_plain(*f, where + ".inverse.tau");
    if (const Json* f = opt(*v, "step_threshold"))
      c.inverse.step_threshold = parse_length(*f, where + ".inverse.step_threshold");
    if (const Json* f = opt(*v, "max_iterations"))
      c.inverse.max_iterations = parse_int(*f, where + ".inverse.max_iterations");
    if (const Json* f = opt(*v, "spline_count"))
      c.inverse.spline_count = parse_int(*f, where + ".inverse.spline_count");
    if (const Json* f = opt(*v, "spline_order"))
      c.inverse.spline_order = parse_int(*f, where + ".inverse.spline_order");
    if (const Json* f = opt(*v, "points_per_wavelength"))
      c.inverse.points_per_wavelength =
          parse_plain(*f, where + ".inverse.points_per_wavelength");
  }
  if (const Json* v = opt(doc, "noise")) {
    check_object(*v, where + ".noise", {"level", "seed"});
    if (const Json* f = opt(*v, "level"))
      c.noise_level = parse_fraction(*f, where + ".noise.level");
    if (const Json* f = opt(*v, "seed"))
      c.noise_seed = parse_seed(*f, where + ".noise.seed");
  }
  if (const Json* v = opt(doc, "mesh_factor"))
    c.mesh_factor = parse_int(*v, where + ".mesh_factor");
  if (const Json* v = opt(doc, "profile_samples"))
    c.profile_samples = parse_int(*v, where + ".profile_samples");

  if (const Json* v = opt(doc, "sweep")) {
    check_object(*v, where + ".sweep", {"axis", "values"});
    const std::string axis =
        parse_string(member(*v, "axis", where + ".sweep"), where + ".sweep.axis");
    const Json& vals = member(*v, "values", where + ".sweep");
    if (!vals.is_array() || vals.empty())
      fail(where + ".sweep.values", "expected a non-empty array");
    for (std::size_t i = 0; i < vals.size(); ++i) {
      const std::string at = where + ".sweep.values[" + std::to_string(i) + "]";
      if (axis == "frequency_step") {
        c.sweep = experiments::SweepAxis::frequency_step;
        c.sweep_values.push_back(parse_frequency(vals[i], at));
      } else if (axis == "noise_level") {
        c.sweep = experiments::SweepAxis::noise_level;
        c.sweep_values.push_back(parse_fraction(vals[i], at));
      } else if (axis == "receiver_spacing") {
        c.sweep = experiments::SweepAxis::receiver_spacing;
        c.sweep_values.push_back(parse_length(vals[i], at));
      } else {
        fail(where + ".sweep.axis",
             "expected \"frequency_step\", \"noise_level\" or \"receiver_spacing\"");
      }
    }
  }

  if (const Json* v = opt(doc, "compare_single_frequency"))
    spec.compare_single = detail::parse_bool(*v, where + ".compare_single_frequency");
  if (const Json* v = opt(doc, "measurements"))
    spec.measurements = detail::parse_string(*v, where + ".measurements");
  return spec;
}

inline ExperimentSpec load_experiment_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  Json doc;
  try {
    doc = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return load_experiment_spec(doc);
}

// --seed replaces every realization seed in the config: the random-surface
// seed (when the surface is random) and the noise seed.
inline void apply_seed_override(ExperimentSpec& spec, std::uint64_t seed) {
  if (auto* r = std::get_if<experiments::RandomSurfaceSpec>(&spec.scenario.surface)) {
    r->seed = seed;
  }
  spec.scenario.noise_seed = seed;
}

// ---------------------------------------------------------------------------
// Formatting and low-level file helpers.

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace detail {

inline std::string fmt6(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

inline std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  return out;
}

}  // namespace detail

inline void write_text_file(const std::filesystem::path& path,
                            const std::string& content) {
  auto out = detail::open_out(path);
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

inline void write_csv(const std::filesystem::path& path,
                      const std::vector<std::string>& header,
                      const std::vector<std::vector<double>>& rows) {
  std::string body;
  for (std::size_t i = 0; i < header.size(); ++i) {
    body += (i ? "," : "") + header[i];
  }
  body += '\n';
  for (const auto& row : rows) {
    if (row.size() != header.size()) {
      throw std::invalid_argument("write_csv: row width != header width");
    }
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) body += ',';
      body += format_double(row[i]);
    }
    body += '\n';
  }
  write_text_file(path, body);
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  int column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return static_cast<int>(i);
    }
    return -1;
  }
};

inline CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  CsvTable t;
  std::string line;
  auto split = [](const std::string& s) {
    std::vector<std::string> cells;
    std::size_t pos = 0;
    while (true) {
      const std::size_t comma = s.find(',', pos);
      cells.push_back(s.substr(pos, comma - pos));
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    return cells;
  };
  if (!std::getline(in, line)) {
    throw std::runtime_error(path.string() + ": empty CSV");
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  t.header = split(line);
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != t.header.size()) {
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                               ": expected " + std::to_string(t.header.size()) +
                               " cells");
    }
    std::vector<double> row(cells.size());
    for (std::size_t i = 0; i < cells.size(); ++i) {
      const std::string cell = detail::trimmed(cells[i]);
      const auto [ptr, ec] =
          std::from_chars(cell.data(), cell.data() + cell.size(), row[i]);
      if (ec != std::errc{} || ptr != cell.data() + cell.size()) {
        throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                                 ": bad number \"" + cell + "\"");
      }
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

// ---------------------------------------------------------------------------
// Measurement sets as CSV (cmd_forward output, cmd_reconstruct input).
// Columns: frequency_hz, receiver_x, receiver_height, re, im. Rows grouped by
// frequency in ascending file order, receivers in array order inside a group.

inline void write_measurements(const std::filesystem::path& path,
                               const experiments::MeasurementSet& set) {
  std::vector<std::vector<double>> rows;
  rows.reserve(set.frequencies.size() * set.receivers.x.size());
  for (std::size_t m = 0; m < set.frequencies.size(); ++m) {
    for (std::size_t j = 0; j < set.receivers.x.size(); ++j) {
      rows.push_back({set.frequencies[m], set.receivers.x[j],
                      set.receivers.height, set.fields[m][j].real(),
                      set.fields[m][j].imag()});
    }
  }
  write_csv(path, {"frequency_hz", "receiver_x", "receiver_height", "re", "im"},
            rows);
}

inline experiments::MeasurementSet read_measurements(
    const std::filesystem::path& path) {
  const CsvTable t = read_csv(path);
  const int cf = t.column("frequency_hz"), cx = t.column("receiver_x"),
            ch = t.column("receiver_height"), cr = t.column("re"),
            ci = t.column("im");
  if (cf < 0 || cx < 0 || ch < 0 || cr < 0 || ci < 0) {
    throw std::runtime_error(path.string() + ": missing measurement columns");
  }
  if (t.rows.empty()) throw std::runtime_error(path.string() + ": no samples");

  experiments::MeasurementSet set;
  set.receivers.height = t.rows.front()[ch];
  std::size_t i = 0;
  while (i < t.rows.size() && t.rows[i][cf] == t.rows.front()[cf]) {
    set.receivers.x.push_back(t.rows[i][cx]);
    ++i;
  }
  const std::size_t per = i;
  if (per == 0 || t.rows.size() % per != 0) {
    throw std::runtime_error(path.string() + ": ragged frequency blocks");
  }
  for (std::size_t start = 0; start < t.rows.size(); start += per) {
    const double f = t.rows[start][cf];
    if (!set.frequencies.empty() && !(f > set.frequencies.back())) {
      throw std::runtime_error(path.string() + ": frequencies must ascend");
    }
    ComplexVector u(static_cast<Eigen::Index>(per));
    for (std::size_t j = 0; j < per; ++j) {
      const auto& row = t.rows[start + j];
      if (row[cf] != f || row[cx] != set.receivers.x[j] ||
          row[ch] != set.receivers.height) {
        throw std::runtime_error(path.string() + ": inconsistent receiver grid");
      }
      u[static_cast<Eigen::Index>(j)] = Complex(row[cr], row[ci]);
    }
    set.frequencies.push_back(f);
    set.fields.push_back(std::move(u));
  }
  return set;
}

// ---------------------------------------------------------------------------
// Report bundle: report.json + err_curve.csv + per-point profile CSVs.

// Final profile error; relative (the usual metric) when the reference carries
// power, absolute RMS for a degenerate flat reference, tagged accordingly.
struct ProfileError {
  double value = std::numeric_limits<double>::quiet_NaN();
  const char* kind = "relative";
};

inline ProfileError profile_error(const std::vector<double>& rec,
                                  const std::vector<double>& ref) {
  ProfileError e;
  if (rec.empty() || rec.size() != ref.size()) return e;
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < rec.size(); ++i) {
    num += (rec[i] - ref[i]) * (rec[i] - ref[i]);
    den += ref[i] * ref[i];
  }
  if (den > 0.0) {
    e.value = std::sqrt(num / den);
    e.kind = "relative";
  } else {
    e.value = std::sqrt(num / static_cast<double>(rec.size()));
    e.kind = "absolute_rms";
  }
  return e;
}

namespace detail {

inline std::string mhz_tag(double f_hz) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", f_hz / 1e6);
  return buf;
}

inline std::string profile_stem(std::size_t n_points, std::size_t idx,
                                double f_hz, bool single) {
  std::string stem = "profile_";
  if (n_points > 1) stem += "p" + std::to_string(idx) + "_";
  if (single) stem += "single_";
  stem += "f" + mhz_tag(f_hz);
  return stem;
}

inline const char* sweep_axis_name(experiments::SweepAxis axis) {
  switch (axis) {
    case experiments::SweepAxis::frequency_step: return "frequency_step";
    case experiments::SweepAxis::noise_level: return "noise_level";
    case experiments::SweepAxis::receiver_spacing: return "receiver_spacing";
    case experiments::SweepAxis::none: break;
  }
  return "none";
}

}  // namespace detail

inline Json config_to_json(const ExperimentSpec& spec) {
  const experiments::ScenarioConfig& c = spec.scenario;
  Json j;
  j["name"] = c.name;

  Json s;
  if (const auto* r = std::get_if<experiments::RandomSurfaceSpec>(&c.surface)) {
    s["kind"] = "random";
    s["corr_length"] = r->params.corr_length;
    s["height_std"] = r->params.height_std;
    s["domain_length"] = r->params.domain_length;
    s["grid_count"] = r->params.grid_count;
    s["edge_taper"] = r->params.edge_taper;
    s["seed"] = r->seed;
  } else if (const auto* t =
                 std::get_if<experiments::TriangularSurfaceSpec>(&c.surface)) {
    s["kind"] = "triangular";
    s["domain_length"] = t->domain_length;
    s["grid_count"] = t->grid_count;
  } else {
    const auto& e = std::get<experiments::CoefficientSurfaceSpec>(c.surface);
    s["kind"] = "coefficients";
    s["values"] = e.coeffs;
    s["domain_length"] = e.domain_length;
    s["grid_count"] = e.grid_count;
  }
  j["surface"] = std::move(s);

  j["media"]["upper"] = {{"eps_r", c.upper.eps_r}, {"mu_r", c.upper.mu_r},
                         {"sigma", c.upper.sigma}};
  j["media"]["lower"] = {{"eps_r", c.lower.eps_r}, {"mu_r", c.lower.mu_r},
                         {"sigma", c.lower.sigma}};
  j["wave"] = {{"angle", c.wave.angle}, {"taper", c.wave.taper}};
  j["receivers"] = {{"x_start", c.receivers.x_start},
                    {"x_end", c.receivers.x_end},
                    {"spacing", c.receivers.spacing},
                    {"height", c.receivers.height},
                    {"include_endpoint", c.receivers.include_endpoint}};
  j["schedule"] = {{"start", c.schedule.start},
                   {"step", c.schedule.step},
                   {"stop", c.schedule.stop}};
  j["inverse"] = {{"tau", c.inverse.tau},
                  {"step_threshold", c.inverse.step_threshold},
                  {"max_iterations", c.inverse.max_iterations},
                  {"spline_count", c.inverse.spline_count},
                  {"spline_order", c.inverse.spline_order},
                  {"points_per_wavelength", c.inverse.points_per_wavelength}};
  j["noise"] = {{"level", c.noise_level}, {"seed", c.noise_seed}};
  j["mesh_factor"] = c.mesh_factor;
  j["profile_samples"] = c.profile_samples;
  if (c.sweep != experiments::SweepAxis::none) {
    j["sweep"] = {{"axis", detail::sweep_axis_name(c.sweep)},
                  {"values", c.sweep_values}};
  }
  if (spec.compare_single) j["compare_single_frequency"] = true;
  if (!spec.measurements.empty()) j["measurements"] = spec.measurements;
  return j;
}

namespace detail {

inline Json point_to_json(const experiments::SweepPointReport& pt,
                          const experiments::SweepPointReport* single) {
  Json p;
  p["axis_value"] = pt.axis_value;
  p["receiver_count"] = pt.receiver_count;
  p["failed"] = pt.failed;
  if (pt.failed) p["failure"] = pt.failure;

  const ProfileError err = profile_error(pt.profile_rec, pt.profile_ref);
  p["err"] = err.value;  // NaN serializes as null
  p["err_kind"] = err.kind;

  Json freqs = Json::array();
  for (const auto& fr : pt.frequencies) {
    freqs.push_back({{"frequency", fr.frequency},
                     {"mesh_count", fr.mesh_count},
                     {"iterations", fr.iterations},
                     {"converged", fr.converged},
                     {"final_step_norm", fr.final_step_norm},
                     {"err", fr.err}});
  }
  p["frequencies"] = std::move(freqs);
  p["final_coeffs"] = pt.final_coeffs;

  if (single != nullptr) {
    Json sj;
    sj["failed"] = single->failed;
    if (single->failed) sj["failure"] = single->failure;
    const ProfileError serr = profile_error(single->profile_rec, single->profile_ref);
    sj["err"] = serr.value;
    sj["err_kind"] = serr.kind;
    if (!single->frequencies.empty()) {
      sj["frequency"] = single->frequencies.back().frequency;
      sj["iterations"] = single->frequencies.back().iterations;
      sj["converged"] = single->frequencies.back().converged;
    }
    p["single_frequency"] = std::move(sj);
  }
  return p;
}

inline void write_point_profile(const std::filesystem::path& dir,
                                const experiments::SweepPointReport& pt,
                                std::size_t n_points, std::size_t idx,
                                bool single) {
  if (pt.profile_x.empty() || pt.frequencies.empty()) return;
  std::vector<std::vector<double>> rows(pt.profile_x.size());
  for (std::size_t i = 0; i < pt.profile_x.size(); ++i) {
    rows[i] = {pt.profile_x[i], pt.profile_ref[i], pt.profile_rec[i]};
  }
  const std::string stem = profile_stem(
      n_points, idx, pt.frequencies.back().frequency, single);
  write_csv(dir / (stem + ".csv"), {"x", "reference", "reconstruction"}, rows);
}

}  // namespace detail

// Writes the bundle for one run. `single` pairs with `report` point-by-point
// when the config asked for the single-frequency comparison.
inline void write_report(const std::filesystem::path& dir,
                         const ExperimentSpec& spec,
                         const experiments::ScenarioReport& report,
                         const experiments::ScenarioReport* single,
                         bool force) {
  namespace fs = std::filesystem;
  if (fs::exists(dir / "report.json") && !force) {
    throw OverwriteError("report already exists at " + dir.string() +
                         " (pass --force to overwrite)");
  }
  fs::create_directories(dir);

  Json j;
  j["schema"] = "surfscat-report/1";
  j["name"] = report.name;
  j["config"] = config_to_json(spec);
  Json points = Json::array();
  for (std::size_t p = 0; p < report.points.size(); ++p) {
    const experiments::SweepPointReport* sp =
        (single != nullptr && p < single->points.size()) ? &single->points[p]
                                                         : nullptr;
    points.push_back(detail::point_to_json(report.points[p], sp));
  }
  j["points"] = std::move(points);
  write_text_file(dir / "report.json", j.dump(2) + "\n");

  std::vector<std::vector<double>> rows;
  for (std::size_t p = 0; p < report.points.size(); ++p) {
    for (const auto& fr : report.points[p].frequencies) {
      rows.push_back({static_cast<double>(p), report.points[p].axis_value,
                      fr.frequency, static_cast<double>(fr.mesh_count),
                      static_cast<double>(fr.iterations),
                      fr.converged ? 1.0 : 0.0, fr.final_step_norm, fr.err});
    }
  }
  write_csv(dir / "err_curve.csv",
            {"point", "axis_value", "frequency_hz", "mesh_count", "iterations",
             "converged", "final_step_norm", "err"},
            rows);

  const std::size_t n = report.points.size();
  for (std::size_t p = 0; p < n; ++p) {
    detail::write_point_profile(dir, report.points[p], n, p, false);
    if (single != nullptr && p < single->points.size()) {
      detail::write_point_profile(dir, single->points[p], n, p, true);
    }
  }
}

// ---------------------------------------------------------------------------
// Experiment orchestration above run_scenario: the optional single-frequency
// comparison run and the measurement-file reconstruct path.

struct ExperimentOutcome {
  experiments::ScenarioReport multi;
  std::optional<experiments::ScenarioReport> single;

  bool any_failed() const {
    for (const auto& p : multi.points) {
      if (p.failed) return true;
    }
    if (single) {
      for (const auto& p : single->points) {
        if (p.failed) return true;
      }
    }
    return false;
  }
};

inline ExperimentOutcome run_experiment(const ExperimentSpec& spec) {
  ExperimentOutcome out;
  out.multi = experiments::run_scenario(spec.scenario);
  if (spec.compare_single) {
    // Same scenario collapsed to the top frequency alone: no marching, the
    // flat start must carry the whole inversion.
    experiments::ScenarioConfig single = spec.scenario;
    single.schedule.start = single.schedule.stop;
    out.single = experiments::run_scenario(single);
  }
  return out;
}

// Reconstruct against fields loaded from a measurement CSV. The configured
// surface serves as the err reference; media, wave and inverse settings come
// from the config while receivers and frequencies come from the file.
inline experiments::ScenarioReport run_reconstruct_from_measurements(
    const ExperimentSpec& spec, const experiments::MeasurementSet& set) {
  const experiments::ScenarioConfig& c = spec.scenario;
  c.validate();
  if (c.sweep != experiments::SweepAxis::none) {
    throw ConfigError("sweeps cannot be combined with a measurements file");
  }
  const double length = experiments::surface_domain_length(c.surface);
  const surface::GriddedSurface ref = experiments::realize_surface(c.surface, c.inverse);

  experiments::ScenarioReport report;
  report.name = c.name;
  experiments::SweepPointReport pt;
  pt.receiver_count = static_cast<int>(set.receivers.x.size());
  try {
    const inverse::ScatteringScene scene{c.upper, c.lower, c.wave, set.receivers};
    inverse::ReconstructionResult result = inverse::multi_frequency_reconstruct(
        set.frequencies, set.fields, scene, c.inverse, length, &ref);
    if (result.aborted) {
      pt.failed = true;
      pt.failure = result.abort_reason;
    }
    pt.frequencies = std::move(result.frequencies);
    pt.final_coeffs.assign(
        result.model.coeffs.data(),
        result.model.coeffs.data() + result.model.coeffs.size());
    pt.profile_x.resize(static_cast<std::size_t>(c.profile_samples));
    pt.profile_ref.resize(pt.profile_x.size());
    pt.profile_rec.resize(pt.profile_x.size());
    for (std::size_t i = 0; i < pt.profile_x.size(); ++i) {
      const double x = -0.5 * length +
                       length * static_cast<double>(i) /
                           static_cast<double>(c.profile_samples - 1);
      pt.profile_x[i] = x;
      pt.profile_ref[i] = ref.eval(x);
      pt.profile_rec[i] = result.model.eval(x);
    }
  } catch (const std::exception& e) {
    pt.failed = true;
    pt.failure = e.what();
  }
  report.points.push_back(std::move(pt));
  return report;
}

// ---------------------------------------------------------------------------
// gen-surface and forward artifacts.

inline void write_surface_outputs(const std::filesystem::path& dir,
                                  const ExperimentSpec& spec, bool force) {
  namespace fs = std::filesystem;
  if (fs::exists(dir / "surface.csv") && !force) {
    throw OverwriteError("surface.csv already exists in " + dir.string() +
                         " (pass --force to overwrite)");
  }
  fs::create_directories(dir);

  const surface::GriddedSurface g =
      experiments::realize_surface(spec.scenario.surface, spec.scenario.inverse);
  std::vector<std::vector<double>> rows(g.x.size());
  for (std::size_t i = 0; i < g.x.size(); ++i) rows[i] = {g.x[i], g.heights[i]};
  write_csv(dir / "surface.csv", {"x", "height"}, rows);

  double margin = 0.25;
  Json stats;
  if (const auto* r =
          std::get_if<experiments::RandomSurfaceSpec>(&spec.scenario.surface)) {
    margin = std::max(margin, r->params.edge_taper);
    stats["target"] = {{"corr_length", r->params.corr_length},
                       {"height_std", r->params.height_std}};
  }
  const surface::SurfaceStatistics st = surface::ensemble_statistics({g}, margin);
  stats["mean"] = st.mean;
  stats["stddev"] = st.stddev;
  stats["corr_crossing"] = st.corr_crossing;
  stats["samples"] = st.samples;
  stats["interior_margin"] = margin;
  write_text_file(dir / "stats.json", stats.dump(2) + "\n");
}

inline void write_forward_outputs(const std::filesystem::path& dir,
                                  const ExperimentSpec& spec, bool force) {
  namespace fs = std::filesystem;
  if (fs::exists(dir / "scattered.csv") && !force) {
    throw OverwriteError("scattered.csv already exists in " + dir.string() +
                         " (pass --force to overwrite)");
  }
  const experiments::ScenarioConfig& c = spec.scenario;
  c.validate();
  if (c.sweep != experiments::SweepAxis::none) {
    throw ConfigError("the forward command does not take a sweep");
  }
  const surface::GriddedSurface ref =
      experiments::realize_surface(c.surface, c.inverse);
  const forward::ReceiverArray recv = forward::ReceiverArray::uniform(
      c.receivers.x_start, c.receivers.x_end, c.receivers.spacing,
      c.receivers.height, c.receivers.include_endpoint);
  const experiments::MeasurementSet set = experiments::synthesize_measurements(
      ref, c.upper, c.lower, c.wave, recv, c.schedule.frequencies(),
      c.noise_level, c.noise_seed, c.mesh_factor,
      c.inverse.points_per_wavelength);
  fs::create_directories(dir);
  write_measurements(dir / "scattered.csv", set);
}

// ---------------------------------------------------------------------------
// Deterministic SVG charts: fixed 800x480 canvas, no timestamps, %.6g
// coordinates. One polyline per series, one vertex per finite sample.

struct ChartSeries {
  std::string label;
  std::string css_class;
  std::string color;
  std::vector<double> x;
  std::vector<double> y;
  bool markers = false;
};

inline std::string render_chart_svg(const std::string& title,
                                    const std::string& x_label,
                                    const std::string& y_label,
                                    const std::vector<ChartSeries>& series) {
  using detail::fmt6;
  const double px0 = 70.0, px1 = 770.0, py0 = 55.0, py1 = 420.0;

  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      xmin = std::min(xmin, s.x[i]);
      xmax = std::max(xmax, s.x[i]);
      ymin = std::min(ymin, s.y[i]);
      ymax = std::max(ymax, s.y[i]);
    }
  }
  if (!(xmin <= xmax)) {  // no finite data at all
    xmin = 0.0;
    xmax = 1.0;
    ymin = 0.0;
    ymax = 1.0;
  }
  if (xmax - xmin == 0.0) {
    xmin -= 1.0;
    xmax += 1.0;
  }
  if (ymax - ymin == 0.0) {
    ymin -= 1.0;
    ymax += 1.0;
  }
  const double xpad = 0.05 * (xmax - xmin), ypad = 0.05 * (ymax - ymin);
  xmin -= xpad;
  xmax += xpad;
  ymin -= ypad;
  ymax += ypad;

  const auto sx = [&](double v) {
    return px0 + (v - xmin) / (xmax - xmin) * (px1 - px0);
  };
  const auto sy = [&](double v) {
    return py1 - (v - ymin) / (ymax - ymin) * (py1 - py0);
  };

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" height=\"480\" "
         "viewBox=\"0 0 800 480\" font-family=\"sans-serif\">\n";
  svg += "<rect width=\"800\" height=\"480\" fill=\"#ffffff\"/>\n";
  svg += "<text x=\"400\" y=\"28\" text-anchor=\"middle\" font-size=\"16\" "
         "fill=\"#111\">" + title + "</text>\n";

  for (int i = 0; i < 5; ++i) {
    const double fx = xmin + (xmax - xmin) * i / 4.0;
    const double fy = ymin + (ymax - ymin) * i / 4.0;
    const double gx = sx(fx), gy = sy(fy);
    svg += "<line x1=\"" + fmt6(gx) + "\" y1=\"" + fmt6(py0) + "\" x2=\"" +
           fmt6(gx) + "\" y2=\"" + fmt6(py1) +
           "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
    svg += "<line x1=\"" + fmt6(px0) + "\" y1=\"" + fmt6(gy) + "\" x2=\"" +
           fmt6(px1) + "\" y2=\"" + fmt6(gy) +
           "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
    svg += "<text x=\"" + fmt6(gx) + "\" y=\"" + fmt6(py1 + 18.0) +
           "\" text-anchor=\"middle\" font-size=\"11\" fill=\"#333\">" +
           fmt6(fx) + "</text>\n";
    svg += "<text x=\"" + fmt6(px0 - 8.0) + "\" y=\"" + fmt6(gy + 4.0) +
           "\" text-anchor=\"end\" font-size=\"11\" fill=\"#333\">" + fmt6(fy) +
           "</text>\n";
  }
  svg += "<rect x=\"" + fmt6(px0) + "\" y=\"" + fmt6(py0) + "\" width=\"" +
         fmt6(px1 - px0) + "\" height=\"" + fmt6(py1 - py0) +
         "\" fill=\"none\" stroke=\"#333333\" stroke-width=\"1\"/>\n";
  svg += "<text x=\"420\" y=\"460\" text-anchor=\"middle\" font-size=\"13\" "
         "fill=\"#111\">" + x_label + "</text>\n";
  svg += "<text transform=\"rotate(-90 16 240)\" x=\"16\" y=\"240\" "
         "text-anchor=\"middle\" font-size=\"13\" fill=\"#111\">" + y_label +
         "</text>\n";

  for (const auto& s : series) {
    std::string points;
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      if (!points.empty()) points += ' ';
      points += fmt6(sx(s.x[i])) + "," + fmt6(sy(s.y[i]));
    }
    svg += "<polyline class=\"" + s.css_class + "\" fill=\"none\" stroke=\"" +
           s.color + "\" stroke-width=\"1.5\" points=\"" + points + "\"/>\n";
    if (s.markers) {
      for (std::size_t i = 0; i < s.x.size(); ++i) {
        if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
        svg += "<circle cx=\"" + fmt6(sx(s.x[i])) + "\" cy=\"" +
               fmt6(sy(s.y[i])) + "\" r=\"2.5\" fill=\"" + s.color + "\"/>\n";
      }
    }
  }

  double ly = py0 + 16.0;
  for (const auto& s : series) {
    const double lx = px1 - 150.0;
    svg += "<line x1=\"" + fmt6(lx) + "\" y1=\"" + fmt6(ly - 4.0) + "\" x2=\"" +
           fmt6(lx + 24.0) + "\" y2=\"" + fmt6(ly - 4.0) + "\" stroke=\"" +
           s.color + "\" stroke-width=\"2\"/>\n";
    svg += "<text x=\"" + fmt6(lx + 30.0) + "\" y=\"" + fmt6(ly) +
           "\" font-size=\"12\" fill=\"#111\">" + s.label + "</text>\n";
    ly += 18.0;
  }
  svg += "</svg>\n";
  return svg;
}

// Renders SVGs for a written report directory. Reads report.json for curves
// and the profile CSVs for overlays; returns the paths written.
inline std::vector<std::filesystem::path> plot_report(
    const std::filesystem::path& report_dir,
    const std::filesystem::path& out_dir) {
  namespace fs = std::filesystem;
  const fs::path report_path =
      fs::is_directory(report_dir) ? report_dir / "report.json" : report_dir;
  const fs::path base = report_path.parent_path();

  std::ifstream in(report_path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open report " + report_path.string());
  Json doc;
  try {
    doc = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw std::runtime_error(report_path.string() + ": " + e.what());
  }
  if (!doc.is_object() || !doc.contains("points") || !doc["points"].is_array()) {
    throw std::runtime_error(report_path.string() + ": not a report bundle");
  }
  const std::string name = doc.value("name", std::string("report"));

  fs::create_directories(out_dir);
  std::vector<fs::path> written;
  const auto emit = [&](const fs::path& p, const std::string& svg) {
    write_text_file(p, svg);
    written.push_back(p);
  };

  const Json& points = doc["points"];
  const std::size_t n = points.size();
  std::vector<double> axis_values, final_errs;

  for (std::size_t p = 0; p < n; ++p) {
    const Json& pt = points[p];
    const std::string tag = n > 1 ? "_p" + std::to_string(p) : "";

    // err vs frequency from the report itself
    std::vector<double> fx, fy;
    if (pt.contains("frequencies") && pt["frequencies"].is_array()) {
      for (const Json& fr : pt["frequencies"]) {
        if (!fr.contains("frequency") || !fr.contains("err")) continue;
        if (!fr["err"].is_number()) continue;  // null for missing err
        fx.push_back(fr["frequency"].get<double>() / 1e6);
        fy.push_back(fr["err"].get<double>());
      }
    }
    if (!fx.empty()) {
      ChartSeries s{"err", "err", "#2e7d32", fx, fy, true};
      emit(out_dir / ("err_curve" + tag + ".svg"),
           render_chart_svg(name + ": reconstruction error", "frequency (MHz)",
                            "err", {s}));
    }

    // profile overlay from the CSV written next to the report
    double f_last = 0.0;
    if (!fx.empty()) f_last = fx.back() * 1e6;
    if (f_last > 0.0) {
      const std::string stem = detail::profile_stem(n, p, f_last, false);
      const fs::path csv = base / (stem + ".csv");
      if (fs::exists(csv)) {
        const CsvTable t = read_csv(csv);
        const int cx = t.column("x"), cref = t.column("reference"),
                  crec = t.column("reconstruction");
        if (cx < 0 || cref < 0 || crec < 0) {
          throw std::runtime_error(csv.string() + ": missing profile columns");
        }
        std::vector<double> xs, ref, rec;
        for (const auto& row : t.rows) {
          xs.push_back(row[cx]);
          ref.push_back(row[cref]);
          rec.push_back(row[crec]);
        }
        std::vector<ChartSeries> overlay{
            {"reference", "ref", "#1a6fb4", xs, ref, false},
            {"reconstruction", "rec", "#d1495b", xs, rec, false}};
        const fs::path single_csv =
            base / (detail::profile_stem(n, p, f_last, true) + ".csv");
        if (fs::exists(single_csv)) {
          const CsvTable ts = read_csv(single_csv);
          const int sx_ = ts.column("x"), sr = ts.column("reconstruction");
          if (sx_ >= 0 && sr >= 0) {
            ChartSeries c{"single-frequency", "rec-single", "#e8a13a", {}, {},
                          false};
            for (const auto& row : ts.rows) {
              c.x.push_back(row[sx_]);
              c.y.push_back(row[sr]);
            }
            overlay.push_back(std::move(c));
          }
        }
        emit(out_dir / (stem + ".svg"),
             render_chart_svg(name + ": profile", "x (m)", "height (m)",
                              overlay));
      }
    }

    if (pt.contains("axis_value") && pt.contains("err") &&
        pt["err"].is_number()) {
      axis_values.push_back(pt["axis_value"].get<double>());
      final_errs.push_back(pt["err"].get<double>());
    }
  }

  if (n > 1 && axis_values.size() > 1) {
    std::string axis = "axis value";
    if (doc.contains("config") && doc["config"].contains("sweep")) {
      axis = doc["config"]["sweep"].value("axis", axis);
    }
    ChartSeries s{"final err", "err", "#2e7d32", axis_values, final_errs, true};
    emit(out_dir / "sweep_err.svg",
         render_chart_svg(name + ": error across the sweep", axis, "err", {s}));
  }
  return written;
}

}  // namespace surfscat::io
