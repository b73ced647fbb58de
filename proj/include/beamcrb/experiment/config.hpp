#pragma once

// Experiment configuration: JSON schema, validation and conversion to the
// library's problem types. Angles in configs are in degrees.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "beamcrb/design.hpp"
#include "beamcrb/experiment/io.hpp"

namespace beamcrb::experiment {

namespace fs = std::filesystem;
using json = nlohmann::json;

class ConfigError : public Error {
 public:
  using Error::Error;
};

struct ArraySpec {
  ArrayKind kind = ArrayKind::uca;
  int antennas = 30;
  double spacing = 0.5;
  std::vector<Position> positions;  // custom arrays only

  ArrayGeometry build() const {
    switch (kind) {
      case ArrayKind::ula: return ArrayGeometry::ula(antennas, spacing);
      case ArrayKind::uca: return ArrayGeometry::uca(antennas, spacing);
      case ArrayKind::custom: return ArrayGeometry::custom(positions);
    }
    throw ConfigError("unknown array kind");
  }
};

/// Either a single direction or a band sampled every `step_deg`.
struct AttenuationSpec {
  double from_deg = 0.0;
  double to_deg = 0.0;
  double step_deg = 1.0;
  double db = 20.0;
  bool null = false;
};

struct SimulateSpec {
  std::vector<double> snr_db{-25.0, -20.0, -15.0, -10.0, -5.0, 0.0};
  std::vector<double> rho{0.6, 0.8, 1.0};
  int bins = 5;
};

struct SweepSpec {
  std::vector<int> m{1, 2, 3, 4, 5, 6, 7, 8};
  std::vector<double> range_width_deg{10.0, 20.0, 30.0, 40.0, 50.0, 60.0};
  int total_antennas = 60;
  std::vector<int> n_tx{10, 20, 30, 40, 50};
  std::vector<int> baseline_n_tx{10, 30, 50};
  std::vector<int> baseline_m{2, 3, 4, 5, 6, 7, 8, 9, 10};
};

struct ExperimentConfig {
  ArraySpec tx;
  ArraySpec rx;
  Parametrization param = Parametrization::azimuth;
  Variant variant = Variant::aod_aoa;
  double tx_lo_deg = 70.0, tx_hi_deg = 90.0;
  double rx_lo_deg = 70.0, rx_hi_deg = 90.0;
  int s_tx = 21, s_rx = 21;
  int eval_factor = 5;
  int search_factor = 10;
  int m = 5;
  double snr_db = -10.0;
  std::optional<double> rho = 0.6;
  std::optional<double> resolution_deg;
  std::vector<AttenuationSpec> attenuation;
  std::optional<fs::path> combiner_file;
  std::uint64_t seed = 1;
  int trials = 100;
  bool refine_mle = false;
  double eigen_floor = 1e-6;
  conic::SolverSettings solver;
  SimulateSpec simulate;
  SweepSpec sweep;
  fs::path output_dir = "out";
  /// Canonical JSON of the parsed input, used for the metadata hash.
  json source;

  std::string hash() const { return io::fnv1a_hex(source.dump()); }
};

namespace detail {

// Object reader that rejects unknown keys and mistyped values.
class Obj {
 public:
  Obj(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j.is_object()) throw ConfigError(where_ + " must be a JSON object");
  }

  ~Obj() noexcept(false) {
    if (std::uncaught_exceptions()) return;
    for (const auto& [k, v] : j_.items())
      if (!seen_.count(k)) throw ConfigError("unknown key '" + k + "' in " + where_);
  }

  bool has(const std::string& k) {
    seen_.insert(k);
    return j_.contains(k) && !j_.at(k).is_null();
  }

  const json& at(const std::string& k) { return (seen_.insert(k), j_.at(k)); }

  std::string path(const std::string& k) const { return where_ + "." + k; }

  double number(const std::string& k, double def) {
    if (!has(k)) return def;
    const auto& v = j_.at(k);
    if (!v.is_number()) throw ConfigError(path(k) + " must be a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ConfigError(path(k) + " must be finite");
    return d;
  }

  int integer(const std::string& k, int def, int lo) {
    if (!has(k)) return def;
    const auto& v = j_.at(k);
    if (!v.is_number_integer()) throw ConfigError(path(k) + " must be an integer");
    const auto i = v.get<long long>();
    if (i < lo || i > 1000000) throw ConfigError(path(k) + " out of range");
    return static_cast<int>(i);
  }

  bool boolean(const std::string& k, bool def) {
    if (!has(k)) return def;
    const auto& v = j_.at(k);
    if (!v.is_boolean()) throw ConfigError(path(k) + " must be true or false");
    return v.get<bool>();
  }

  std::string string(const std::string& k, const std::string& def) {
    if (!has(k)) return def;
    const auto& v = j_.at(k);
    if (!v.is_string()) throw ConfigError(path(k) + " must be a string");
    return v.get<std::string>();
  }

  std::vector<double> numbers(const std::string& k, std::vector<double> def) {
    if (!has(k)) return def;
    const auto& v = j_.at(k);
    if (!v.is_array() || v.empty()) throw ConfigError(path(k) + " must be a non-empty array");
    std::vector<double> out;
    for (const auto& e : v) {
      if (!e.is_number() || !std::isfinite(e.get<double>()))
        throw ConfigError(path(k) + " must contain finite numbers");
      out.push_back(e.get<double>());
    }
    return out;
  }

  std::vector<int> integers(const std::string& k, std::vector<int> def, int lo) {
    if (!has(k)) return def;
    const auto& v = j_.at(k);
    if (!v.is_array() || v.empty()) throw ConfigError(path(k) + " must be a non-empty array");
    std::vector<int> out;
    for (const auto& e : v) {
      if (!e.is_number_integer() || e.get<long long>() < lo || e.get<long long>() > 100000)
        throw ConfigError(path(k) + " must contain integers >= " + std::to_string(lo));
      out.push_back(static_cast<int>(e.get<long long>()));
    }
    return out;
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

inline ArraySpec parse_array(const json& j, const std::string& where) {
  Obj o(j, where);
  ArraySpec a;
  const std::string kind = o.string("kind", "uca");
  if (kind == "ula") a.kind = ArrayKind::ula;
  else if (kind == "uca") a.kind = ArrayKind::uca;
  else if (kind == "custom") a.kind = ArrayKind::custom;
  else throw ConfigError(o.path("kind") + " must be ula, uca or custom");
  a.spacing = o.number("spacing", 0.5);
  if (!(a.spacing > 0.0)) throw ConfigError(o.path("spacing") + " must be positive");
  if (a.kind == ArrayKind::custom) {
    if (!o.has("positions")) throw ConfigError(o.path("positions") + " is required for custom arrays");
    const auto& p = o.at("positions");
    if (!p.is_array() || p.empty()) throw ConfigError(o.path("positions") + " must be a non-empty array");
    for (const auto& e : p) {
      if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number())
        throw ConfigError(o.path("positions") + " entries must be [x, y] pairs");
      a.positions.push_back({e[0].get<double>(), e[1].get<double>()});
    }
    a.antennas = static_cast<int>(a.positions.size());
    o.integer("antennas", a.antennas, 1);
  } else {
    a.antennas = o.integer("antennas", 30, a.kind == ArrayKind::uca ? 2 : 1);
  }
  return a;
}

inline void parse_range(Obj& o, const std::string& k, double& lo, double& hi) {
  if (!o.has(k)) return;
  const auto& v = o.at(k);
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
    throw ConfigError(o.path(k) + " must be [lo_deg, hi_deg]");
  lo = v[0].get<double>();
  hi = v[1].get<double>();
  if (!std::isfinite(lo) || !std::isfinite(hi) || !(hi >= lo) || hi - lo > 360.0)
    throw ConfigError(o.path(k) + " must satisfy lo <= hi within one turn");
}

}  // namespace detail

inline Variant parse_variant(const std::string& s) {
  if (s == "aod") return Variant::aod;
  if (s == "aoa") return Variant::aoa;
  if (s == "both" || s == "aod_aoa") return Variant::aod_aoa;
  throw ConfigError("variant must be aod, aoa or both");
}

/// Parses and validates a configuration. Relative file paths are resolved
/// against `base_dir`.
inline ExperimentConfig parse_config(const json& j, const fs::path& base_dir = ".") {
  using detail::Obj;
  ExperimentConfig c;
  c.source = j;
  Obj o(j, "config");
  if (o.has("tx")) c.tx = detail::parse_array(o.at("tx"), "config.tx");
  if (o.has("rx")) c.rx = detail::parse_array(o.at("rx"), "config.rx");
  const std::string par = o.string("parametrization", "azimuth");
  if (par == "azimuth") c.param = Parametrization::azimuth;
  else if (par == "spatial_frequency") c.param = Parametrization::spatial_frequency;
  else throw ConfigError("config.parametrization must be azimuth or spatial_frequency");
  if (c.param == Parametrization::spatial_frequency &&
      (c.tx.kind != ArrayKind::ula || c.rx.kind != ArrayKind::ula))
    throw ConfigError("spatial_frequency parametrization needs ULA arrays");
  c.variant = parse_variant(o.string("variant", "both"));
  detail::parse_range(o, "tx_range_deg", c.tx_lo_deg, c.tx_hi_deg);
  detail::parse_range(o, "rx_range_deg", c.rx_lo_deg, c.rx_hi_deg);
  if (o.has("grid")) {
    Obj g(o.at("grid"), "config.grid");
    c.s_tx = g.integer("s_tx", c.s_tx, 1);
    c.s_rx = g.integer("s_rx", c.s_rx, 1);
    c.eval_factor = g.integer("eval_factor", c.eval_factor, 1);
    c.search_factor = g.integer("search_factor", c.search_factor, 1);
  }
  if ((c.s_tx > 1 && c.tx_hi_deg == c.tx_lo_deg) || (c.s_rx > 1 && c.rx_hi_deg == c.rx_lo_deg))
    throw ConfigError("a degenerate range needs a grid of size 1");
  c.m = o.integer("M", c.m, 1);
  c.snr_db = o.number("snr_db", c.snr_db);
  if (o.has("rho")) {
    const double r = o.number("rho", 0.6);
    if (!(r >= 0.0 && r <= 1.0)) throw ConfigError("config.rho must lie in [0, 1]");
    c.rho = r < 1.0 ? std::optional<double>(r) : std::nullopt;
  } else if (o.has("rho") == false && j.contains("rho")) {
    c.rho.reset();  // explicit null disables the constraint
  }
  if (o.has("resolution_deg")) {
    c.resolution_deg = o.number("resolution_deg", 0.0);
    if (!(*c.resolution_deg > 0.0)) throw ConfigError("config.resolution_deg must be positive");
  }
  if (o.has("attenuation")) {
    const auto& arr = o.at("attenuation");
    if (!arr.is_array()) throw ConfigError("config.attenuation must be an array");
    int k = 0;
    for (const auto& e : arr) {
      Obj a(e, "config.attenuation[" + std::to_string(k++) + "]");
      AttenuationSpec s;
      if (a.has("at_deg")) {
        s.from_deg = s.to_deg = a.number("at_deg", 0.0);
      } else {
        s.from_deg = a.number("from_deg", 0.0);
        s.to_deg = a.number("to_deg", s.from_deg);
      }
      if (!(s.to_deg >= s.from_deg)) throw ConfigError(a.path("to_deg") + " must be >= from_deg");
      s.step_deg = a.number("step_deg", 1.0);
      if (!(s.step_deg > 0.0)) throw ConfigError(a.path("step_deg") + " must be positive");
      s.null = a.boolean("null", false);
      s.db = a.number("db", 20.0);
      if (!s.null && !(s.db > 0.0)) throw ConfigError(a.path("db") + " must be positive");
      c.attenuation.push_back(s);
    }
  }
  if (o.has("combiner")) {
    Obj cb(o.at("combiner"), "config.combiner");
    const std::string type = cb.string("type", "identity");
    if (type == "file") {
      if (!cb.has("path")) throw ConfigError("config.combiner.path is required for type file");
      fs::path p = cb.string("path", "");
      if (p.is_relative()) p = base_dir / p;
      if (!fs::exists(p)) throw ConfigError("combiner file not found: " + p.string());
      c.combiner_file = p;
    } else if (type != "identity") {
      throw ConfigError("config.combiner.type must be identity or file");
    }
  }
  if (o.has("seed")) {
    const auto& s = o.at("seed");
    if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<long long>() >= 0))
      throw ConfigError("config.seed must be a nonnegative integer");
    c.seed = s.get<std::uint64_t>();
  }
  c.trials = o.integer("trials", c.trials, 1);
  c.refine_mle = o.boolean("refine_mle", false);
  if (o.has("solver")) {
    Obj s(o.at("solver"), "config.solver");
    c.solver.feastol = s.number("feastol", c.solver.feastol);
    c.solver.abstol = s.number("abstol", c.solver.abstol);
    c.solver.reltol = s.number("reltol", c.solver.reltol);
    c.solver.max_iterations = s.integer("max_iterations", c.solver.max_iterations, 1);
    c.eigen_floor = s.number("eigen_floor", c.eigen_floor);
    if (!(c.solver.feastol > 0.0 && c.solver.abstol > 0.0 && c.solver.reltol > 0.0))
      throw ConfigError("solver tolerances must be positive");
    if (!(c.eigen_floor > 0.0 && c.eigen_floor < 1.0))
      throw ConfigError("config.solver.eigen_floor must lie in (0, 1)");
  }
  if (o.has("simulate")) {
    Obj s(o.at("simulate"), "config.simulate");
    c.simulate.snr_db = s.numbers("snr_db", c.simulate.snr_db);
    c.simulate.rho = s.numbers("rho", c.simulate.rho);
    for (double r : c.simulate.rho)
      if (!(r >= 0.0 && r <= 1.0)) throw ConfigError("config.simulate.rho values must lie in [0, 1]");
    c.simulate.bins = s.integer("bins", c.simulate.bins, 1);
  }
  if (o.has("sweep")) {
    Obj s(o.at("sweep"), "config.sweep");
    c.sweep.m = s.integers("M", c.sweep.m, 1);
    c.sweep.range_width_deg = s.numbers("range_width_deg", c.sweep.range_width_deg);
    for (double w : c.sweep.range_width_deg)
      if (!(w > 0.0 && w <= 360.0)) throw ConfigError("config.sweep.range_width_deg must be in (0, 360]");
    c.sweep.total_antennas = s.integer("total_antennas", c.sweep.total_antennas, 2);
    c.sweep.n_tx = s.integers("n_tx", c.sweep.n_tx, 1);
    for (int n : c.sweep.n_tx)
      if (n >= c.sweep.total_antennas) throw ConfigError("config.sweep.n_tx must leave antennas for the Rx");
    c.sweep.baseline_n_tx = s.integers("baseline_n_tx", c.sweep.baseline_n_tx, 1);
    c.sweep.baseline_m = s.integers("baseline_M", c.sweep.baseline_m, 1);
  }
  if (o.has("output_dir")) {
    fs::path p = o.string("output_dir", "out");
    c.output_dir = p.is_relative() ? base_dir / p : p;
  } else {
    c.output_dir = base_dir / "out";
  }
  if (c.rho && c.variant == Variant::aoa) c.rho.reset();
  return c;
}

inline ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("malformed JSON: ") + e.what());
  }
  return parse_config(j, path.has_parent_path() ? path.parent_path() : fs::path("."));
}

/// Angle in the configured parametrization from degrees.
inline double to_param(double deg, Parametrization p) {
  return p == Parametrization::azimuth ? deg2rad(deg) : 0.5 * std::cos(deg2rad(deg));
}

inline Interval to_interval(double lo_deg, double hi_deg, Parametrization p) {
  const double a = to_param(lo_deg, p), b = to_param(hi_deg, p);
  return {std::min(a, b), std::max(a, b)};
}

inline Combiner build_combiner(const ExperimentConfig& c) {
  if (!c.combiner_file) return Combiner::identity(c.rx.antennas);
  CMat W;
  try {
    W = io::read_matrix_csv(*c.combiner_file);
  } catch (const io::IoError& e) {
    throw ConfigError(e.what());
  }
  if (W.rows() != c.rx.antennas) throw ConfigError("combiner file must have N_Rx rows");
  try {
    return Combiner(W, 1e-8);
  } catch (const Error& e) {
    throw ConfigError(std::string("combiner file: ") + e.what());
  }
}

/// Design problem described by the configuration.
inline DesignProblem design_problem(const ExperimentConfig& c) {
  DesignProblem pb;
  pb.variant = c.variant;
  pb.tx = c.tx.build();
  pb.rx = c.rx.build();
  pb.combiner = build_combiner(c);
  pb.param = c.param;
  pb.tx_range = to_interval(c.tx_lo_deg, c.tx_hi_deg, c.param);
  pb.rx_range = to_interval(c.rx_lo_deg, c.rx_hi_deg, c.param);
  pb.s_tx = c.s_tx;
  pb.s_rx = c.s_rx;
  pb.m = c.m;
  pb.rho = c.variant == Variant::aoa ? std::nullopt : c.rho;
  if (c.resolution_deg) pb.resolution = deg2rad(*c.resolution_deg);
  for (const auto& a : c.attenuation) {
    const double factor = a.null ? 0.0 : std::pow(10.0, -a.db / 10.0);
    for (double d = a.from_deg; d <= a.to_deg + 1e-9; d += a.step_deg)
      pb.attenuation.push_back({to_param(std::min(d, a.to_deg), c.param), factor});
  }
  pb.eigen_floor = c.eigen_floor;
  pb.solver = c.solver;
  if (pb.rho && !pb.resolution && pb.tx.kind() != ArrayKind::uca)
    throw ConfigError("rho needs resolution_deg for non-UCA arrays");
  return pb;
}

}  // namespace beamcrb::experiment
