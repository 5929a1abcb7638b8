#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include <fracburgers/experiment.hpp>

namespace fburg {

namespace {

const std::map<std::string, ExperimentKind>& kinds() {
  static const std::map<std::string, ExperimentKind> m = {
      {"global_regularity", ExperimentKind::global_regularity},
      {"blowup", ExperimentKind::blowup},
      {"splitting_order", ExperimentKind::splitting_order},
      {"modulus_verify", ExperimentKind::modulus_verify},
      {"envelope_compare", ExperimentKind::envelope_compare},
      {"rough_data", ExperimentKind::rough_data},
      {"rescale_check", ExperimentKind::rescale_check},
  };
  return m;
}

const std::set<std::string> kSolverKeys = {
    "alpha",  "n_modes",   "period",       "n_samples", "cfl",       "t_end",
    "dt_max", "record_every", "stop_rule", "hs_orders", "lp_orders", "y_quartic",
    "keep_snapshots"};

const std::set<std::string> kCommonKeys = {"profile_times", "plots"};

// Keys each experiment accepts on top of the solver and common ones.
const std::set<std::string>& experiment_keys(ExperimentKind k) {
  static const std::map<ExperimentKind, std::set<std::string>> m = {
      {ExperimentKind::global_regularity,
       {"data", "amplitudes", "wavenumbers", "random_amplitude", "random_decay", "K",
        "calibration_points", "gradient_slack"}},
      {ExperimentKind::blowup,
       {"data_alpha", "c_alpha", "fit_steps", "margin", "smoothing_over_delta", "L_over_a",
        "t_end_over_T", "records_per_T", "threshold_over_kappa0", "h1_target", "tstar_ratio",
        "envelope"}},
      {ExperimentKind::splitting_order,
       {"alphas", "h_values", "reference_dt", "amplitudes", "wavenumbers", "nonlinear",
        "slope_min", "slope_max"}},
      {ExperimentKind::modulus_verify, {"K", "grid_points", "tol", "calibration_points"}},
      {ExperimentKind::envelope_compare,
       {"c_alpha", "c_n", "h_over_tb", "horizon", "substeps", "run_pde", "margin",
        "smoothing_over_delta", "L_over_a", "slope_min", "slope_max"}},
      {ExperimentKind::rough_data,
       {"target_sup", "target_l2", "bound_factor", "t_min"}},
      {ExperimentKind::rescale_check,
       {"L", "amplitudes", "wavenumbers", "negative_alpha", "tol"}},
  };
  return m.at(k);
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_number(const std::string& key, const std::string& v) {
  double x = 0.0;
  const auto* end = v.data() + v.size();
  const auto [p, ec] = std::from_chars(v.data(), end, x);
  if (ec != std::errc() || p != end)
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  return x;
}

std::vector<double> to_numbers(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(to_number(key, trim(item)));
  if (out.empty()) throw ConfigError(key + ": expected a comma-separated list");
  return out;
}

bool to_flag(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

int to_int(const std::string& key, const std::string& v) {
  const double x = to_number(key, v);
  if (x != std::floor(x) || std::abs(x) > 1e9)
    throw ConfigError(key + ": expected an integer, got '" + v + "'");
  return static_cast<int>(x);
}

StopRule to_stop_rule(const std::string& v) {
  const auto colon = v.find(':');
  const std::string kind = trim(v.substr(0, colon));
  if (kind == "time_reached" && colon == std::string::npos) return StopRule::time_reached();
  if (colon == std::string::npos)
    throw ConfigError("stop_rule: expected time_reached, gradient_threshold:<g> or "
                      "spectral_tail:<fraction>");
  const double x = to_number("stop_rule", trim(v.substr(colon + 1)));
  if (kind == "gradient_threshold") return StopRule::gradient_threshold(x);
  if (kind == "spectral_tail") return StopRule::spectral_tail(x);
  throw ConfigError("stop_rule: unknown rule '" + kind + "'");
}

void apply_solver_key(SolverConfig& c, const std::string& key, const std::string& v) {
  if (key == "alpha") c.alpha = to_number(key, v);
  else if (key == "n_modes") c.n_modes = to_int(key, v);
  else if (key == "period") c.period = to_number(key, v);
  else if (key == "n_samples") c.n_samples = to_int(key, v);
  else if (key == "cfl") c.cfl = to_number(key, v);
  else if (key == "t_end") c.t_end = to_number(key, v);
  else if (key == "dt_max") c.dt_max = to_number(key, v);
  else if (key == "record_every") c.record_every = to_number(key, v);
  else if (key == "stop_rule") c.stop_rule = to_stop_rule(v);
  else if (key == "hs_orders") c.diagnostics.hs_orders = to_numbers(key, v);
  else if (key == "lp_orders") c.diagnostics.lp_orders = to_numbers(key, v);
  else if (key == "y_quartic") c.diagnostics.y_quartic = to_flag(key, v);
  else if (key == "keep_snapshots") c.keep_snapshots = to_flag(key, v);
}

}  // namespace

const char* to_string(ExperimentKind k) {
  for (const auto& [name, kind] : kinds())
    if (kind == k) return name.c_str();
  return "?";
}

double ExperimentSpec::number(const std::string& key, double fallback) const {
  const auto it = params.find(key);
  return it == params.end() ? fallback : to_number(key, it->second);
}

std::vector<double> ExperimentSpec::numbers(const std::string& key,
                                            std::vector<double> fallback) const {
  const auto it = params.find(key);
  return it == params.end() ? fallback : to_numbers(key, it->second);
}

std::string ExperimentSpec::text(const std::string& key, const std::string& fallback) const {
  const auto it = params.find(key);
  return it == params.end() ? fallback : it->second;
}

bool ExperimentSpec::flag(const std::string& key, bool fallback) const {
  const auto it = params.find(key);
  return it == params.end() ? fallback : to_flag(key, it->second);
}

ExperimentSpec parse_spec(const std::string& text) {
  ExperimentSpec spec;
  spec.source = text;
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
    if (value.empty()) throw ConfigError(key + ": empty value");
    if (!kv.emplace(key, value).second) throw ConfigError(key + ": given more than once");
  }

  const auto name = kv.find("experiment");
  if (name == kv.end()) throw ConfigError("experiment: required field missing");
  const auto kind = kinds().find(name->second);
  if (kind == kinds().end())
    throw ConfigError("experiment: unknown experiment '" + name->second + "'");
  spec.name = kind->second;
  kv.erase(name);

  if (auto it = kv.find("seed"); it != kv.end()) {
    const double s = to_number("seed", it->second);
    if (s < 0 || s != std::floor(s)) throw ConfigError("seed: expected a non-negative integer");
    spec.seed = static_cast<std::uint64_t>(s);
    kv.erase(it);
  }
  if (auto it = kv.find("output_dir"); it != kv.end()) {
    spec.output_dir = it->second;
    kv.erase(it);
  }

  const auto& allowed = experiment_keys(spec.name);
  for (const auto& [key, value] : kv) {
    if (kSolverKeys.count(key)) {
      apply_solver_key(spec.solver, key, value);
    } else if (!kCommonKeys.count(key) && !allowed.count(key)) {
      throw ConfigError(key + ": not a recognized field for experiment " +
                        std::string(to_string(spec.name)));
    }
    spec.params[key] = value;
  }
  // Numeric fields are checked once here so errors name the field.
  static const std::set<std::string> flags = {"plots",    "y_quartic", "keep_snapshots",
                                              "nonlinear", "envelope",  "run_pde"};
  static const std::set<std::string> texts = {"stop_rule", "data", "c_alpha"};
  for (const auto& [key, value] : spec.params) {
    if (flags.count(key)) to_flag(key, value);
    else if (!texts.count(key)) to_numbers(key, value);
  }
  if (spec.has("data")) {
    const auto d = spec.text("data", "");
    if (d != "sines" && d != "random") throw ConfigError("data: expected sines or random");
  }
  if (spec.has("c_alpha") && spec.text("c_alpha", "") != "fit") to_number("c_alpha", spec.text("c_alpha", ""));
  try {
    spec.solver.validate();
  } catch (const ParameterError& e) {
    throw ConfigError(std::string("solver: ") + e.what());
  }
  return spec;
}

ExperimentSpec load_spec(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw ConfigError("cannot read spec file " + file.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_spec(ss.str());
}

}  // namespace fburg
