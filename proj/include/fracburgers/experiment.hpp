#ifndef FRACBURGERS_EXPERIMENT_HPP
#define FRACBURGERS_EXPERIMENT_HPP

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "integrator.hpp"
#include "modulus.hpp"

namespace fburg {

enum class ExperimentKind {
  global_regularity,
  blowup,
  splitting_order,
  modulus_verify,
  envelope_compare,
  rough_data,
  rescale_check
};

const char* to_string(ExperimentKind k);

struct ExperimentSpec {
  ExperimentKind name = ExperimentKind::global_regularity;
  SolverConfig solver;
  std::uint64_t seed = 0;
  std::string output_dir;
  // Experiment-specific keys, already checked against the allowed set.
  std::map<std::string, std::string> params;
  // Raw text the spec was parsed from (hashed into run.json).
  std::string source;

  double number(const std::string& key, double fallback) const;
  std::vector<double> numbers(const std::string& key, std::vector<double> fallback) const;
  std::string text(const std::string& key, const std::string& fallback) const;
  bool flag(const std::string& key, bool fallback) const;
  bool has(const std::string& key) const { return params.count(key) > 0; }
};

// key = value lines, '#' starts a comment. Throws ConfigError naming the field.
ExperimentSpec parse_spec(const std::string& text);
ExperimentSpec load_spec(const std::filesystem::path& file);

struct Table {
  std::string file;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

struct ExperimentResult {
  bool pass = false;
  nlohmann::ordered_json summary;
  nlohmann::ordered_json resolved;      // effective parameters, defaults filled in
  nlohmann::ordered_json calibration;   // constants computed on the way
  std::optional<Trajectory> trajectory;
  std::vector<Table> tables;
};

ExperimentResult execute(const ExperimentSpec& spec);

// Writes run.json, series.csv, summary.json, optional profiles and plots.
void write_outputs(const ExperimentSpec& spec, const ExperimentResult& r,
                   const std::filesystem::path& dir);

// 0 on verdict pass, 2 on verdict fail, 1 on error (message on stderr).
int run_experiment(const ExperimentSpec& spec, const std::filesystem::path& dir);

std::string format_double(double v);
void write_series_csv(const Trajectory& tr, std::ostream& os);
void write_table_csv(const Table& t, std::ostream& os);
std::string content_hash(const std::string& text);
nlohmann::ordered_json calibration_json(const Calibration& c);

}  // namespace fburg

#endif
