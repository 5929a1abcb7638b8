#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <mutex>
#include <thread>

#include <CLI11.hpp>

#include <fracburgers/experiment.hpp>

namespace fs = std::filesystem;
using namespace fburg;

namespace {

fs::path default_out(const ExperimentSpec& spec, const fs::path& file) {
  if (!spec.output_dir.empty()) return spec.output_dir;
  if (const char* env = std::getenv("FRACBURGERS_OUT"); env && *env)
    return fs::path(env) / file.stem();
  return fs::path("runs") / file.stem();
}

int cmd_run(const fs::path& file, const std::string& out) {
  ExperimentSpec spec;
  try {
    spec = load_spec(file);
  } catch (const std::exception& e) {
    std::cerr << "fracburgers: " << e.what() << "\n";
    return 1;
  }
  const fs::path dir = out.empty() ? default_out(spec, file) : fs::path(out);
  const int rc = run_experiment(spec, dir);
  if (rc != 1)
    std::cout << to_string(spec.name) << ": " << (rc == 0 ? "pass" : "fail") << " -> "
              << dir.string() << "\n";
  return rc;
}

int cmd_sweep(const fs::path& dir, int threads, const std::string& out) {
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".spec") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) {
    std::cerr << "fracburgers: no .spec files in " << dir.string() << "\n";
    return 1;
  }
  const fs::path root = out.empty() ? fs::path("runs") : fs::path(out);
  std::vector<int> codes(files.size(), 1);
  std::atomic<std::size_t> next{0};
  std::mutex io;
  auto worker = [&] {
    for (std::size_t i; (i = next++) < files.size();) {
      int rc = 1;
      try {
        const auto spec = load_spec(files[i]);
        rc = run_experiment(spec, root / files[i].stem());
      } catch (const std::exception& e) {
        std::lock_guard lock(io);
        std::cerr << "fracburgers: " << files[i].string() << ": " << e.what() << "\n";
      }
      codes[i] = rc;
      std::lock_guard lock(io);
      std::cout << files[i].filename().string() << ": "
                << (rc == 0 ? "pass" : rc == 2 ? "fail" : "error") << "\n";
    }
  };
  std::vector<std::thread> pool;
  const int n = std::max(1, std::min<int>(threads, files.size()));
  for (int i = 0; i < n; ++i) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  return *std::max_element(codes.begin(), codes.end()) == 0
             ? 0
             : (std::count(codes.begin(), codes.end(), 1) ? 1 : 2);
}

int cmd_calibrate(const std::string& out, int points) {
  try {
    const auto cal = calibrate_K(points);
    const auto text = calibration_json(cal).dump(2) + "\n";
    if (out.empty()) {
      std::cout << text;
    } else {
      std::ofstream f(out, std::ios::binary);
      if (!f) throw std::runtime_error("cannot write " + out);
      f << text;
    }
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "fracburgers: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fractional Burgers spectral solver and experiments"};
  app.require_subcommand(1);

  std::string spec_file, out;
  auto* run = app.add_subcommand("run", "Run one experiment spec");
  run->add_option("spec", spec_file, "spec file")->required();
  run->add_option("--out", out, "output directory");

  std::string spec_dir, sweep_out;
  int threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  auto* sweep = app.add_subcommand("sweep", "Run every .spec file in a directory");
  sweep->add_option("dir", spec_dir, "directory of spec files")
      ->required()
      ->check(CLI::ExistingDirectory);
  sweep->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
  sweep->add_option("--out", sweep_out, "output root");

  std::string cal_out;
  int points = 60;
  auto* cal = app.add_subcommand("calibrate-modulus", "Find K and print the calibration");
  cal->add_option("--out", cal_out, "JSON file to write");
  cal->add_option("--points", points, "log-grid points per branch")->check(CLI::Range(2, 100000));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }
  if (*run) return cmd_run(spec_file, out);
  if (*sweep) return cmd_sweep(spec_dir, threads, sweep_out);
  return cmd_calibrate(cal_out, points);
}
