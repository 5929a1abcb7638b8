#include <openssl/sha.h>

#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include <fracburgers/experiment.hpp>

namespace fburg {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

namespace {

std::vector<std::string> series_columns(const SolverConfig& c,
                                        const std::vector<DiagnosticsRecord>& recs) {
  std::vector<std::string> cols = {"t", "l2"};
  for (double s : c.diagnostics.hs_orders) cols.push_back("hs_" + format_double(s));
  for (const char* k :
       {"linf", "w1inf", "analyticity_delta", "y_quartic", "modulus_margin", "envelope_ok"})
    cols.push_back(k);
  for (double p : c.diagnostics.lp_orders) cols.push_back("lp_" + format_double(p));
  if (!recs.empty())
    for (const auto& [k, v] : recs.front().extra) cols.push_back(k);
  return cols;
}

void write_row(std::ostream& os, const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) os << (i ? "," : "") << cells[i];
  os << '\n';
}

double lookup(const std::map<double, double>& m, double key) {
  const auto it = m.find(key);
  return it == m.end() ? kNaN : it->second;
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << text;
}

std::string polyline(const std::vector<double>& t, const std::vector<double>& y, double t0,
                     double t1, double y0, double y1, const char* colour) {
  std::ostringstream os;
  os << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"1.5\" points=\"";
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (!std::isfinite(y[i])) continue;
    const double px = 60 + 520 * (t[i] - t0) / (t1 - t0);
    const double py = 330 - 300 * (y[i] - y0) / (y1 - y0);
    os << format_double(std::round(px * 10) / 10) << ',' << format_double(std::round(py * 10) / 10)
       << ' ';
  }
  os << "\"/>\n";
  return os.str();
}

// log10 of |u_x|_inf and the L2 norm against t.
std::string series_svg(const Trajectory& tr) {
  std::vector<double> t, a, b;
  for (const auto& r : tr.records) {
    t.push_back(r.t);
    a.push_back(r.w1inf > 0 ? std::log10(r.w1inf) : kNaN);
    b.push_back(r.l2 > 0 ? std::log10(r.l2) : kNaN);
  }
  double lo = INFINITY, hi = -INFINITY;
  for (const auto* v : {&a, &b})
    for (double x : *v)
      if (std::isfinite(x)) lo = std::min(lo, x), hi = std::max(hi, x);
  if (!std::isfinite(lo)) lo = -1, hi = 1;
  if (hi - lo < 1e-9) lo -= 0.5, hi += 0.5;
  const double t0 = t.front(), t1 = t.back() > t0 ? t.back() : t0 + 1;
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"600\" height=\"370\">\n"
     << "<rect x=\"60\" y=\"30\" width=\"520\" height=\"300\" fill=\"none\" stroke=\"#444\"/>\n"
     << "<text x=\"60\" y=\"20\" font-size=\"12\">log10 |u_x|_inf (red), log10 |u|_2 (blue)</text>\n"
     << "<text x=\"60\" y=\"350\" font-size=\"11\">t = " << format_double(t0) << "</text>\n"
     << "<text x=\"500\" y=\"350\" font-size=\"11\">t = " << format_double(t1) << "</text>\n"
     << "<text x=\"5\" y=\"35\" font-size=\"11\">" << format_double(std::round(hi * 100) / 100)
     << "</text>\n"
     << "<text x=\"5\" y=\"330\" font-size=\"11\">" << format_double(std::round(lo * 100) / 100)
     << "</text>\n"
     << polyline(t, a, t0, t1, lo, hi, "#c0392b") << polyline(t, b, t0, t1, lo, hi, "#2e5c9a")
     << "</svg>\n";
  return os.str();
}

}  // namespace

void write_series_csv(const Trajectory& tr, std::ostream& os) {
  const auto cols = series_columns(tr.config, tr.records);
  write_row(os, cols);
  for (const auto& r : tr.records) {
    std::vector<std::string> c = {format_double(r.t), format_double(r.l2)};
    for (double s : tr.config.diagnostics.hs_orders) c.push_back(format_double(lookup(r.hs, s)));
    c.push_back(format_double(r.linf));
    c.push_back(format_double(r.w1inf));
    c.push_back(format_double(r.analyticity_delta));
    c.push_back(format_double(r.y_quartic));
    c.push_back(format_double(r.modulus_margin));
    c.push_back(r.envelope_ok ? (*r.envelope_ok ? "1" : "0") : "");
    for (double p : tr.config.diagnostics.lp_orders) c.push_back(format_double(lookup(r.lp, p)));
    for (std::size_t i = c.size(); i < cols.size(); ++i) {
      const auto it = r.extra.find(cols[i]);
      c.push_back(format_double(it == r.extra.end() ? kNaN : it->second));
    }
    write_row(os, c);
  }
}

void write_table_csv(const Table& t, std::ostream& os) {
  write_row(os, t.columns);
  for (const auto& row : t.rows) {
    std::vector<std::string> c;
    for (double v : row) c.push_back(format_double(v));
    write_row(os, c);
  }
}

std::string content_hash(const std::string& text) {
  const std::string blob = "blob " + std::to_string(text.size()) + '\0' + text;
  unsigned char md[SHA_DIGEST_LENGTH];
  SHA1(reinterpret_cast<const unsigned char*>(blob.data()), blob.size(), md);
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned char b : md) {
    out += hex[b >> 4];
    out += hex[b & 15];
  }
  return out;
}

ordered_json calibration_json(const Calibration& c) {
  ordered_json j;
  j["K"] = c.modulus.K;
  j["xi0"] = c.modulus.xi0;
  j["cK"] = c.modulus.cK;
  j["grid"] = c.grid_points;
  ordered_json margins = ordered_json::array();
  for (const auto& e : c.log) {
    ordered_json m;
    m["K"] = e.K;
    m["junction_concave"] = e.concave;
    m["max_b"] = std::isnan(e.max_b) ? ordered_json() : ordered_json(e.max_b);
    m["max_c"] = std::isnan(e.max_c) ? ordered_json() : ordered_json(e.max_c);
    m["pass"] = e.pass;
    margins.push_back(m);
  }
  j["margins"] = margins;
  return j;
}

void write_outputs(const ExperimentSpec& spec, const ExperimentResult& r, const fs::path& dir) {
  fs::create_directories(dir);
  ordered_json run;
  run["tool"] = "fracburgers";
  run["experiment"] = to_string(spec.name);
  run["seed"] = spec.seed;
  run["input_hash"] = content_hash(spec.source);
  run["config"] = r.resolved;
  run["calibration"] = r.calibration;
  write_file(dir / "run.json", run.dump(2) + "\n");

  ordered_json summary = r.summary;
  summary["pass"] = r.pass;
  write_file(dir / "summary.json", summary.dump(2) + "\n");

  std::ostringstream series;
  if (r.trajectory) {
    write_series_csv(*r.trajectory, series);
  } else {
    Trajectory empty;
    empty.config = spec.solver;
    write_series_csv(empty, series);
  }
  write_file(dir / "series.csv", series.str());

  for (const auto& t : r.tables) {
    std::ostringstream os;
    write_table_csv(t, os);
    write_file(dir / t.file, os.str());
  }

  if (!r.trajectory) return;
  const auto& tr = *r.trajectory;
  if (spec.flag("plots", true) && !tr.records.empty()) write_file(dir / "series.svg", series_svg(tr));
  if (spec.has("profile_times") && !tr.snapshots.empty()) {
    for (double want : spec.numbers("profile_times", {})) {
      std::size_t best = 0;
      for (std::size_t i = 1; i < tr.times.size(); ++i)
        if (std::abs(tr.times[i] - want) < std::abs(tr.times[best] - want)) best = i;
      const auto& f = tr.snapshots[best];
      const auto u = synthesize(f);
      std::ostringstream os;
      const auto t = format_double(tr.times[best]);
      write_row(os, {"t", "x", "u"});
      for (std::size_t j = 0; j < u.size(); ++j)
        write_row(os, {t, format_double(j * f.grid().dx()), format_double(u[j])});
      write_file(dir / ("profile_" + format_double(want) + ".csv"), os.str());
    }
  }
}

int run_experiment(const ExperimentSpec& spec, const fs::path& dir) {
  try {
    const auto r = execute(spec);
    write_outputs(spec, r, dir);
    return r.pass ? 0 : 2;
  } catch (const std::exception& e) {
    std::cerr << "fracburgers: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace fburg
