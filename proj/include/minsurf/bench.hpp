#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "minsurf/degrade.hpp"
#include "minsurf/grid.hpp"
#include "minsurf/io.hpp"
#include "minsurf/metrics.hpp"
#include "minsurf/solvers.hpp"
#include "minsurf/spectral.hpp"

namespace minsurf {

enum class Method { PDM, TMM, FPM };

inline std::string method_name(Method m) {
  switch (m) {
    case Method::PDM: return "PDM";
    case Method::TMM: return "TMM";
    case Method::FPM: return "FPM";
  }
  throw std::logic_error("unreachable");
}

inline Method parse_method(const std::string& name) {
  std::string lower = name;
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return char(std::tolower(c)); });
  if (lower == "pdm") return Method::PDM;
  if (lower == "tmm") return Method::TMM;
  if (lower == "fpm") return Method::FPM;
  throw std::invalid_argument("unknown method '" + name + "' (expected pdm, tmm, or fpm)");
}

struct Scenario {
  std::string name;
  std::string image_path;
  DegradeSpec degrade;
  SolverConfig solver; // params + stop + step overrides
  std::vector<Method> methods;

  void validate() const {
    if (methods.empty())
      throw std::invalid_argument("scenario '" + name + "': methods must be nonempty");
    solver.validate_common();
    degrade.validate();
    for (Method m : methods)
      if (m != Method::PDM && !(solver.params.alpha > 0.0))
        throw std::invalid_argument("scenario '" + name + "': alpha=0 supports pdm only (" +
                                    method_name(m) + " divides by the gradient magnitude)");
  }
};

struct MethodResult {
  std::string method;
  bool ok = false;
  std::string error; // nonempty when ok == false
  double snr_db = 0.0;
  double ssim_value = 0.0;
  double wall_time_seconds = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<std::string> warnings;
};

struct BenchResult {
  std::string scenario;
  double degraded_snr_db = 0.0;
  double degraded_ssim = 0.0;
  std::uint64_t input_hash = 0; // hash of the shared degraded field
  std::vector<MethodResult> rows;
};

/// Parses the line-oriented scenario format: "[name]" section headers with
/// key=value lines. Keys: image, sigma, blur_hsize, blur_sigma, seed,
/// lambda, alpha, methods, tau, sigma_step, dt, max_iter, rel_tol.
/// Relative image paths resolve against the scenario file's directory.
inline std::vector<Scenario> parse_scenarios(const std::string& text,
                                             const std::string& base_dir) {
  std::vector<Scenario> out;
  Scenario current;
  bool in_section = false;
  int blur_hsize = 0;
  double blur_sigma = 0.0;

  auto finish = [&]() {
    if (!in_section) return;
    if (blur_hsize != 0) current.degrade.blur = BlurSpec::gaussian(blur_hsize, blur_sigma);
    current.validate();
    if (current.image_path.empty())
      throw std::invalid_argument("scenario '" + current.name + "': missing image key");
    out.push_back(current);
  };

  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto fail = [&](const std::string& msg) -> std::runtime_error {
      return std::runtime_error("scenario file line " + std::to_string(line_no) + ": " + msg);
    };
    // Trim and drop comments / blanks.
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto last = line.find_last_not_of(" \t\r");
    std::string body = line.substr(first, last - first + 1);
    if (body[0] == '#') continue;

    if (body.front() == '[') {
      if (body.back() != ']' || body.size() < 3) throw fail("malformed section header");
      finish();
      current = Scenario{};
      current.name = body.substr(1, body.size() - 2);
      in_section = true;
      blur_hsize = 0;
      blur_sigma = 0.0;
      continue;
    }
    if (!in_section) throw fail("key before any [scenario] section");

    const auto eq = body.find('=');
    if (eq == std::string::npos) throw fail("expected key=value");
    std::string key = body.substr(0, eq);
    std::string value = body.substr(eq + 1);
    const auto trim = [](std::string& s) {
      const auto b = s.find_first_not_of(" \t");
      const auto e = s.find_last_not_of(" \t");
      s = (b == std::string::npos) ? std::string() : s.substr(b, e - b + 1);
    };
    trim(key);
    trim(value);
    if (key.empty() || value.empty()) throw fail("empty key or value");

    try {
      if (key == "image") {
        std::filesystem::path p(value);
        current.image_path = p.is_absolute() ? p.string()
                                             : (std::filesystem::path(base_dir) / p).string();
      } else if (key == "sigma") {
        current.degrade.noise_sigma = std::stod(value);
      } else if (key == "blur_hsize") {
        blur_hsize = std::stoi(value);
      } else if (key == "blur_sigma") {
        blur_sigma = std::stod(value);
      } else if (key == "seed") {
        current.degrade.seed = std::stoull(value);
      } else if (key == "lambda") {
        current.solver.params.lambda = std::stod(value);
      } else if (key == "alpha") {
        current.solver.params.alpha = std::stod(value);
      } else if (key == "methods") {
        current.methods.clear();
        std::istringstream ms(value);
        std::string item;
        while (std::getline(ms, item, ',')) {
          trim(item);
          if (item.empty()) throw fail("empty entry in methods list");
          current.methods.push_back(parse_method(item));
        }
        if (current.methods.empty()) throw fail("methods list is empty");
      } else if (key == "tau") {
        current.solver.tau = std::stod(value);
      } else if (key == "sigma_step") {
        current.solver.sigma_step = std::stod(value);
      } else if (key == "dt") {
        current.solver.dt = std::stod(value);
      } else if (key == "max_iter") {
        current.solver.stop.max_iter = std::stoi(value);
      } else if (key == "rel_tol") {
        current.solver.stop.rel_tol = std::stod(value);
      } else {
        throw fail("unknown key '" + key + "'");
      }
    } catch (const std::invalid_argument& e) {
      throw fail(e.what());
    } catch (const std::out_of_range&) {
      throw fail("value out of range for key '" + key + "'");
    }
  }
  finish();
  if (out.empty()) throw std::runtime_error("scenario file defines no scenarios");
  return out;
}

inline std::vector<Scenario> load_scenarios(const std::string& path) {
  const std::vector<char> bytes = detail::read_all_bytes(path);
  const std::string base = std::filesystem::path(path).parent_path().string();
  return parse_scenarios(std::string(bytes.begin(), bytes.end()),
                         base.empty() ? std::string(".") : base);
}

/// Runs one scenario: load + normalize the clean image, degrade once, then
/// run every requested method from the identical degraded field. A solver
/// failure is captured in its row; remaining methods still run.
inline BenchResult run_scenario(const Scenario& s) {
  s.validate();
  const ImageGrid clean = normalize(load_image(s.image_path));
  const ImageGrid degraded = degrade(s.degrade, clean);
  const Spectrum spectrum =
      make_blur_spectrum(s.degrade.blur, clean.width(), clean.height());

  BenchResult result;
  result.scenario = s.name;
  result.input_hash = grid_hash(degraded);
  result.degraded_snr_db = snr(clean, degraded);
  result.degraded_ssim = ssim(clean, degraded);

  for (Method m : s.methods) {
    MethodResult row;
    row.method = method_name(m);
    try {
      SolveReport report;
      switch (m) {
        case Method::PDM: report = solve_pdm(s.solver, spectrum, degraded); break;
        case Method::TMM: report = solve_tmm(s.solver, spectrum, degraded); break;
        case Method::FPM: report = solve_fpm(s.solver, spectrum, degraded); break;
      }
      row.ok = true;
      row.snr_db = snr(clean, report.final_u);
      row.ssim_value = ssim(clean, report.final_u);
      row.wall_time_seconds = report.wall_time_seconds;
      row.iterations = report.iterations;
      row.converged = report.converged;
      row.warnings = report.warnings;
    } catch (const std::exception& e) {
      row.ok = false;
      row.error = e.what();
    }
    result.rows.push_back(std::move(row));
  }
  return result;
}

enum class TableFormat { Text, Csv, Json };

inline TableFormat parse_table_format(const std::string& name) {
  if (name == "text") return TableFormat::Text;
  if (name == "csv") return TableFormat::Csv;
  if (name == "json") return TableFormat::Json;
  throw std::invalid_argument("unknown format '" + name + "' (expected text, csv, or json)");
}

namespace detail {

// JSON has no literal for non-finite reals (they would serialize as null),
// so encode them as strings to keep the round trip lossless.
inline nlohmann::json json_real(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

inline double real_from_json(const nlohmann::json& j) {
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    throw std::invalid_argument("unrecognized real value '" + s + "'");
  }
  return j.get<double>();
}

} // namespace detail

inline nlohmann::json results_to_json(const std::vector<BenchResult>& results) {
  nlohmann::json out = nlohmann::json::array();
  for (const BenchResult& r : results) {
    nlohmann::json jr;
    jr["scenario"] = r.scenario;
    jr["degraded_snr_db"] = detail::json_real(r.degraded_snr_db);
    jr["degraded_ssim"] = detail::json_real(r.degraded_ssim);
    jr["input_hash"] = r.input_hash;
    jr["rows"] = nlohmann::json::array();
    for (const MethodResult& m : r.rows) {
      nlohmann::json jm;
      jm["method"] = m.method;
      jm["ok"] = m.ok;
      if (!m.ok) jm["error"] = m.error;
      jm["snr_db"] = detail::json_real(m.snr_db);
      jm["ssim"] = detail::json_real(m.ssim_value);
      jm["wall_time_seconds"] = m.wall_time_seconds;
      jm["iterations"] = m.iterations;
      jm["converged"] = m.converged;
      if (!m.warnings.empty()) jm["warnings"] = m.warnings;
      jr["rows"].push_back(std::move(jm));
    }
    out.push_back(std::move(jr));
  }
  return out;
}

inline std::vector<BenchResult> parse_results(const std::string& json_text) {
  const nlohmann::json in = nlohmann::json::parse(json_text);
  std::vector<BenchResult> out;
  for (const auto& jr : in) {
    BenchResult r;
    r.scenario = jr.at("scenario").get<std::string>();
    r.degraded_snr_db = detail::real_from_json(jr.at("degraded_snr_db"));
    r.degraded_ssim = detail::real_from_json(jr.at("degraded_ssim"));
    r.input_hash = jr.at("input_hash").get<std::uint64_t>();
    for (const auto& jm : jr.at("rows")) {
      MethodResult m;
      m.method = jm.at("method").get<std::string>();
      m.ok = jm.at("ok").get<bool>();
      if (jm.contains("error")) m.error = jm.at("error").get<std::string>();
      m.snr_db = detail::real_from_json(jm.at("snr_db"));
      m.ssim_value = detail::real_from_json(jm.at("ssim"));
      m.wall_time_seconds = jm.at("wall_time_seconds").get<double>();
      m.iterations = jm.at("iterations").get<int>();
      m.converged = jm.at("converged").get<bool>();
      if (jm.contains("warnings"))
        m.warnings = jm.at("warnings").get<std::vector<std::string>>();
      r.rows.push_back(std::move(m));
    }
    out.push_back(std::move(r));
  }
  return out;
}

/// Renders results. Text: one block per scenario with columns
/// Method | SNR | SSIM | Time(s) | Ite. Csv/json losslessly encode the rows.
inline std::string emit_table(const std::vector<BenchResult>& results, TableFormat format) {
  if (results.empty()) throw std::invalid_argument("emit_table: no results");
  std::ostringstream out;
  switch (format) {
    case TableFormat::Json:
      out << results_to_json(results).dump(2) << "\n";
      break;
    case TableFormat::Csv: {
      out << "scenario,method,snr_db,ssim,wall_time_seconds,iterations,converged,ok,error\n";
      out << std::setprecision(17);
      for (const BenchResult& r : results)
        for (const MethodResult& m : r.rows) {
          std::string err = m.error;
          std::replace(err.begin(), err.end(), ',', ';');
          out << r.scenario << ',' << m.method << ',' << m.snr_db << ','
              << m.ssim_value << ',' << m.wall_time_seconds << ',' << m.iterations
              << ',' << (m.converged ? "true" : "false") << ','
              << (m.ok ? "true" : "false") << ',' << err << '\n';
        }
      break;
    }
    case TableFormat::Text: {
      for (const BenchResult& r : results) {
        out << "== " << r.scenario << " ==\n";
        out << std::fixed << std::setprecision(4);
        out << "degraded: SNR " << r.degraded_snr_db << " dB, SSIM "
            << r.degraded_ssim << "\n";
        out << "Method |      SNR |   SSIM | Time(s) | Ite\n";
        out << "-------+----------+--------+---------+----\n";
        for (const MethodResult& m : r.rows) {
          if (!m.ok) {
            out << std::setw(6) << std::left << m.method << std::right
                << " | error: " << m.error << "\n";
            continue;
          }
          out << std::setw(6) << std::left << m.method << std::right << " | "
              << std::setw(8) << m.snr_db << " | " << std::setw(6) << m.ssim_value
              << " | " << std::setw(7) << m.wall_time_seconds << " | "
              << std::setw(3) << m.iterations << (m.converged ? "" : " (cap)") << "\n";
          for (const std::string& w : m.warnings) out << "       | note: " << w << "\n";
        }
        out << "\n";
      }
      break;
    }
  }
  return out.str();
}

} // namespace minsurf
