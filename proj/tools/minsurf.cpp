// Command-line front end: degrade / restore / metrics / bench.

#include <cstdint>
#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "minsurf/minsurf.hpp"

namespace {

std::string preview_path(const std::string& output) {
  return output + ".preview.pgm";
}

minsurf::BlurSpec blur_from_flags(int hsize, double sigma) {
  if (hsize == 0) return minsurf::BlurSpec{};
  if (hsize < 0 || hsize % 2 == 0)
    throw CLI::ValidationError("--blur-hsize",
                               "blur window size must be odd and positive, got " +
                                   std::to_string(hsize));
  if (!(sigma > 0.0))
    throw CLI::ValidationError("--blur-sigma",
                               "blur standard deviation must be positive when "
                               "--blur-hsize is set");
  return minsurf::BlurSpec::gaussian(hsize, sigma);
}

int cmd_degrade(const std::string& input, const std::string& output, double sigma,
                int blur_hsize, double blur_sigma, std::uint64_t seed, bool preview) {
  minsurf::DegradeSpec spec;
  spec.noise_sigma = sigma;
  spec.seed = seed;
  spec.blur = blur_from_flags(blur_hsize, blur_sigma);

  const minsurf::ImageGrid clean = minsurf::normalize(minsurf::load_image(input));
  const minsurf::ImageGrid degraded = minsurf::degrade(spec, clean);
  minsurf::write_grid(output, degraded);
  if (preview) minsurf::write_pgm_preview(preview_path(output), degraded);

  std::cout << "degrade: " << clean.width() << "x" << clean.height()
            << " sigma=" << sigma << " blur=";
  if (spec.blur.is_identity())
    std::cout << "identity";
  else
    std::cout << "G(" << blur_hsize << "," << blur_sigma << ")";
  std::cout << " seed=" << seed << " -> " << output << "\n";
  return 0;
}

int cmd_restore(const std::string& input, const std::string& output,
                const std::string& method, const minsurf::SolverConfig& config,
                int blur_hsize, double blur_sigma, const std::string& reference,
                const std::string& report_path, bool preview) {
  minsurf::Method m;
  try {
    m = minsurf::parse_method(method);
  } catch (const std::invalid_argument& e) {
    throw CLI::ValidationError("--method", e.what());
  }
  if (m != minsurf::Method::PDM && !(config.params.alpha > 0.0))
    throw CLI::ValidationError(
        "--alpha", "alpha=0 is valid only with pdm: tmm and fpm divide by "
                   "sqrt(|grad u|^2 + alpha), which is singular at alpha=0");
  if (m == minsurf::Method::PDM && !(config.tau * config.sigma_step < 0.125))
    throw CLI::ValidationError(
        "--tau", "step contract violated: pdm requires tau*sigma < 1/8");

  const minsurf::BlurSpec blur = blur_from_flags(blur_hsize, blur_sigma);
  const minsurf::ImageGrid f = minsurf::load_image(input);
  const minsurf::Spectrum spectrum =
      minsurf::make_blur_spectrum(blur, f.width(), f.height());

  minsurf::SolveReport report;
  switch (m) {
    case minsurf::Method::PDM: report = minsurf::solve_pdm(config, spectrum, f); break;
    case minsurf::Method::TMM: report = minsurf::solve_tmm(config, spectrum, f); break;
    case minsurf::Method::FPM: report = minsurf::solve_fpm(config, spectrum, f); break;
  }

  minsurf::write_grid(output, report.final_u);
  if (preview) minsurf::write_pgm_preview(preview_path(output), report.final_u);

  std::cout << "restore: method=" << method << " lambda=" << config.params.lambda
            << " alpha=" << config.params.alpha << " tau=" << config.tau
            << " sigma=" << config.sigma_step << " dt=" << config.effective_dt()
            << " rel_tol=" << config.stop.rel_tol
            << " max_iter=" << config.stop.max_iter << "\n";
  std::cout << "iterations=" << report.iterations
            << " converged=" << (report.converged ? "true" : "false")
            << " time_s=" << report.wall_time_seconds << "\n";
  for (const std::string& w : report.warnings) std::cout << "warning: " << w << "\n";

  nlohmann::json j = minsurf::report_to_json(method, config, report);
  if (!reference.empty()) {
    const minsurf::ImageGrid ref = minsurf::load_image(reference);
    const double s = minsurf::snr(ref, report.final_u);
    const double ss = minsurf::ssim(ref, report.final_u);
    std::cout << "SNR_dB=" << s << " SSIM=" << ss << "\n";
    j["metrics"] = {{"snr_db", s}, {"ssim", ss}};
  }
  if (!report_path.empty()) minsurf::write_report(report_path, j);
  return 0;
}

int cmd_metrics(const std::string& reference, const std::string& test) {
  const minsurf::ImageGrid ref = minsurf::load_image(reference);
  const minsurf::ImageGrid t = minsurf::load_image(test);
  std::cout << "SNR_dB=" << minsurf::snr(ref, t) << " SSIM=" << minsurf::ssim(ref, t)
            << "\n";
  return 0;
}

int cmd_bench(const std::string& scenario_path, const std::string& format,
              const std::string& output) {
  const minsurf::TableFormat fmt = minsurf::parse_table_format(format);
  const std::vector<minsurf::Scenario> scenarios = minsurf::load_scenarios(scenario_path);
  std::vector<minsurf::BenchResult> results;
  bool any_error = false;
  for (const minsurf::Scenario& s : scenarios) {
    minsurf::BenchResult r = minsurf::run_scenario(s);
    for (const minsurf::MethodResult& row : r.rows)
      if (!row.ok) any_error = true;
    results.push_back(std::move(r));
  }
  const std::string table = minsurf::emit_table(results, fmt);
  if (output.empty()) {
    std::cout << table;
  } else {
    minsurf::detail::write_all_bytes(output, table);
    std::cout << "bench: wrote " << output << "\n";
  }
  return any_error ? 1 : 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Minimal-surface image restoration: degradation, three solvers "
               "(pdm, tmm, fpm), quality metrics, and benchmarks"};
  app.require_subcommand(1);

  // ---- degrade ----
  auto* degrade = app.add_subcommand("degrade", "Blur and add seeded Gaussian noise");
  std::string dg_input, dg_output;
  double dg_sigma = 0.0, dg_blur_sigma = 0.0;
  int dg_blur_hsize = 0;
  std::uint64_t dg_seed = 0;
  bool dg_no_preview = false;
  degrade->add_option("--input", dg_input, "Input image (PGM P5 or grid file)")->required();
  degrade->add_option("--output", dg_output, "Output grid file")->required();
  degrade->add_option("--sigma", dg_sigma, "Noise standard deviation on the [0,255] scale");
  degrade->add_option("--blur-hsize", dg_blur_hsize,
                      "Gaussian blur window size (odd; 0 = no blur)");
  degrade->add_option("--blur-sigma", dg_blur_sigma, "Gaussian blur standard deviation");
  degrade->add_option("--seed", dg_seed, "Noise seed");
  degrade->add_flag("--no-preview", dg_no_preview, "Skip the 8-bit preview image");

  // ---- restore ----
  auto* restore = app.add_subcommand("restore", "Run a restoration solver");
  std::string rs_input, rs_output, rs_method = "pdm", rs_reference, rs_report;
  minsurf::SolverConfig rs_config;
  int rs_blur_hsize = 0;
  double rs_blur_sigma = 0.0;
  bool rs_no_preview = false;
  restore->add_option("--input", rs_input, "Degraded input (grid file or PGM)")->required();
  restore->add_option("--output", rs_output, "Restored output grid file")->required();
  restore->add_option("--method", rs_method, "Solver: pdm, tmm, or fpm");
  restore->add_option("--lambda", rs_config.params.lambda, "Fidelity weight (> 0)");
  restore->add_option("--alpha", rs_config.params.alpha,
                      "Surface parameter (>= 0; 0 only with pdm)");
  restore->add_option("--tau", rs_config.tau, "Primal step (pdm)");
  restore->add_option("--sigma-step", rs_config.sigma_step, "Dual step (pdm)");
  restore->add_option("--dt", rs_config.dt, "Time step (tmm); 0 = auto");
  restore->add_option("--max-iter", rs_config.stop.max_iter, "Iteration cap");
  restore->add_option("--rel-tol", rs_config.stop.rel_tol, "Relative stopping tolerance");
  restore->add_option("--blur-hsize", rs_blur_hsize,
                      "Blur window of the degradation operator (odd; 0 = none)");
  restore->add_option("--blur-sigma", rs_blur_sigma, "Blur standard deviation");
  restore->add_option("--reference", rs_reference, "Clean reference for metrics");
  restore->add_option("--report", rs_report, "Write a JSON run report here");
  restore->add_flag("--no-preview", rs_no_preview, "Skip the 8-bit preview image");

  // ---- metrics ----
  auto* metrics = app.add_subcommand("metrics", "Print SNR and SSIM of test vs reference");
  std::string mt_reference, mt_test;
  metrics->add_option("--reference", mt_reference, "Reference image")->required();
  metrics->add_option("--input", mt_test, "Test image")->required();

  // ---- bench ----
  auto* bench = app.add_subcommand("bench", "Run a scenario file and print a table");
  std::string bn_scenarios, bn_format = "text", bn_output;
  bench->add_option("--input", bn_scenarios, "Scenario file")->required();
  bench->add_option("--format", bn_format, "Output format: text, csv, or json");
  bench->add_option("--output", bn_output, "Write the table here instead of stdout");

  CLI11_PARSE(app, argc, argv);

  try {
    if (degrade->parsed())
      return cmd_degrade(dg_input, dg_output, dg_sigma, dg_blur_hsize, dg_blur_sigma,
                         dg_seed, !dg_no_preview);
    if (restore->parsed())
      return cmd_restore(rs_input, rs_output, rs_method, rs_config, rs_blur_hsize,
                         rs_blur_sigma, rs_reference, rs_report, !rs_no_preview);
    if (metrics->parsed()) return cmd_metrics(mt_reference, mt_test);
    if (bench->parsed()) return cmd_bench(bn_scenarios, bn_format, bn_output);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
