#include <catch_amalgamated.hpp>

#include <cmath>

#include "minsurf/degrade.hpp"
#include "minsurf/metrics.hpp"
#include "minsurf/solvers.hpp"
#include "support/oracles.hpp"
#include "support/synthetic.hpp"

using minsurf::ImageGrid;
using minsurf::SolveReport;
using minsurf::SolverConfig;
using minsurf::Spectrum;

namespace {

ImageGrid noisy_shapes(int n, double sigma, std::uint64_t seed) {
  minsurf::DegradeSpec spec;
  spec.noise_sigma = sigma;
  spec.seed = seed;
  return minsurf::degrade(spec, testsupport::shapes(n, n));
}

} // namespace

TEST_CASE("step contract enforcement") {
  CHECK_NOTHROW(minsurf::require_pdm_step_contract(0.35, 0.35)); // 0.1225 < 0.125
  CHECK_THROWS_AS(minsurf::require_pdm_step_contract(0.5, 0.25),
                  std::invalid_argument); // exactly 1/8 is out
  CHECK_THROWS_AS(minsurf::require_pdm_step_contract(1.0, 1.0), std::invalid_argument);

  SolverConfig config;
  config.tau = 0.4;
  config.sigma_step = 0.4;
  ImageGrid f(8, 8, 1.0);
  CHECK_THROWS_AS(minsurf::solve_pdm(config, Spectrum::identity(8, 8), f),
                  std::invalid_argument);
}

TEST_CASE("config validation") {
  SolverConfig config;
  config.params.lambda = -1.0;
  CHECK_THROWS_AS(config.validate_common(), std::invalid_argument);
  config = SolverConfig{};
  config.cg_max_iter = 0;
  CHECK_THROWS_AS(config.validate_common(), std::invalid_argument);
  config = SolverConfig{};
  CHECK(config.effective_dt() ==
        Catch::Approx(1.0 / (config.params.lambda + 8.0 / std::sqrt(config.params.alpha))));
  config.dt = 0.125;
  CHECK(config.effective_dt() == 0.125);
}

TEST_CASE("primal-dual solver") {
  SECTION("constant data is an exact fixed point") {
    ImageGrid f(16, 16, 77.0);
    SolverConfig config;
    config.params.lambda = 0.5;
    SolveReport report = minsurf::solve_pdm(config, Spectrum::identity(16, 16), f);
    CHECK(report.converged);
    CHECK(report.iterations == 1);
    CHECK(report.energy_trace.size() == 2);
    CHECK(testsupport::max_abs_diff(report.final_u, f) <= 1e-12);
  }
  SECTION("report bookkeeping and convergence on a noisy instance") {
    ImageGrid f = noisy_shapes(64, 10.0, 3);
    SolverConfig config;
    config.params.lambda = 0.12;
    config.params.alpha = 0.01;
    SolveReport report = minsurf::solve_pdm(config, Spectrum::identity(64, 64), f);
    CHECK(report.converged);
    CHECK(report.iterations < 500);
    CHECK(report.energy_trace.size() == std::size_t(report.iterations) + 1);
    CHECK(report.rel_change_trace.size() == std::size_t(report.iterations));
    CHECK(report.rel_change_trace.back() <= config.stop.rel_tol);
    CHECK(report.final_u.all_finite());

    // Energy settles into a nonincreasing tail.
    const auto& e = report.energy_trace;
    for (std::size_t k = e.size() - 10; k + 1 < e.size(); ++k)
      CHECK(e[k + 1] <= e[k] * (1.0 + 1e-9));
  }
  SECTION("two runs are bitwise identical") {
    ImageGrid f = noisy_shapes(32, 10.0, 4);
    SolverConfig config;
    config.params.lambda = 0.15;
    SolveReport a = minsurf::solve_pdm(config, Spectrum::identity(32, 32), f);
    SolveReport b = minsurf::solve_pdm(config, Spectrum::identity(32, 32), f);
    CHECK(a.iterations == b.iterations);
    CHECK(testsupport::max_abs_diff(a.final_u, b.final_u) == 0.0);
    CHECK(a.energy_trace == b.energy_trace);
    CHECK(a.rel_change_trace == b.rel_change_trace);
  }
  SECTION("reduces to classical total-variation denoising at alpha zero") {
    ImageGrid f = noisy_shapes(32, 10.0, 5);
    SolverConfig config;
    config.params.lambda = 0.15;
    config.params.alpha = 0.0;
    config.stop.rel_tol = 1e-8;
    config.stop.max_iter = 20000;
    SolveReport report = minsurf::solve_pdm(config, Spectrum::identity(32, 32), f);
    ImageGrid oracle = testsupport::oracle_rof_denoise(f, config.params.lambda, config.tau,
                                                       config.sigma_step, 1e-8, 20000);
    CHECK(testsupport::rms_diff(report.final_u, oracle) <= 1e-4);
  }
}

TEST_CASE("time-marching solver") {
  SECTION("constant data does not move") {
    ImageGrid f(12, 12, 9.0);
    SolverConfig config;
    SolveReport report = minsurf::solve_tmm(config, Spectrum::identity(12, 12), f);
    CHECK(report.converged);
    CHECK(report.iterations == 1);
    CHECK(testsupport::max_abs_diff(report.final_u, f) == 0.0);
  }
  SECTION("first step matches a hand-rolled computation") {
    ImageGrid f = testsupport::random_field(4, 4, 17, 0.0, 255.0);
    SolverConfig config;
    config.params.lambda = 0.3;
    config.params.alpha = 0.01;
    config.dt = 0.004;
    config.stop.max_iter = 1;
    SolveReport report = minsurf::solve_tmm(config, Spectrum::identity(4, 4), f);
    ImageGrid expected = testsupport::oracle_tmm_first_step(f, config.params.alpha, config.dt);
    CHECK(report.iterations == 1);
    CHECK(testsupport::max_abs_diff(report.final_u, expected) <= 1e-12);
  }
  SECTION("rejects the total-variation limit") {
    SolverConfig config;
    config.params.alpha = 0.0;
    ImageGrid f(8, 8, 1.0);
    CHECK_THROWS_AS(minsurf::solve_tmm(config, Spectrum::identity(8, 8), f),
                    std::invalid_argument);
  }
  SECTION("oversized steps are reported as divergence") {
    ImageGrid f = noisy_shapes(16, 10.0, 6);
    SolverConfig config;
    config.params.lambda = 0.14;
    config.dt = 50.0;
    CHECK_THROWS_MATCHES(minsurf::solve_tmm(config, Spectrum::identity(16, 16), f),
                         minsurf::SolverError,
                         Catch::Matchers::MessageMatches(
                             Catch::Matchers::ContainsSubstring("smaller dt")));
  }
}

TEST_CASE("fixed-point solver") {
  SECTION("frozen-coefficient operator is self-adjoint and positive") {
    ImageGrid coeff = testsupport::random_field(8, 8, 21, 0.2, 2.0);
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
      ImageGrid u = testsupport::random_field(8, 8, 300 + seed, -1.0, 1.0);
      ImageGrid v = testsupport::random_field(8, 8, 400 + seed, -1.0, 1.0);
      const double lu_v =
          minsurf::inner_product_x(minsurf::detail::lagged_diffusion(coeff, u), v);
      const double u_lv =
          minsurf::inner_product_x(u, minsurf::detail::lagged_diffusion(coeff, v));
      CHECK(std::abs(lu_v - u_lv) <= 1e-10 * (1.0 + std::abs(u_lv)));
      const double quad =
          minsurf::inner_product_x(minsurf::detail::lagged_diffusion(coeff, u), u);
      CHECK(quad >= -1e-10);
    }
  }
  SECTION("constant data is solved in one outer step") {
    ImageGrid f(10, 10, 25.0);
    SolverConfig config;
    SolveReport report = minsurf::solve_fpm(config, Spectrum::identity(10, 10), f);
    CHECK(report.converged);
    CHECK(report.iterations == 1);
    CHECK(testsupport::max_abs_diff(report.final_u, f) <= 1e-12);
  }
  SECTION("rejects the total-variation limit") {
    SolverConfig config;
    config.params.alpha = 0.0;
    ImageGrid f(8, 8, 1.0);
    CHECK_THROWS_AS(minsurf::solve_fpm(config, Spectrum::identity(8, 8), f),
                    std::invalid_argument);
  }
  SECTION("two runs are bitwise identical") {
    ImageGrid f = noisy_shapes(24, 10.0, 7);
    SolverConfig config;
    config.params.lambda = 0.12;
    SolveReport a = minsurf::solve_fpm(config, Spectrum::identity(24, 24), f);
    SolveReport b = minsurf::solve_fpm(config, Spectrum::identity(24, 24), f);
    CHECK(a.iterations == b.iterations);
    CHECK(testsupport::max_abs_diff(a.final_u, b.final_u) == 0.0);
    CHECK(a.energy_trace == b.energy_trace);
  }
}

TEST_CASE("cross-solver consensus on a denoising instance") {
  const int n = 64;
  ImageGrid f = noisy_shapes(n, 10.0, 12);
  const Spectrum spectrum = Spectrum::identity(n, n);

  SolverConfig config;
  config.params.lambda = 0.12;
  config.params.alpha = 0.01;

  SolveReport pdm = minsurf::solve_pdm(config, spectrum, f);

  // The explicit scheme creeps: its relative per-step change undershoots the
  // distance to the minimizer, so give it a tighter tolerance and more room
  // to demonstrate that it heads to the same point.
  SolverConfig tmm_config = config;
  tmm_config.stop.rel_tol = 1e-6;
  tmm_config.stop.max_iter = 20000;
  SolveReport tmm = minsurf::solve_tmm(tmm_config, spectrum, f);

  SolveReport fpm = minsurf::solve_fpm(config, spectrum, f);

  REQUIRE(pdm.converged);
  REQUIRE(tmm.converged);
  REQUIRE(fpm.converged);

  CHECK(testsupport::rms_diff(pdm.final_u, tmm.final_u) <= 0.5);
  CHECK(testsupport::rms_diff(pdm.final_u, fpm.final_u) <= 0.5);
  CHECK(testsupport::rms_diff(tmm.final_u, fpm.final_u) <= 0.5);

  // All three minimize the same strictly convex objective.
  const double e_pdm = pdm.energy_trace.back();
  const double e_tmm = tmm.energy_trace.back();
  CHECK(std::abs(e_pdm - e_tmm) <= 0.005 * std::abs(e_pdm));
}

TEST_CASE("gradient operator norm estimate") {
  SECTION("matches the brute-force eigendecomposition on the smallest lattice") {
    const double estimate = minsurf::operator_norm_check(2, 2);
    CHECK(estimate == Catch::Approx(8.0).margin(1e-9));
    auto eig = testsupport::jacobi_eigenvalues(testsupport::neg_div_grad_matrix(2, 2));
    double top = eig[0];
    for (double v : eig) top = std::max(top, v);
    CHECK(top == Catch::Approx(8.0).margin(1e-9));
  }
  SECTION("is bounded by eight across lattice sizes") {
    for (int n : {2, 3, 16, 64}) {
      const double estimate = minsurf::operator_norm_check(n, n);
      CHECK(estimate > 0.0);
      CHECK(estimate <= 8.0 + 1e-6);
    }
  }
  SECTION("keeps the default steps inside the convergence region") {
    const double estimate = minsurf::operator_norm_check(16, 16);
    CHECK(0.35 * 0.35 * estimate < 1.0);
  }
  SECTION("rejects degenerate lattices") {
    CHECK_THROWS_AS(minsurf::operator_norm_check(1, 8), std::invalid_argument);
  }
}
