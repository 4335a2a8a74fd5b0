#include <catch_amalgamated.hpp>

#include <cmath>

#include "minsurf/model.hpp"
#include "support/oracles.hpp"
#include "support/synthetic.hpp"

using minsurf::ImageGrid;
using minsurf::ModelParams;
using minsurf::Spectrum;
using minsurf::StopRule;

TEST_CASE("parameter validation") {
  CHECK_THROWS_AS((ModelParams{0.0, 0.01}).validate(), std::invalid_argument);
  CHECK_THROWS_AS((ModelParams{-1.0, 0.01}).validate(), std::invalid_argument);
  CHECK_THROWS_AS((ModelParams{1.0, -0.01}).validate(), std::invalid_argument);
  CHECK_NOTHROW((ModelParams{1.0, 0.0}).validate());
  CHECK_THROWS_AS((StopRule{0.0, 10}).validate(), std::invalid_argument);
  CHECK_THROWS_AS((StopRule{1e-5, 0}).validate(), std::invalid_argument);
}

TEST_CASE("energy evaluation") {
  SECTION("constant fixed point has only the surface floor") {
    const int n = 6;
    ImageGrid c(n, n, 42.0);
    ModelParams params{0.7, 0.01};
    Spectrum s = Spectrum::identity(n, n);
    CHECK(minsurf::energy(params, s, c, c) ==
          Catch::Approx(n * n * std::sqrt(params.alpha)).epsilon(1e-14));
  }
  SECTION("alpha of zero on matching data reduces to total variation") {
    ImageGrid f = testsupport::shapes(8, 8);
    ModelParams params{0.3, 0.0};
    Spectrum s = Spectrum::identity(8, 8);
    double tv = 0.0;
    for (int i = 0; i < 8; ++i)
      for (int j = 0; j < 8; ++j) {
        const double dx = f((i + 1) % 8, j) - f(i, j);
        const double dy = f(i, (j + 1) % 8) - f(i, j);
        tv += std::sqrt(dx * dx + dy * dy);
      }
    CHECK(minsurf::energy(params, s, f, f) == Catch::Approx(tv).epsilon(1e-12));
  }
  SECTION("matches an order-independent re-summation") {
    ImageGrid f = testsupport::random_field(4, 4, 81, 0.0, 255.0);
    ImageGrid u = testsupport::random_field(4, 4, 82, 0.0, 255.0);
    ModelParams params{0.25, 0.01};
    Spectrum s = Spectrum::identity(4, 4);
    const double lib = minsurf::energy(params, s, f, u);
    const double oracle =
        testsupport::oracle_energy_identity(params.lambda, params.alpha, f, u);
    CHECK(std::abs(lib - oracle) <= 1e-10 * (1.0 + std::abs(oracle)));
  }
  SECTION("surface term is floored at n*sqrt(alpha), with equality only for constants") {
    ModelParams params{1.0, 0.04};
    Spectrum s = Spectrum::identity(5, 5);
    const double floor = 25.0 * std::sqrt(params.alpha);
    ImageGrid c(5, 5, 7.0);
    // u = f isolates the surface term.
    CHECK(minsurf::energy(params, s, c, c) == Catch::Approx(floor).epsilon(1e-14));
    ImageGrid bump = c;
    bump(2, 2) += 1.0;
    CHECK(minsurf::energy(params, s, bump, bump) > floor + 1.0);
  }
}

TEST_CASE("curvature operator") {
  SECTION("vanishes on constants") {
    ImageGrid c(8, 8, 3.0);
    ImageGrid out = minsurf::euler_lagrange(ModelParams{1.0, 0.01}, c);
    for (double v : out.values()) CHECK(v == 0.0);
  }
  SECTION("rejects the degenerate alpha") {
    ImageGrid u = testsupport::random_field(4, 4, 1);
    CHECK_THROWS_AS(minsurf::euler_lagrange(ModelParams{1.0, 0.0}, u),
                    std::invalid_argument);
  }
  SECTION("linearizes to the scaled periodic Laplacian at tiny amplitude") {
    const double alpha = 0.01, eps = 1e-6;
    ImageGrid u = testsupport::random_field(8, 8, 91, -eps, eps);
    ImageGrid lin = testsupport::oracle_laplacian(u);
    lin *= 1.0 / std::sqrt(alpha);
    ImageGrid got = minsurf::euler_lagrange(ModelParams{1.0, alpha}, u);
    got -= lin;
    CHECK(minsurf::norm_x(got) <= 1e-8 * (minsurf::norm_x(lin) + 1e-300));
  }
  SECTION("outputs have zero mean") {
    ImageGrid u = testsupport::random_field(9, 7, 92, 0.0, 255.0);
    ImageGrid out = minsurf::euler_lagrange(ModelParams{1.0, 0.01}, u);
    double sum = 0.0;
    for (double v : out.values()) sum += v;
    CHECK(std::abs(sum) <= 1e-10 * double(out.pixel_count()));
  }
  SECTION("is the negative gradient of the surface term") {
    ModelParams params{1.0, 0.01};
    Spectrum s = Spectrum::identity(8, 8);
    ImageGrid u = testsupport::random_field(8, 8, 93, 0.0, 1.0);
    // With f = u the fidelity contribution to central differences cancels
    // exactly, leaving the surface term's gradient.
    ImageGrid fd = testsupport::oracle_fd_energy_gradient(params, s, u, u, 1e-5);
    ImageGrid neg_el = minsurf::euler_lagrange(params, u);
    neg_el *= -1.0;
    CHECK(testsupport::max_abs_diff(fd, neg_el) <= 1e-6);
  }
}

TEST_CASE("full-objective gradient consistency") {
  ModelParams params{0.8, 0.01};
  Spectrum s = Spectrum::identity(8, 8);
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    ImageGrid f = testsupport::random_field(8, 8, 110 + seed, 0.0, 1.0);
    ImageGrid u = testsupport::random_field(8, 8, 120 + seed, 0.0, 1.0);
    ImageGrid fd = testsupport::oracle_fd_energy_gradient(params, s, f, u, 1e-5);
    ImageGrid analytic = u;
    analytic -= f;
    analytic *= params.lambda;
    analytic -= minsurf::euler_lagrange(params, u);
    CHECK(testsupport::max_abs_diff(fd, analytic) <= 1e-6);
  }
}

TEST_CASE("scalar conjugate identity") {
  SECTION("hand-solved points") {
    auto p0 = minsurf::conjugate_identity(1.0, 0.0);
    CHECK(p0.value == 1.0);
    CHECK(p0.argmax_s == 0.0);
    auto p1 = minsurf::conjugate_identity(1.0, 1.0);
    CHECK(p1.value == Catch::Approx(std::sqrt(2.0)).epsilon(1e-15));
    CHECK(p1.argmax_s == Catch::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-15));
  }
  SECTION("value is even and the maximizer odd in t") {
    for (double t : {0.25, 1.0, 3.5}) {
      auto plus = minsurf::conjugate_identity(0.3, t);
      auto minus = minsurf::conjugate_identity(0.3, -t);
      CHECK(plus.value == minus.value);
      CHECK(plus.argmax_s == -minus.argmax_s);
    }
  }
  SECTION("maximizer is strictly interior and consistent") {
    for (double t : {-4.0, -0.1, 0.0, 2.0, 5.0}) {
      auto p = minsurf::conjugate_identity(0.01, t);
      CHECK(std::abs(p.argmax_s) < 1.0);
      CHECK(p.value * p.value == Catch::Approx(0.01 + t * t).epsilon(1e-14));
    }
  }
  SECTION("rejects the degenerate alpha") {
    CHECK_THROWS_AS(minsurf::conjugate_identity(0.0, 1.0), std::invalid_argument);
  }
  SECTION("matches brute-force search over the dual interval") {
    const double step = 1e-5;
    const auto slack = testsupport::conjugate_grid_slack(step);
    for (int k = 0; k <= 100; ++k) {
      const double t = -5.0 + 0.1 * k;
      const double closed = minsurf::conjugate_identity(0.01, t).value;
      const double brute = testsupport::conjugate_bruteforce(0.01, t, step, slack);
      CHECK(std::abs(closed - brute) <= 1e-6);
    }
  }
}

TEST_CASE("stopping rule") {
  StopRule rule{1e-5, 500};
  ImageGrid u(4, 4, 10.0);
  SECTION("no change stops immediately") {
    CHECK(minsurf::check_stop(rule, u, u, 5.0, 5.0, 1));
  }
  SECTION("hitting the cap stops regardless of change") {
    ImageGrid moved = u;
    moved(0, 0) += 100.0;
    CHECK_FALSE(minsurf::check_stop(rule, u, moved, 5.0, 50.0, 499));
    CHECK(minsurf::check_stop(rule, u, moved, 5.0, 50.0, 500));
  }
  SECTION("the larger of the two ratios governs") {
    // Relative u-change 2e-5 with relative energy change 1e-6 fails 1e-5.
    ImageGrid next = u;
    const double nu = minsurf::norm_x(u);
    next(0, 0) += 2e-5 * nu; // ||next - u|| / ||u|| = 2e-5
    CHECK_FALSE(minsurf::check_stop(rule, u, next, 1.0, 1.0 + 1e-6, 3));
    ImageGrid close = u;
    close(0, 0) += 0.5e-5 * nu;
    CHECK(minsurf::check_stop(rule, u, close, 1.0, 1.0 + 1e-6, 3));
  }
  SECTION("degenerate denominators fall back to absolute changes") {
    ImageGrid zero(4, 4, 0.0);
    ImageGrid small = zero;
    small(0, 0) = 1e-7;
    CHECK(minsurf::check_stop(rule, zero, small, 0.0, 5e-6, 1));
    ImageGrid big = zero;
    big(0, 0) = 1.0;
    CHECK_FALSE(minsurf::check_stop(rule, zero, big, 0.0, 5e-6, 1));
  }
}
