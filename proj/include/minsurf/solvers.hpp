#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "minsurf/grid.hpp"
#include "minsurf/model.hpp"
#include "minsurf/spectral.hpp"

namespace minsurf {

struct SolverError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// One record drives all three solvers. tau/sigma_step feed the primal-dual
/// iteration, dt the explicit marching scheme, cg_* the inner linear solves
/// of the fixed-point scheme. dt == 0 picks an automatic stable step.
struct SolverConfig {
  ModelParams params;
  StopRule stop;
  double tau = 0.35;
  double sigma_step = 0.35;
  double dt = 0.0;
  double cg_tol = 1e-6;
  int cg_max_iter = 200;

  void validate_common() const {
    params.validate();
    stop.validate();
    if (!(tau > 0.0) || !(sigma_step > 0.0))
      throw std::invalid_argument("tau and sigma_step must be positive");
    if (!(dt >= 0.0)) throw std::invalid_argument("dt must be nonnegative");
    if (!(cg_tol > 0.0)) throw std::invalid_argument("cg_tol must be positive");
    if (cg_max_iter < 1) throw std::invalid_argument("cg_max_iter must be >= 1");
  }

  /// Stable explicit step for the marching scheme: the stiffest mode of the
  /// linearized flow has curvature about lambda + 8/sqrt(alpha) (fidelity
  /// plus the diffusion operator at its 1/sqrt(alpha) coefficient ceiling),
  /// and the default takes half the 2/curvature stability edge. A larger
  /// step also stops later in flow time under a relative-change rule, so it
  /// lands nearer the minimizer before the per-step change drops below
  /// tolerance.
  double effective_dt() const {
    if (dt > 0.0) return dt;
    return 1.0 / (params.lambda + 8.0 / std::sqrt(params.alpha));
  }
};

/// Step contract of the primal-dual iteration; callers get a hard error
/// before any iteration runs when tau*sigma >= 1/8.
inline void require_pdm_step_contract(double tau, double sigma_step) {
  if (!(tau * sigma_step < 0.125))
    throw std::invalid_argument(
        "primal-dual step contract violated: tau*sigma must be < 1/8");
}

/// Outcome of a solver run. energy_trace[0] is the energy of the starting
/// iterate, so its length is iterations + 1; rel_change_trace[k] is the
/// stopping-rule quantity after update k+1.
struct SolveReport {
  int iterations = 0;
  std::vector<double> energy_trace;
  std::vector<double> rel_change_trace;
  double wall_time_seconds = 0.0;
  bool converged = false;
  ImageGrid final_u;
  std::vector<std::string> warnings;
};

namespace detail {

class WallClock {
public:
  WallClock() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_)
        .count();
  }

private:
  std::chrono::steady_clock::time_point start_;
};

inline void require_finite_iterate(const ImageGrid& u, const char* method, int iter) {
  if (!u.all_finite())
    throw SolverError(std::string(method) + ": NaN detected at iteration " +
                      std::to_string(iter));
}

/// Magnitude of the proximal dual step: the unique m in [0,1] minimizing
/// (m - zeta)^2/2 - c*sqrt(1 - m^2). For c = 0 this is the plain projection
/// min(zeta, 1); for c > 0 the optimality condition m + c*m/sqrt(1-m^2) = zeta
/// is solved in the substituted variable q = m/sqrt(1-m^2), where
/// h(q) = q/sqrt(1+q^2) + c*q - zeta is increasing and concave, so Newton
/// started below the root climbs to it monotonically without safeguards.
inline double dual_prox_magnitude(double zeta, double c) {
  if (zeta <= 0.0) return 0.0;
  if (c <= 0.0) return std::min(zeta, 1.0);
  double q = zeta / (1.0 + c);  // h(q0) < 0: start below the root
  for (int it = 0; it < 80; ++it) {
    const double t = 1.0 / std::sqrt(1.0 + q * q);
    const double h = q * t + c * q - zeta;
    if (std::abs(h) <= 1e-15 * (1.0 + zeta)) break;
    q -= h / (t * t * t + c);
  }
  return std::min(q / std::sqrt(1.0 + q * q), 1.0);
}

} // namespace detail

/// Primal-dual iteration on the saddle form of the objective: the surface
/// term is rewritten through its conjugate, sqrt(alpha + t^2) =
/// sup_{|s|<=1} { t*s + sqrt(alpha*(1 - s^2)) }, and the dual field takes the
/// exact proximal ascent step of that conjugate on the extrapolated iterate
/// (see detail::dual_prox_magnitude), which for alpha = 0 degenerates to the
/// classical projected step p <- (p + sigma*grad u_bar) / max{1, |...|}.
/// The primal solve is exact in the Fourier domain, followed by the
/// over-relaxation u_bar = 2 u_next - u. Starts from u = u_bar = f, p = 0.
/// Valid for alpha >= 0; tau*sigma < 1/8 keeps tau*sigma*||grad||^2 < 1.
///
/// The proximal (backward) dual step matters: the forward alternative
/// p + sigma*(grad u_bar * sqrt(1-|p|^2) - sqrt(alpha)*p) linearizes the same
/// ascent, but its fixed points repel whenever |grad u| exceeds roughly
/// sqrt(alpha)/sigma — every edge pixel at image scale — which locks the
/// iteration into a period-2 limit cycle above any practical stop tolerance
/// (and at alpha = 0 it freezes the dual wherever |p| touches the sphere).
///
/// Written with the dual half-step first: starting from p = 0 the primal
/// solve alone returns its own input unchanged, so a primal-first loop would
/// spend a vacuous first pass and trip any relative-change stopping test
/// before the dual variable has moved. Both orderings walk the identical
/// iterate sequence; this one simply drops that vacuous step.
inline SolveReport solve_pdm(const SolverConfig& config, const Spectrum& spectrum,
                             const ImageGrid& f) {
  config.validate_common();
  require_pdm_step_contract(config.tau, config.sigma_step);
  detail::WallClock clock;

  const int w = f.width(), h = f.height();
  const double lambda = config.params.lambda;
  const double alpha = config.params.alpha;
  const double sqrt_alpha = std::sqrt(alpha);
  const double sigma = config.sigma_step;

  const ImageGrid ktf = apply_blur_adjoint(spectrum, f);
  ImageGrid u = f;
  ImageGrid u_bar = f;
  DualField p(w, h);

  SolveReport report;
  double e_prev = energy(config.params, spectrum, f, u);
  report.energy_trace.push_back(e_prev);

  const double prox_weight = sigma * sqrt_alpha;
  for (int iter = 1;; ++iter) {
    DualField g = gradient(u_bar);
    parallel_rows(h, f.pixel_count(), [&](int row_begin, int row_end) {
      for (int i = row_begin; i < row_end; ++i)
        for (int j = 0; j < w; ++j) {
          const double z1 = p.p1()(i, j) + sigma * g.p1()(i, j);
          const double z2 = p.p2()(i, j) + sigma * g.p2()(i, j);
          const double zeta = std::sqrt(z1 * z1 + z2 * z2);
          const double scale =
              zeta > 0.0 ? detail::dual_prox_magnitude(zeta, prox_weight) / zeta
                         : 0.0;
          p.p1()(i, j) = z1 * scale;
          p.p2()(i, j) = z2 * scale;
        }
    });

    ImageGrid u_next = solve_primal(spectrum, u, ktf, divergence(p),
                                    lambda, config.tau);
    detail::require_finite_iterate(u_next, "pdm", iter);

    // u_bar = 2*u_next - u
    u_bar = u_next;
    u_bar *= 2.0;
    u_bar -= u;

    const double e_next = energy(config.params, spectrum, f, u_next);
    if (!std::isfinite(e_next))
      throw SolverError("pdm: NaN detected at iteration " + std::to_string(iter));

    auto [ru, re] = detail::relative_changes(u, u_next, e_prev, e_next);
    const double rel = std::max(ru, re);
    report.energy_trace.push_back(e_next);
    report.rel_change_trace.push_back(rel);
    report.iterations = iter;

    u = std::move(u_next);
    e_prev = e_next;
    if (rel <= config.stop.rel_tol || iter >= config.stop.max_iter) {
      report.converged = rel <= config.stop.rel_tol;
      break;
    }
  }

  report.final_u = std::move(u);
  report.wall_time_seconds = clock.seconds();
  return report;
}

/// Explicit gradient descent on the objective with step dt:
/// u <- u - dt * (lambda K^T(Ku - f) - div(grad u / sqrt(|grad u|^2 + alpha))).
/// Requires alpha > 0.
inline SolveReport solve_tmm(const SolverConfig& config, const Spectrum& spectrum,
                             const ImageGrid& f) {
  config.validate_common();
  if (!(config.params.alpha > 0.0))
    throw std::invalid_argument("tmm requires alpha > 0");
  detail::WallClock clock;

  const double lambda = config.params.lambda;
  const double dt = config.effective_dt();
  const ImageGrid ktf = apply_blur_adjoint(spectrum, f);

  ImageGrid u = f;
  SolveReport report;
  double e_prev = energy(config.params, spectrum, f, u);
  const double e_initial = e_prev;
  report.energy_trace.push_back(e_prev);

  for (int iter = 1;; ++iter) {
    ImageGrid descent = apply_ktk(spectrum, u);   // K^T K u
    descent -= ktf;                               // K^T (K u - f)
    descent *= lambda;
    descent -= euler_lagrange(config.params, u);
    descent *= dt;

    ImageGrid u_next = u;
    u_next -= descent;
    detail::require_finite_iterate(u_next, "tmm", iter);

    const double e_next = energy(config.params, spectrum, f, u_next);
    if (!std::isfinite(e_next) || e_next > 10.0 * e_initial)
      throw SolverError("tmm: diverged at iteration " + std::to_string(iter) +
                        " (energy exceeded 10x the initial value); try a smaller dt");

    auto [ru, re] = detail::relative_changes(u, u_next, e_prev, e_next);
    const double rel = std::max(ru, re);
    report.energy_trace.push_back(e_next);
    report.rel_change_trace.push_back(rel);
    report.iterations = iter;

    u = std::move(u_next);
    e_prev = e_next;
    if (rel <= config.stop.rel_tol || iter >= config.stop.max_iter) {
      report.converged = rel <= config.stop.rel_tol;
      break;
    }
  }

  report.final_u = std::move(u);
  report.wall_time_seconds = clock.seconds();
  return report;
}

namespace detail {

// Lagged-diffusivity operator v -> -div(c * grad v) with the coefficient
// field c frozen from the previous outer iterate. Self-adjoint and positive
// semidefinite for pointwise positive c.
inline ImageGrid lagged_diffusion(const ImageGrid& coeff, const ImageGrid& v) {
  DualField g = gradient(v);
  const int w = v.width(), h = v.height();
  parallel_rows(h, v.pixel_count(), [&](int row_begin, int row_end) {
    for (int i = row_begin; i < row_end; ++i)
      for (int j = 0; j < w; ++j) {
        const double c = coeff(i, j);
        g.p1()(i, j) *= c;
        g.p2()(i, j) *= c;
      }
  });
  ImageGrid out = divergence(g);
  out *= -1.0;
  return out;
}

} // namespace detail

/// Lagged-diffusivity fixed point: each outer step freezes the diffusion
/// coefficient 1/sqrt(|grad u|^2 + alpha) and solves the SPD system
/// (lambda K^T K + L) u = lambda K^T f by conjugate gradient, warm-started
/// from the previous iterate. Requires alpha > 0.
inline SolveReport solve_fpm(const SolverConfig& config, const Spectrum& spectrum,
                             const ImageGrid& f) {
  config.validate_common();
  if (!(config.params.alpha > 0.0))
    throw std::invalid_argument("fpm requires alpha > 0");
  detail::WallClock clock;

  const int w = f.width(), h = f.height();
  const double lambda = config.params.lambda;
  const double alpha = config.params.alpha;

  const ImageGrid ktf = apply_blur_adjoint(spectrum, f);
  ImageGrid b = ktf;
  b *= lambda;
  const double b_norm = norm_x(b);

  ImageGrid u = f;
  SolveReport report;
  double e_prev = energy(config.params, spectrum, f, u);
  report.energy_trace.push_back(e_prev);

  for (int iter = 1;; ++iter) {
    // Coefficient field from the current iterate.
    DualField g = gradient(u);
    ImageGrid coeff(w, h);
    for (int i = 0; i < h; ++i)
      for (int j = 0; j < w; ++j) {
        const double a = g.p1()(i, j), c = g.p2()(i, j);
        coeff(i, j) = 1.0 / std::sqrt(a * a + c * c + alpha);
      }

    auto apply_system = [&](const ImageGrid& v) {
      ImageGrid out = apply_ktk(spectrum, v);
      out *= lambda;
      out += detail::lagged_diffusion(coeff, v);
      return out;
    };

    // Conjugate gradient, warm-started from u.
    ImageGrid x = u;
    ImageGrid r = b;
    r -= apply_system(x);
    ImageGrid d = r;
    double rs = inner_product_x(r, r);
    const double target = config.cg_tol * (b_norm > 0.0 ? b_norm : 1.0);
    bool hit_cap = true;
    for (int cg_iter = 0; cg_iter < config.cg_max_iter; ++cg_iter) {
      if (std::sqrt(rs) <= target) {
        hit_cap = false;
        break;
      }
      ImageGrid ad = apply_system(d);
      const double dad = inner_product_x(d, ad);
      if (!(dad > 0.0))
        throw SolverError("fpm: conjugate gradient met non-positive curvature at outer iteration " +
                          std::to_string(iter) + "; the system operator is not positive definite");
      const double step = rs / dad;
      for (int i = 0; i < h; ++i)
        for (int j = 0; j < w; ++j) {
          x(i, j) += step * d(i, j);
          r(i, j) -= step * ad(i, j);
        }
      const double rs_next = inner_product_x(r, r);
      d *= rs_next / rs;
      d += r;
      rs = rs_next;
    }
    if (hit_cap && std::sqrt(rs) > target)
      report.warnings.push_back("fpm: cg iteration cap reached at outer iteration " +
                                std::to_string(iter) + " (relative residual " +
                                std::to_string(std::sqrt(rs) / (b_norm > 0.0 ? b_norm : 1.0)) +
                                ")");

    ImageGrid u_next = std::move(x);
    detail::require_finite_iterate(u_next, "fpm", iter);

    const double e_next = energy(config.params, spectrum, f, u_next);
    auto [ru, re] = detail::relative_changes(u, u_next, e_prev, e_next);
    const double rel = std::max(ru, re);
    report.energy_trace.push_back(e_next);
    report.rel_change_trace.push_back(rel);
    report.iterations = iter;

    u = std::move(u_next);
    e_prev = e_next;
    if (rel <= config.stop.rel_tol || iter >= config.stop.max_iter) {
      report.converged = rel <= config.stop.rel_tol;
      break;
    }
  }

  report.final_u = std::move(u);
  report.wall_time_seconds = clock.seconds();
  return report;
}

/// Power-iteration estimate of ||grad||^2, the top eigenvalue of the
/// composition -div(grad .). Bounded by 8 on every periodic lattice, with
/// equality reached by the checkerboard mode on even dimensions; that mode
/// seeds the iteration so even lattices converge immediately.
inline double operator_norm_check(int width, int height) {
  if (width < 2 || height < 2)
    throw std::invalid_argument("operator_norm_check requires dims >= 2");
  ImageGrid v(width, height);
  std::mt19937_64 rng(0x9e3779b97f4a7c15ULL);
  for (int i = 0; i < height; ++i)
    for (int j = 0; j < width; ++j) {
      const double checker = ((i + j) % 2 == 0) ? 1.0 : -1.0;
      const double jitter = (double(rng() >> 11) * 0x1.0p-53 - 0.5) * 1e-3;
      v(i, j) = checker + jitter;
    }

  double estimate = 0.0;
  const int cap = 20000;
  for (int iter = 0; iter < cap; ++iter) {
    const double nv = norm_x(v);
    v *= 1.0 / nv;
    ImageGrid av = divergence(gradient(v));
    av *= -1.0;
    const double rayleigh = inner_product_x(v, av);
    if (iter > 0 && std::abs(rayleigh - estimate) <= 1e-9 * std::max(1.0, rayleigh)) {
      estimate = rayleigh;
      break;
    }
    estimate = rayleigh;
    v = std::move(av);
  }
  return estimate;
}

} // namespace minsurf
