#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>

#include "minsurf/grid.hpp"
#include "minsurf/spectral.hpp"

namespace minsurf {

/// Restoration model parameters: fidelity weight lambda and surface
/// smoothing parameter alpha. alpha = 0 degenerates to the classical TV
/// model and is admitted only by the primal-dual solver.
struct ModelParams {
  double lambda = 0.1;
  double alpha = 0.01;

  void validate() const {
    if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be positive");
    if (!(alpha >= 0.0)) throw std::invalid_argument("alpha must be nonnegative");
  }
};

/// Shared stopping rule: stop when the max of the relative iterate change
/// and the relative energy change drops to rel_tol, or at max_iter.
struct StopRule {
  double rel_tol = 1e-5;
  int max_iter = 500;

  void validate() const {
    if (!(rel_tol > 0.0)) throw std::invalid_argument("rel_tol must be positive");
    if (max_iter < 1) throw std::invalid_argument("max_iter must be >= 1");
  }
};

/// Objective value (lambda/2)*||Ku - f||^2 + sum sqrt(alpha + |grad u|^2).
inline double energy(const ModelParams& params, const Spectrum& spectrum,
                     const ImageGrid& f, const ImageGrid& u) {
  f.require_same_shape(u);
  ImageGrid residual = apply_blur(spectrum, u);
  residual -= f;
  double fidelity = 0.0;
  for (double v : residual.values()) fidelity += v * v;
  fidelity *= 0.5 * params.lambda;

  DualField g = gradient(u);
  double surface = 0.0;
  auto g1 = g.p1().values(), g2 = g.p2().values();
  for (size_t k = 0; k < g1.size(); ++k)
    surface += std::sqrt(params.alpha + g1[k] * g1[k] + g2[k] * g2[k]);
  return fidelity + surface;
}

/// Curvature-type operator div(grad u / sqrt(|grad u|^2 + alpha)); the
/// negative gradient of the surface term. Requires alpha > 0 so the
/// denominator stays bounded away from zero.
inline ImageGrid euler_lagrange(const ModelParams& params, const ImageGrid& u) {
  if (!(params.alpha > 0.0))
    throw std::invalid_argument("euler_lagrange requires alpha > 0");
  DualField g = gradient(u);
  const int w = u.width(), h = u.height();
  parallel_rows(h, u.pixel_count(), [&](int row_begin, int row_end) {
    for (int i = row_begin; i < row_end; ++i)
      for (int j = 0; j < w; ++j) {
        const double a = g.p1()(i, j), b = g.p2()(i, j);
        const double s = 1.0 / std::sqrt(a * a + b * b + params.alpha);
        g.p1()(i, j) = a * s;
        g.p2()(i, j) = b * s;
      }
  });
  return divergence(g);
}

struct ConjugatePoint {
  double value;     // sqrt(alpha + t^2)
  double argmax_s;  // maximizer of t*s + sqrt(alpha*(1 - s^2)) over |s| <= 1
};

/// Closed form of the scalar duality sqrt(alpha + t^2) =
/// sup_{|s|<=1} { t*s + sqrt(alpha*(1 - s^2)) }; the maximizer is strictly
/// interior.
inline ConjugatePoint conjugate_identity(double alpha, double t) {
  if (!(alpha > 0.0))
    throw std::invalid_argument("conjugate_identity requires alpha > 0");
  const double value = std::sqrt(alpha + t * t);
  return {value, t / value};
}

namespace detail {

// Relative iterate change and relative energy change; each falls back to
// its absolute counterpart when the previous quantity is zero.
inline std::pair<double, double> relative_changes(const ImageGrid& u_prev,
                                                  const ImageGrid& u_next,
                                                  double e_prev, double e_next) {
  ImageGrid diff = u_next;
  diff -= u_prev;
  const double du = norm_x(diff);
  const double nu = norm_x(u_prev);
  const double ru = nu > 0.0 ? du / nu : du;
  const double de = std::abs(e_next - e_prev);
  const double ne = std::abs(e_prev);
  const double re = ne > 0.0 ? de / ne : de;
  return {ru, re};
}

} // namespace detail

/// True when the larger of the two relative changes is within rel_tol or
/// the iteration cap is reached.
inline bool check_stop(const StopRule& rule, const ImageGrid& u_prev,
                       const ImageGrid& u_next, double e_prev, double e_next,
                       int iter) {
  auto [ru, re] = detail::relative_changes(u_prev, u_next, e_prev, e_next);
  return std::max(ru, re) <= rule.rel_tol || iter >= rule.max_iter;
}

} // namespace minsurf
