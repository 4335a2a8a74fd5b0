#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>

#include "minsurf/grid.hpp"
#include "minsurf/spectral.hpp"

namespace minsurf {

/// Signal-to-noise ratio in decibels: reference variance energy over error
/// energy. Returns +infinity when test equals reference exactly.
inline double snr(const ImageGrid& reference, const ImageGrid& test) {
  reference.require_same_shape(test);
  const double mu = reference.mean();
  double signal = 0.0, error = 0.0;
  auto rv = reference.values(), tv = test.values();
  for (std::size_t k = 0; k < rv.size(); ++k) {
    const double s = rv[k] - mu;
    const double e = tv[k] - rv[k];
    signal += s * s;
    error += e * e;
  }
  if (error == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(signal / error);
}

struct SsimParams {
  int window_size = 11;
  double window_sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double dynamic_range = 255.0;

  void validate() const {
    if (window_size < 1 || window_size % 2 == 0)
      throw std::invalid_argument("ssim window_size must be an odd positive integer");
    if (!(window_sigma > 0.0))
      throw std::invalid_argument("ssim window_sigma must be positive");
    if (!(k1 > 0.0) || !(k2 > 0.0))
      throw std::invalid_argument("ssim k1 and k2 must be positive");
    if (!(dynamic_range > 0.0))
      throw std::invalid_argument("ssim dynamic_range must be positive");
  }
};

/// Mean structural similarity with a Gaussian-weighted window. Local means
/// and (co)variances are window convolutions with periodic wrap, computed
/// through the same spectral filtering used everywhere else.
inline double ssim(const ImageGrid& reference, const ImageGrid& test,
                   const SsimParams& params = {}) {
  reference.require_same_shape(test);
  params.validate();
  const int w = reference.width(), h = reference.height();
  if (w < params.window_size || h < params.window_size)
    throw std::invalid_argument("ssim: image smaller than the window");

  const Spectrum window = make_blur_spectrum(
      BlurSpec::gaussian(params.window_size, params.window_sigma), w, h);

  ImageGrid ref_sq(w, h), test_sq(w, h), cross(w, h);
  auto rv = reference.values(), tv = test.values();
  for (std::size_t k = 0; k < rv.size(); ++k) {
    ref_sq.values()[k] = rv[k] * rv[k];
    test_sq.values()[k] = tv[k] * tv[k];
    cross.values()[k] = rv[k] * tv[k];
  }

  const ImageGrid mu_ref = apply_blur(window, reference);
  const ImageGrid mu_test = apply_blur(window, test);
  const ImageGrid m_ref_sq = apply_blur(window, ref_sq);
  const ImageGrid m_test_sq = apply_blur(window, test_sq);
  const ImageGrid m_cross = apply_blur(window, cross);

  const double c1 = params.k1 * params.dynamic_range * params.k1 * params.dynamic_range;
  const double c2 = params.k2 * params.dynamic_range * params.k2 * params.dynamic_range;

  double total = 0.0;
  for (long k = 0; k < reference.pixel_count(); ++k) {
    const double ma = mu_ref.values()[k];
    const double mb = mu_test.values()[k];
    const double va = m_ref_sq.values()[k] - ma * ma;
    const double vb = m_test_sq.values()[k] - mb * mb;
    const double vab = m_cross.values()[k] - ma * mb;
    const double num = (2.0 * ma * mb + c1) * (2.0 * vab + c2);
    const double den = (ma * ma + mb * mb + c1) * (va + vb + c2);
    total += num / den;
  }
  return total / double(reference.pixel_count());
}

} // namespace minsurf
