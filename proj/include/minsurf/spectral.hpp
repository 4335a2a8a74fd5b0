#pragma once

#include <fftw3.h>

#include <complex>
#include <map>
#include <mutex>
#include <stdexcept>
#include <tuple>
#include <vector>

#include "minsurf/grid.hpp"

// Fourier convention: forward transform unnormalized, inverse scaled by
// 1/(width*height). Frequency bins use the same row-major layout as the
// pixel lattice.

namespace minsurf {

namespace detail {

// FFTW plan creation is not thread safe; executions are. Plans are cached
// per (height, width, sign) and created under a lock with FFTW_ESTIMATE |
// FFTW_UNALIGNED so they can run on any caller buffer.
inline fftw_plan plan_for(int height, int width, int sign) {
  static std::mutex mu;
  static std::map<std::tuple<int, int, int>, fftw_plan> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto key = std::make_tuple(height, width, sign);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  const size_t n = static_cast<size_t>(height) * width;
  fftw_complex* in = fftw_alloc_complex(n);
  fftw_complex* out = fftw_alloc_complex(n);
  fftw_plan plan = fftw_plan_dft_2d(height, width, in, out, sign,
                                    FFTW_ESTIMATE | FFTW_UNALIGNED);
  fftw_free(in);
  fftw_free(out);
  if (plan == nullptr) throw std::runtime_error("fft planning failed");
  cache.emplace(key, plan);
  return plan;
}

inline void dft2(int height, int width, int sign,
                 const std::complex<double>* in, std::complex<double>* out) {
  fftw_plan plan = plan_for(height, width, sign);
  fftw_execute_dft(plan,
                   reinterpret_cast<fftw_complex*>(const_cast<std::complex<double>*>(in)),
                   reinterpret_cast<fftw_complex*>(out));
}

} // namespace detail

/// Forward 2-D DFT of a real grid (unnormalized).
inline std::vector<std::complex<double>> fft2(const ImageGrid& u) {
  const size_t n = static_cast<size_t>(u.pixel_count());
  std::vector<std::complex<double>> in(n), out(n);
  auto values = u.values();
  for (size_t k = 0; k < n; ++k) in[k] = values[k];
  detail::dft2(u.height(), u.width(), FFTW_FORWARD, in.data(), out.data());
  return out;
}

/// Inverse 2-D DFT scaled by 1/(width*height); the imaginary residue is
/// discarded (it is pure roundoff whenever the spectrum came from real data).
inline ImageGrid ifft2_real(const std::vector<std::complex<double>>& hat,
                            int width, int height) {
  const size_t n = static_cast<size_t>(width) * height;
  if (hat.size() != n)
    throw std::invalid_argument("ifft2_real: bin count does not match dimensions");
  std::vector<std::complex<double>> out(n);
  detail::dft2(height, width, FFTW_BACKWARD, hat.data(), out.data());
  ImageGrid u(width, height);
  auto values = u.values();
  const double scale = 1.0 / static_cast<double>(n);
  for (size_t k = 0; k < n; ++k) values[k] = out[k].real() * scale;
  return u;
}

/// Gaussian point-spread description: support hsize (odd) and std-dev
/// sigma, or the distinguished no-blur value.
struct BlurSpec {
  int hsize = 0;   // 0 encodes the identity (no blur)
  double sigma = 0.0;

  bool is_identity() const { return hsize == 0; }

  static BlurSpec identity() { return {}; }

  static BlurSpec gaussian(int hsize, double sigma) {
    if (hsize < 1 || hsize % 2 == 0)
      throw std::invalid_argument("blur hsize must be an odd positive integer");
    if (!(sigma > 0.0))
      throw std::invalid_argument("blur sigma must be positive");
    return {hsize, sigma};
  }
};

/// Unit-sum Gaussian kernel embedded on the full lattice with its center
/// tap at (0,0) and the remaining taps wrapped periodically, so circular
/// convolution with it is zero-phase.
inline ImageGrid build_psf(const BlurSpec& spec, int width, int height) {
  ImageGrid psf(width, height, 0.0);
  if (spec.is_identity()) {
    psf(0, 0) = 1.0;
    return psf;
  }
  if (spec.hsize % 2 == 0)
    throw std::invalid_argument("blur hsize must be odd");
  if (spec.hsize > width || spec.hsize > height)
    throw std::invalid_argument("blur hsize exceeds lattice dimensions");
  const int r = (spec.hsize - 1) / 2;
  const double inv2s2 = 1.0 / (2.0 * spec.sigma * spec.sigma);
  double sum = 0.0;
  for (int a = -r; a <= r; ++a)
    for (int b = -r; b <= r; ++b)
      sum += std::exp(-(double(a) * a + double(b) * b) * inv2s2);
  for (int a = -r; a <= r; ++a) {
    const int i = ((a % height) + height) % height;
    for (int b = -r; b <= r; ++b) {
      const int j = ((b % width) + width) % width;
      psf(i, j) += std::exp(-(double(a) * a + double(b) * b) * inv2s2) / sum;
    }
  }
  return psf;
}

/// Fourier-domain transfer data of a circulant blur operator K:
/// k_hat = F(kernel) per bin, ktk_hat = |k_hat|^2 (the transfer of K^T K).
struct Spectrum {
  int width = 0;
  int height = 0;
  std::vector<std::complex<double>> k_hat;
  std::vector<double> ktk_hat;
  // True only for the exact identity operator; lets the applies skip the
  // transform round trip entirely, so K = I is bit-exact and cheap.
  bool exact_identity = false;

  /// Exact identity operator: every bin 1.
  static Spectrum identity(int width, int height) {
    Spectrum s;
    s.width = width;
    s.height = height;
    const size_t n = static_cast<size_t>(width) * height;
    s.k_hat.assign(n, {1.0, 0.0});
    s.ktk_hat.assign(n, 1.0);
    s.exact_identity = true;
    return s;
  }
};

inline Spectrum make_spectrum(const ImageGrid& psf) {
  Spectrum s;
  s.width = psf.width();
  s.height = psf.height();
  s.k_hat = fft2(psf);
  s.ktk_hat.resize(s.k_hat.size());
  for (size_t k = 0; k < s.k_hat.size(); ++k)
    s.ktk_hat[k] = std::norm(s.k_hat[k]);
  return s;
}

/// Spectrum for a blur description on the given lattice. The identity is
/// built exactly (all-ones bins) rather than through a transform.
inline Spectrum make_blur_spectrum(const BlurSpec& spec, int width, int height) {
  if (spec.is_identity()) return Spectrum::identity(width, height);
  return make_spectrum(build_psf(spec, width, height));
}

namespace detail {

inline void require_dims(const Spectrum& s, const ImageGrid& u) {
  if (s.width != u.width() || s.height != u.height())
    throw std::invalid_argument("spectrum/grid dimension mismatch");
}

template <class BinOp>
ImageGrid filter(const Spectrum& s, const ImageGrid& u, BinOp&& op) {
  require_dims(s, u);
  auto hat = fft2(u);
  for (size_t k = 0; k < hat.size(); ++k) hat[k] = op(hat[k], k);
  return ifft2_real(hat, u.width(), u.height());
}

} // namespace detail

/// Circular convolution K u.
inline ImageGrid apply_blur(const Spectrum& s, const ImageGrid& u) {
  if (s.exact_identity) {
    detail::require_dims(s, u);
    return u;
  }
  return detail::filter(s, u, [&](std::complex<double> v, size_t k) {
    return v * s.k_hat[k];
  });
}

/// Adjoint K^T u (conjugate transfer); equals K u for symmetric kernels.
inline ImageGrid apply_blur_adjoint(const Spectrum& s, const ImageGrid& u) {
  if (s.exact_identity) {
    detail::require_dims(s, u);
    return u;
  }
  return detail::filter(s, u, [&](std::complex<double> v, size_t k) {
    return v * std::conj(s.k_hat[k]);
  });
}

/// K^T K u in a single pass through the real transfer |k_hat|^2.
inline ImageGrid apply_ktk(const Spectrum& s, const ImageGrid& u) {
  if (s.exact_identity) {
    detail::require_dims(s, u);
    return u;
  }
  return detail::filter(s, u, [&](std::complex<double> v, size_t k) {
    return v * s.ktk_hat[k];
  });
}

/// Exact solve of (I + lambda*tau*K^T K) u = u_prev + lambda*tau*ktf
/// + tau*div_p by bin-wise division. The denominator 1 + lambda*tau*ktk_hat
/// is >= 1, so the division is always well posed.
inline ImageGrid solve_primal(const Spectrum& s, const ImageGrid& u_prev,
                              const ImageGrid& ktf, const ImageGrid& div_p,
                              double lambda, double tau) {
  detail::require_dims(s, u_prev);
  detail::require_dims(s, ktf);
  detail::require_dims(s, div_p);
  if (!(lambda > 0.0) || !(tau > 0.0))
    throw std::invalid_argument("solve_primal: lambda and tau must be positive");
  const double lt_scalar = lambda * tau;
  if (s.exact_identity) {
    // All bins share the denominator 1 + lambda*tau, so the solve collapses
    // to a pointwise affine map with no transform round trip.
    ImageGrid out(u_prev.width(), u_prev.height());
    const int w = u_prev.width(), h = u_prev.height();
    parallel_rows(h, u_prev.pixel_count(), [&](int row_begin, int row_end) {
      for (int i = row_begin; i < row_end; ++i)
        for (int j = 0; j < w; ++j)
          out(i, j) = (u_prev(i, j) + lt_scalar * ktf(i, j) + tau * div_p(i, j)) /
                      (1.0 + lt_scalar);
    });
    return out;
  }
  auto u_hat = fft2(u_prev);
  auto ktf_hat = fft2(ktf);
  auto div_hat = fft2(div_p);
  const double lt = lambda * tau;
  for (size_t k = 0; k < u_hat.size(); ++k) {
    u_hat[k] = (u_hat[k] + lt * ktf_hat[k] + tau * div_hat[k]) /
               (1.0 + lt * s.ktk_hat[k]);
  }
  return ifft2_real(u_hat, u_prev.width(), u_prev.height());
}

} // namespace minsurf
