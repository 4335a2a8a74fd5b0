#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>

#include "minsurf/grid.hpp"
#include "minsurf/spectral.hpp"

namespace minsurf {

struct DegradeSpec {
  BlurSpec blur;       // default: identity (no blur)
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(noise_sigma >= 0.0))
      throw std::invalid_argument("noise_sigma must be nonnegative");
  }
};

/// Linear stretch onto [0, 255]: min -> 0, max -> 255, affine in between.
inline ImageGrid normalize(const ImageGrid& raw) {
  const double lo = raw.min();
  const double hi = raw.max();
  if (!(hi > lo))
    throw std::invalid_argument("normalize: constant image has zero dynamic range");
  ImageGrid out = raw;
  const double scale = 255.0 / (hi - lo);
  for (double& v : out.values()) v = (v - lo) * scale;
  return out;
}

namespace detail {

// splitmix64 finalizer; mixes the seed with the grid shape so equal seeds on
// different shapes draw unrelated streams.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t degrade_stream_seed(std::uint64_t seed, int width, int height) {
  std::uint64_t s = mix64(seed);
  s = mix64(s ^ (std::uint64_t(std::uint32_t(width)) << 32 | std::uint32_t(height)));
  return s;
}

// Uniform draw in (0,1]: 53 random mantissa bits, shifted away from zero so
// the Box-Muller logarithm below is always finite.
inline double uniform_unit(std::mt19937_64& rng) {
  return (double(rng() >> 11) + 1.0) * 0x1.0p-53;
}

} // namespace detail

/// Deterministic standard-normal field. mt19937_64 output is pinned
/// bit-for-bit by its definition, and the Box-Muller transform here avoids
/// the library normal_distribution, whose draw sequence varies between
/// standard library implementations.
inline ImageGrid gaussian_noise(int width, int height, double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0)) throw std::invalid_argument("sigma must be nonnegative");
  ImageGrid out(width, height);
  std::mt19937_64 rng(detail::degrade_stream_seed(seed, width, height));
  const long n = out.pixel_count();
  double* v = out.values().data();
  for (long k = 0; k + 1 < n; k += 2) {
    const double u1 = detail::uniform_unit(rng);
    const double u2 = detail::uniform_unit(rng);
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double t = 2.0 * std::numbers::pi * u2;
    v[k] = sigma * r * std::cos(t);
    v[k + 1] = sigma * r * std::sin(t);
  }
  if (n % 2 == 1) {
    const double u1 = detail::uniform_unit(rng);
    const double u2 = detail::uniform_unit(rng);
    v[n - 1] = sigma * std::sqrt(-2.0 * std::log(u1)) *
               std::cos(2.0 * std::numbers::pi * u2);
  }
  return out;
}

/// f = K u + eta. The blur runs first, then noise is added on the intensity
/// scale of the input; the result is not re-clipped, so out-of-range values
/// survive for the solvers to see exactly what the forward model produced.
inline ImageGrid degrade(const DegradeSpec& spec, const ImageGrid& clean) {
  spec.validate();
  const Spectrum spectrum = make_blur_spectrum(spec.blur, clean.width(), clean.height());
  ImageGrid out = apply_blur(spectrum, clean);
  if (spec.noise_sigma > 0.0) {
    out += gaussian_noise(clean.width(), clean.height(), spec.noise_sigma, spec.seed);
  }
  return out;
}

} // namespace minsurf
