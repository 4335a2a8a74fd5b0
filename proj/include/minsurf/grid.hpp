#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "minsurf/parallel.hpp"

// Math-to-code map for the lattice: a grid stores height rows by width
// columns, row-major. Index i walks rows, j walks columns. The "x" axis of
// the difference stencils is the row axis i, the "y" axis is the column
// axis j. All stencils wrap periodically.

namespace minsurf {

/// Dense real-valued 2-D scalar field. Holds the image u, the data f and
/// every intermediate field. Intensities are dimensionless, working range
/// [0,255] after normalization, stored at full double precision.
class ImageGrid {
public:
  ImageGrid() = default;

  ImageGrid(int width, int height, double fill = 0.0)
      : width_(width), height_(height),
        values_(checked_size(width, height), fill) {}

  ImageGrid(int width, int height, std::vector<double> values)
      : width_(width), height_(height), values_(std::move(values)) {
    if (values_.size() != checked_size(width, height))
      throw std::invalid_argument("ImageGrid: value count does not match dimensions");
  }

  int width() const { return width_; }
  int height() const { return height_; }
  long pixel_count() const { return static_cast<long>(width_) * height_; }

  double operator()(int i, int j) const { return values_[idx(i, j)]; }
  double& operator()(int i, int j) { return values_[idx(i, j)]; }

  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }

  bool same_shape(const ImageGrid& o) const {
    return width_ == o.width_ && height_ == o.height_;
  }

  bool all_finite() const {
    for (double v : values_)
      if (!std::isfinite(v)) return false;
    return true;
  }

  double min() const {
    double m = values_[0];
    for (double v : values_) m = std::min(m, v);
    return m;
  }

  double max() const {
    double m = values_[0];
    for (double v : values_) m = std::max(m, v);
    return m;
  }

  double mean() const {
    double s = 0.0;
    for (double v : values_) s += v;
    return s / static_cast<double>(values_.size());
  }

  ImageGrid& operator+=(const ImageGrid& o) {
    require_same_shape(o);
    for (size_t k = 0; k < values_.size(); ++k) values_[k] += o.values_[k];
    return *this;
  }

  ImageGrid& operator-=(const ImageGrid& o) {
    require_same_shape(o);
    for (size_t k = 0; k < values_.size(); ++k) values_[k] -= o.values_[k];
    return *this;
  }

  ImageGrid& operator*=(double s) {
    for (double& v : values_) v *= s;
    return *this;
  }

  void require_same_shape(const ImageGrid& o) const {
    if (!same_shape(o))
      throw std::invalid_argument("grid dimension mismatch");
  }

private:
  static size_t checked_size(int width, int height) {
    if (width < 2 || height < 2)
      throw std::invalid_argument("ImageGrid: width and height must be >= 2");
    return static_cast<size_t>(width) * static_cast<size_t>(height);
  }

  size_t idx(int i, int j) const {
    return static_cast<size_t>(i) * width_ + j;
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<double> values_;
};

inline ImageGrid operator+(ImageGrid a, const ImageGrid& b) { return a += b; }
inline ImageGrid operator-(ImageGrid a, const ImageGrid& b) { return a -= b; }
inline ImageGrid operator*(double s, ImageGrid a) { return a *= s; }

/// Two-channel field on the same lattice as an ImageGrid; holds the dual
/// variable p = (p1, p2). Channel 1 pairs with the row-axis differences,
/// channel 2 with the column-axis differences.
class DualField {
public:
  DualField() = default;

  DualField(int width, int height)
      : p1_(width, height, 0.0), p2_(width, height, 0.0) {}

  DualField(ImageGrid p1, ImageGrid p2)
      : p1_(std::move(p1)), p2_(std::move(p2)) {
    p1_.require_same_shape(p2_);
  }

  int width() const { return p1_.width(); }
  int height() const { return p1_.height(); }

  const ImageGrid& p1() const { return p1_; }
  const ImageGrid& p2() const { return p2_; }
  ImageGrid& p1() { return p1_; }
  ImageGrid& p2() { return p2_; }

  bool same_shape(const DualField& o) const { return p1_.same_shape(o.p1_); }
  bool same_shape(const ImageGrid& g) const { return p1_.same_shape(g); }

  bool all_finite() const { return p1_.all_finite() && p2_.all_finite(); }

private:
  ImageGrid p1_;
  ImageGrid p2_;
};

/// <a,b> over the scalar field space: plain sum of pointwise products.
inline double inner_product_x(const ImageGrid& a, const ImageGrid& b) {
  a.require_same_shape(b);
  double s = 0.0;
  auto av = a.values(), bv = b.values();
  for (size_t k = 0; k < av.size(); ++k) s += av[k] * bv[k];
  return s;
}

inline double norm_x(const ImageGrid& a) {
  return std::sqrt(inner_product_x(a, a));
}

/// <p,q> over the two-channel space: both channels summed.
inline double inner_product_y(const DualField& p, const DualField& q) {
  if (!p.same_shape(q))
    throw std::invalid_argument("dual field dimension mismatch");
  return inner_product_x(p.p1(), q.p1()) + inner_product_x(p.p2(), q.p2());
}

/// Forward-difference gradient with periodic wrap: channel 1 differences
/// along rows (i, i+1), channel 2 along columns (j, j+1); the last index of
/// each axis wraps to the first.
inline DualField gradient(const ImageGrid& u) {
  const int w = u.width(), h = u.height();
  DualField g(w, h);
  parallel_rows(h, u.pixel_count(), [&](int row_begin, int row_end) {
    for (int i = row_begin; i < row_end; ++i) {
      const int in = (i + 1 == h) ? 0 : i + 1;
      for (int j = 0; j < w; ++j) {
        const int jn = (j + 1 == w) ? 0 : j + 1;
        g.p1()(i, j) = u(in, j) - u(i, j);
        g.p2()(i, j) = u(i, jn) - u(i, j);
      }
    }
  });
  return g;
}

/// Backward-difference divergence, the negative adjoint of gradient():
/// <u, divergence(p)> == -<gradient(u), p> on every lattice.
inline ImageGrid divergence(const DualField& p) {
  const int w = p.width(), h = p.height();
  ImageGrid d(w, h);
  const ImageGrid& p1 = p.p1();
  const ImageGrid& p2 = p.p2();
  parallel_rows(h, d.pixel_count(), [&](int row_begin, int row_end) {
    for (int i = row_begin; i < row_end; ++i) {
      const int ip = (i == 0) ? h - 1 : i - 1;
      for (int j = 0; j < w; ++j) {
        const int jp = (j == 0) ? w - 1 : j - 1;
        d(i, j) = (p1(i, j) - p1(ip, j)) + (p2(i, j) - p2(i, jp));
      }
    }
  });
  return d;
}

/// Pointwise Euclidean magnitude sqrt(p1^2 + p2^2).
inline ImageGrid pointwise_magnitude(const DualField& p) {
  const int w = p.width(), h = p.height();
  ImageGrid m(w, h);
  parallel_rows(h, m.pixel_count(), [&](int row_begin, int row_end) {
    for (int i = row_begin; i < row_end; ++i)
      for (int j = 0; j < w; ++j)
        m(i, j) = std::hypot(p.p1()(i, j), p.p2()(i, j));
  });
  return m;
}

/// Cyclic shift by (di, dj); shifts may be negative or exceed the dims.
inline ImageGrid circular_shift(const ImageGrid& u, int di, int dj) {
  const int w = u.width(), h = u.height();
  ImageGrid out(w, h);
  const int si = ((di % h) + h) % h;
  const int sj = ((dj % w) + w) % w;
  for (int i = 0; i < h; ++i) {
    const int ii = (i + si) % h;
    for (int j = 0; j < w; ++j) out(ii, (j + sj) % w) = u(i, j);
  }
  return out;
}

inline DualField circular_shift(const DualField& p, int di, int dj) {
  return DualField(circular_shift(p.p1(), di, dj), circular_shift(p.p2(), di, dj));
}

} // namespace minsurf
