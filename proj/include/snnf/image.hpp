#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "snnf/errors.hpp"

namespace snnf {

/// Dense row-major image. Coordinates are (u, v) = (column, row) and the
/// pixel center of cell (u, v) sits at the integer coordinate (u, v).
template <typename T>
class Image {
 public:
  Image() = default;
  Image(int width, int height, T fill = T{})
      : width_(width), height_(height) {
    if (width < 0 || height < 0) {
      throw Error(ErrorKind::kDimension, "negative image size");
    }
    data_.assign(static_cast<std::size_t>(width) * height, fill);
  }

  [[nodiscard]] int width() const noexcept { return width_; }
  [[nodiscard]] int height() const noexcept { return height_; }
  [[nodiscard]] std::size_t size() const noexcept { return data_.size(); }
  [[nodiscard]] bool empty() const noexcept { return data_.empty(); }

  [[nodiscard]] bool contains(int u, int v) const noexcept {
    return u >= 0 && v >= 0 && u < width_ && v < height_;
  }
  [[nodiscard]] std::size_t index(int u, int v) const noexcept {
    return static_cast<std::size_t>(v) * width_ + u;
  }

  T& operator()(int u, int v) noexcept { return data_[index(u, v)]; }
  const T& operator()(int u, int v) const noexcept { return data_[index(u, v)]; }

  T& operator[](std::size_t i) noexcept { return data_[i]; }
  const T& operator[](std::size_t i) const noexcept { return data_[i]; }

  [[nodiscard]] std::span<T> pixels() noexcept { return data_; }
  [[nodiscard]] std::span<const T> pixels() const noexcept { return data_; }

  [[nodiscard]] bool sameShape(int width, int height) const noexcept {
    return width_ == width && height_ == height;
  }
  template <typename U>
  [[nodiscard]] bool sameShape(const Image<U>& other) const noexcept {
    return sameShape(other.width(), other.height());
  }

  friend bool operator==(const Image& a, const Image& b) {
    return a.width_ == b.width_ && a.height_ == b.height_ && a.data_ == b.data_;
  }

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

/// Intensities (nominally [0,1]) or gradient magnitudes.
using GrayImage = Image<float>;
/// Inverse depth per pixel; non-positive or non-finite values mark invalid cells.
using InverseDepthImage = Image<float>;
/// Binary plane, 0 or 1.
using BinaryImage = Image<std::uint8_t>;

inline bool validInverseDepth(float d) noexcept {
  return std::isfinite(d) && d > 0.0f;
}

/// Bilinear sample plus its spatial derivative.
struct BilinearSample {
  double value = 0.0;
  Eigen::Vector2d gradient = Eigen::Vector2d::Zero();
};

/// True when bilinear interpolation at (u, v) only touches pixels inside the image.
template <typename T>
[[nodiscard]] bool bilinearValid(const Image<T>& img, double u, double v) {
  return u >= 0.0 && v >= 0.0 && u <= img.width() - 1.0 &&
         v <= img.height() - 1.0 && std::isfinite(u) && std::isfinite(v);
}

template <typename T>
[[nodiscard]] std::optional<BilinearSample> sampleBilinear(const Image<T>& img,
                                                           double u, double v) {
  if (!bilinearValid(img, u, v)) return std::nullopt;
  int u0 = static_cast<int>(std::floor(u));
  int v0 = static_cast<int>(std::floor(v));
  // Keep the last row/column addressable at exactly width-1 / height-1.
  if (u0 >= img.width() - 1) u0 = img.width() - 2;
  if (v0 >= img.height() - 1) v0 = img.height() - 2;
  const double a = u - u0;
  const double b = v - v0;
  const double i00 = img(u0, v0);
  const double i10 = img(u0 + 1, v0);
  const double i01 = img(u0, v0 + 1);
  const double i11 = img(u0 + 1, v0 + 1);
  BilinearSample s;
  s.value = (1 - a) * (1 - b) * i00 + a * (1 - b) * i10 + (1 - a) * b * i01 +
            a * b * i11;
  s.gradient.x() = (1 - b) * (i10 - i00) + b * (i11 - i01);
  s.gradient.y() = (1 - a) * (i01 - i00) + a * (i11 - i10);
  return s;
}

/// 2x2 box downsampling; odd trailing rows/columns are dropped.
[[nodiscard]] inline GrayImage downsample2x(const GrayImage& img) {
  const int w = img.width() / 2;
  const int h = img.height() / 2;
  GrayImage out(w, h);
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      out(u, v) = 0.25f * (img(2 * u, 2 * v) + img(2 * u + 1, 2 * v) +
                           img(2 * u, 2 * v + 1) + img(2 * u + 1, 2 * v + 1));
    }
  }
  return out;
}

/// Separable [1 2 1]/4 smoothing with clamped borders.
[[nodiscard]] inline GrayImage binomialBlur(const GrayImage& img) {
  const int w = img.width();
  const int h = img.height();
  GrayImage tmp(w, h);
  GrayImage out(w, h);
  auto clampi = [](int x, int lo, int hi) { return x < lo ? lo : (x > hi ? hi : x); };
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      tmp(u, v) = 0.25f * img(clampi(u - 1, 0, w - 1), v) + 0.5f * img(u, v) +
                  0.25f * img(clampi(u + 1, 0, w - 1), v);
    }
  }
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      out(u, v) = 0.25f * tmp(u, clampi(v - 1, 0, h - 1)) + 0.5f * tmp(u, v) +
                  0.25f * tmp(u, clampi(v + 1, 0, h - 1));
    }
  }
  return out;
}

}  // namespace snnf
