#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "ptychoforge/error.hpp"

namespace ptychoforge {

using Complex = std::complex<double>;

/// Dense row-major 2D image. A default-constructed image is empty (0x0);
/// every other image has both dimensions >= 1.
template <typename T>
class Image2D {
 public:
  using value_type = T;

  Image2D() = default;

  Image2D(std::size_t height, std::size_t width, T fill = T{})
      : height_(height), width_(width) {
    if (height == 0 || width == 0) {
      throw ValidationError("image dimensions must be >= 1, got " + std::to_string(height) + "x" +
                            std::to_string(width));
    }
    values_.assign(height * width, fill);
  }

  Image2D(std::size_t height, std::size_t width, std::vector<T> values)
      : height_(height), width_(width), values_(std::move(values)) {
    if (height == 0 || width == 0) {
      throw ValidationError("image dimensions must be >= 1");
    }
    if (values_.size() != height * width) {
      throw ValidationError("image value count " + std::to_string(values_.size()) +
                            " does not match " + std::to_string(height) + "x" +
                            std::to_string(width));
    }
  }

  [[nodiscard]] std::size_t height() const noexcept { return height_; }
  [[nodiscard]] std::size_t width() const noexcept { return width_; }
  [[nodiscard]] std::size_t size() const noexcept { return values_.size(); }
  [[nodiscard]] bool empty() const noexcept { return values_.empty(); }

  T& operator()(std::size_t row, std::size_t col) noexcept { return values_[row * width_ + col]; }
  const T& operator()(std::size_t row, std::size_t col) const noexcept {
    return values_[row * width_ + col];
  }

  [[nodiscard]] T* data() noexcept { return values_.data(); }
  [[nodiscard]] const T* data() const noexcept { return values_.data(); }
  [[nodiscard]] std::span<T> values() noexcept { return values_; }
  [[nodiscard]] std::span<const T> values() const noexcept { return values_; }

  auto begin() noexcept { return values_.begin(); }
  auto end() noexcept { return values_.end(); }
  auto begin() const noexcept { return values_.begin(); }
  auto end() const noexcept { return values_.end(); }

  [[nodiscard]] bool same_shape(const Image2D& other) const noexcept {
    return height_ == other.height_ && width_ == other.width_;
  }

  bool operator==(const Image2D&) const = default;

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<T> values_;
};

using ComplexImage2D = Image2D<Complex>;
using RealImage2D = Image2D<double>;

inline bool is_finite(double v) noexcept { return std::isfinite(v); }
inline bool is_finite(const Complex& v) noexcept {
  return std::isfinite(v.real()) && std::isfinite(v.imag());
}

template <typename T>
bool all_finite(const Image2D<T>& img) noexcept {
  return std::all_of(img.begin(), img.end(), [](const T& v) { return is_finite(v); });
}

template <typename T>
void require_finite(const Image2D<T>& img, const std::string& what) {
  if (!all_finite(img)) throw ValidationError(what + " contains non-finite values");
}

template <typename A, typename B>
void require_same_shape(const Image2D<A>& a, const Image2D<B>& b, const std::string& what) {
  if (a.height() != b.height() || a.width() != b.width()) {
    throw ValidationError(what + ": dimension mismatch " + std::to_string(a.height()) + "x" +
                          std::to_string(a.width()) + " vs " + std::to_string(b.height()) + "x" +
                          std::to_string(b.width()));
  }
}

inline ComplexImage2D to_complex(const RealImage2D& img) {
  ComplexImage2D out(img.height(), img.width());
  std::transform(img.begin(), img.end(), out.begin(), [](double v) { return Complex(v, 0.0); });
  return out;
}

inline RealImage2D abs_squared(const ComplexImage2D& img) {
  RealImage2D out(img.height(), img.width());
  std::transform(img.begin(), img.end(), out.begin(), [](const Complex& v) { return std::norm(v); });
  return out;
}

/// Copies the rectangle [row0, row0+height) x [col0, col0+width).
template <typename T>
Image2D<T> crop_image(const Image2D<T>& img, std::size_t row0, std::size_t col0, std::size_t height,
                std::size_t width) {
  if (row0 + height > img.height() || col0 + width > img.width()) {
    throw ValidationError("crop rectangle exceeds image bounds");
  }
  Image2D<T> out(height, width);
  for (std::size_t r = 0; r < height; ++r) {
    std::copy_n(&img(row0 + r, col0), width, &out(r, 0));
  }
  return out;
}

}  // namespace ptychoforge
