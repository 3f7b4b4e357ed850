#pragma once

#include "ptychoforge/image.hpp"

namespace ptychoforge {

// Convention: forward transform is unnormalized, inverse carries 1/(H*W).
// Zero frequency lives at index (0,0) until fftshift moves it to (H/2, W/2).

ComplexImage2D fft2_forward(const ComplexImage2D& img);
ComplexImage2D fft2_inverse(const ComplexImage2D& img);

/// SIMD-aligned scratch buffer with in-place, unnormalized transforms for
/// hot loops. Results are identical from run to run but may differ in the
/// last bits from fft2_forward on a std::vector-backed image.
class FftWorkspace {
 public:
  FftWorkspace(std::size_t height, std::size_t width);
  ~FftWorkspace();
  FftWorkspace(const FftWorkspace&) = delete;
  FftWorkspace& operator=(const FftWorkspace&) = delete;

  [[nodiscard]] Complex* data() noexcept { return data_; }
  [[nodiscard]] std::size_t size() const noexcept { return height_ * width_; }
  void forward();
  void backward();

 private:
  std::size_t height_, width_;
  Complex* data_;
  void* forward_plan_;
  void* backward_plan_;
};

/// Moves the zero-frequency element from (0,0) to (H/2, W/2).
template <typename T>
Image2D<T> fftshift(const Image2D<T>& img) {
  const std::size_t h = img.height(), w = img.width();
  Image2D<T> out(h, w);
  for (std::size_t r = 0; r < h; ++r) {
    const std::size_t rr = (r + h / 2) % h;
    for (std::size_t c = 0; c < w; ++c) out(rr, (c + w / 2) % w) = img(r, c);
  }
  return out;
}

/// Inverse of fftshift (differs from it for odd sizes).
template <typename T>
Image2D<T> ifftshift(const Image2D<T>& img) {
  const std::size_t h = img.height(), w = img.width();
  Image2D<T> out(h, w);
  for (std::size_t r = 0; r < h; ++r) {
    const std::size_t rr = (r + h / 2) % h;
    for (std::size_t c = 0; c < w; ++c) out(r, c) = img(rr, (c + w / 2) % w);
  }
  return out;
}

/// Signed frequency index of bin k in an n-point transform: [-n/2, n/2).
inline long signed_frequency(std::size_t k, std::size_t n) noexcept {
  const auto ki = static_cast<long>(k);
  const auto ni = static_cast<long>(n);
  return ki < (ni + 1) / 2 ? ki : ki - ni;
}

/// Circularly shifts img by (dx, dy) pixels using the Fourier shift theorem:
/// out(x, y) = img(x - dx, y - dy) for band-limited periodic content.
ComplexImage2D fourier_shift(const ComplexImage2D& img, double dx, double dy);

}  // namespace ptychoforge
