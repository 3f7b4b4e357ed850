#include "ptychoforge/fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <tuple>

namespace ptychoforge {
namespace {

// FFTW planning is not thread-safe, execution is. Plans are created once per
// (shape, direction) and kept for the lifetime of the process.
class PlanCache {
 public:
  static PlanCache& instance() {
    static PlanCache cache;
    return cache;
  }

  fftw_plan get(std::size_t height, std::size_t width, int sign, bool aligned = false) {
    const std::lock_guard lock(mutex_);
    const auto key = std::make_tuple(height, width, sign, aligned);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;
    auto* buffer = fftw_alloc_complex(height * width);
    // FFTW_UNALIGNED lets the plan run on std::vector storage of any alignment
    // and keeps the codelet choice independent of where buffers land.
    fftw_plan plan = fftw_plan_dft_2d(static_cast<int>(height), static_cast<int>(width), buffer,
                                      buffer, sign, aligned ? FFTW_ESTIMATE : FFTW_ESTIMATE | FFTW_UNALIGNED);
    fftw_free(buffer);
    if (plan == nullptr) throw Error("FFTW failed to create a plan");
    plans_.emplace(key, plan);
    return plan;
  }

  PlanCache(const PlanCache&) = delete;
  PlanCache& operator=(const PlanCache&) = delete;

 private:
  PlanCache() = default;
  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

  std::mutex mutex_;
  std::map<std::tuple<std::size_t, std::size_t, int, bool>, fftw_plan> plans_;
};

void transform_inplace(ComplexImage2D& img, int sign) {
  auto* data = reinterpret_cast<fftw_complex*>(img.data());
  fftw_execute_dft(PlanCache::instance().get(img.height(), img.width(), sign), data, data);
}

ComplexImage2D transform(const ComplexImage2D& img, int sign) {
  ComplexImage2D out = img;
  transform_inplace(out, sign);
  return out;
}

}  // namespace

ComplexImage2D fft2_forward(const ComplexImage2D& img) { return transform(img, FFTW_FORWARD); }

FftWorkspace::FftWorkspace(std::size_t height, std::size_t width)
    : height_(height), width_(width),
      data_(reinterpret_cast<Complex*>(fftw_alloc_complex(height * width))),
      forward_plan_(PlanCache::instance().get(height, width, FFTW_FORWARD, true)),
      backward_plan_(PlanCache::instance().get(height, width, FFTW_BACKWARD, true)) {
  if (data_ == nullptr) throw Error("FFTW failed to allocate a workspace");
  std::fill(data_, data_ + size(), Complex{});
}

FftWorkspace::~FftWorkspace() { fftw_free(data_); }

void FftWorkspace::forward() {
  auto* d = reinterpret_cast<fftw_complex*>(data_);
  fftw_execute_dft(static_cast<fftw_plan>(forward_plan_), d, d);
}

void FftWorkspace::backward() {
  auto* d = reinterpret_cast<fftw_complex*>(data_);
  fftw_execute_dft(static_cast<fftw_plan>(backward_plan_), d, d);
}

ComplexImage2D fft2_inverse(const ComplexImage2D& img) {
  ComplexImage2D out = transform(img, FFTW_BACKWARD);
  const double scale = 1.0 / static_cast<double>(img.size());
  for (auto& v : out) v *= scale;
  return out;
}

ComplexImage2D fourier_shift(const ComplexImage2D& img, double dx, double dy) {
  if (dx == 0.0 && dy == 0.0) return img;
  ComplexImage2D spectrum = fft2_forward(img);
  const std::size_t h = img.height(), w = img.width();
  const double two_pi = 2.0 * std::numbers::pi;
  std::vector<Complex> col_phase(w);
  for (std::size_t c = 0; c < w; ++c) {
    const double f = static_cast<double>(signed_frequency(c, w)) / static_cast<double>(w);
    col_phase[c] = std::polar(1.0, -two_pi * f * dx);
  }
  for (std::size_t r = 0; r < h; ++r) {
    const double f = static_cast<double>(signed_frequency(r, h)) / static_cast<double>(h);
    const Complex row_phase = std::polar(1.0, -two_pi * f * dy);
    for (std::size_t c = 0; c < w; ++c) spectrum(r, c) *= row_phase * col_phase[c];
  }
  return fft2_inverse(spectrum);
}

}  // namespace ptychoforge
