#include "ptychoforge/recon.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ptychoforge/fft.hpp"

namespace ptychoforge::recon {

void ReconConfig::validate() const {
  if (iterations < 1) throw ValidationError("reconstruction needs iterations >= 1");
  if (!(object_step > 0.0 && object_step <= 2.0)) throw ValidationError("object step must lie in (0, 2]");
  if (!(probe_step > 0.0 && probe_step <= 2.0)) throw ValidationError("probe step must lie in (0, 2]");
  if (!initial_object && (object_height == 0 || object_width == 0)) {
    throw ValidationError("reconstruction needs an initial object or an object shape");
  }
}

ComplexImage2D project_modulus(const ComplexImage2D& spectrum, const RealImage2D& measured_shifted) {
  require_same_shape(spectrum, measured_shifted, "project_modulus");
  const std::size_t h = spectrum.height(), w = spectrum.width();
  ComplexImage2D out(h, w);
  for (std::size_t r = 0; r < h; ++r) {
    const std::size_t rs = (r + h / 2) % h;
    for (std::size_t c = 0; c < w; ++c) {
      const Complex v = spectrum(r, c);
      const double mag = std::abs(v);
      const double amp = std::sqrt(measured_shifted(rs, (c + w / 2) % w));
      out(r, c) = mag > 0.0 ? v * (amp / mag) : Complex{};
    }
  }
  return out;
}

ReconResult reconstruct(const forward::DiffractionStack& stack, const forward::Probe& probe,
                        const ReconConfig& config) {
  config.validate();
  stack.validate();
  const std::size_t size = probe.field.height();
  if (probe.field.width() != size || stack.height() != size || stack.width() != size) {
    throw ValidationError("probe and diffraction dimensions disagree");
  }

  ComplexImage2D probe_field = probe.field;
  double total_intensity = 0.0;
  for (const auto& pattern : stack.patterns) total_intensity += std::accumulate(pattern.begin(), pattern.end(), 0.0);

  ComplexImage2D object = config.initial_object
                              ? *config.initial_object
                              : ComplexImage2D(config.object_height, config.object_width, Complex(1.0, 0.0));
  const std::size_t oh = object.height(), ow = object.width();

  // Update footprints snap to the nearest integer top-left corner; the
  // forward pass keeps the exact sub-pixel position through extract_patch.
  const std::size_t n = stack.size();
  std::vector<std::size_t> row0(n), col0(n);
  const long half = static_cast<long>(size / 2);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& p = stack.positions.positions[i];
    if (!forward::patch_in_bounds(oh, ow, p, size)) {
      throw ValidationError("scan position " + std::to_string(i) + " lies outside the object");
    }
    const long c = std::lround(p.x) - half, r = std::lround(p.y) - half;
    if (c < 0 || r < 0 || c + static_cast<long>(size) > static_cast<long>(ow) ||
        r + static_cast<long>(size) > static_cast<long>(oh)) {
      throw ValidationError("rounded footprint of position " + std::to_string(i) + " leaves the object");
    }
    row0[i] = static_cast<std::size_t>(r);
    col0[i] = static_cast<std::size_t>(c);
  }

  const double error_scale = total_intensity > 0.0 ? 1.0 / total_intensity : 1.0;

  ReconResult result;
  result.error_history.reserve(config.iterations);
  Rng rng = make_rng(derive_stream(config.seed, "recon-order", 0));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});

  // Measured moduli in unshifted FFT order, computed once.
  std::vector<RealImage2D> moduli;
  moduli.reserve(n);
  for (const auto& pattern : stack.patterns) {
    RealImage2D m = ifftshift(pattern);
    for (auto& v : m) v = std::sqrt(v);
    moduli.push_back(std::move(m));
  }
  std::vector<bool> integral(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& p = stack.positions.positions[i];
    integral[i] = p.x == std::round(p.x) && p.y == std::round(p.y);
  }

  const std::size_t npix = size * size;
  const double inv_npix = 1.0 / static_cast<double>(npix);
  ComplexImage2D patch(size, size);
  ComplexImage2D exit_wave(size, size);
  FftWorkspace wave(size, size);
  auto max_norm = [](const ComplexImage2D& img) {
    double m = 0.0;
    for (const auto& v : img) m = std::max(m, std::norm(v));
    return m;
  };
  double probe_max = max_norm(probe_field);

  for (std::size_t iter = 0; iter < config.iterations; ++iter) {
    std::shuffle(order.begin(), order.end(), rng);
    double error = 0.0;
    for (const std::size_t i : order) {
      if (integral[i]) {
        for (std::size_t r = 0; r < size; ++r) {
          const Complex* src = &object(row0[i] + r, col0[i]);
          std::copy(src, src + size, &patch(r, 0));
        }
      } else {
        patch = forward::extract_patch(object, stack.positions.positions[i], size);
      }
      Complex* pv = patch.data();
      Complex* prv = probe_field.data();
      Complex* ev = exit_wave.data();
      Complex* wv = wave.data();
      for (std::size_t k = 0; k < npix; ++k) {
        const double re = pv[k].real() * prv[k].real() - pv[k].imag() * prv[k].imag();
        const double im = pv[k].real() * prv[k].imag() + pv[k].imag() * prv[k].real();
        ev[k] = Complex(re, im);
        wv[k] = ev[k];
      }

      // Modulus projection in place; the 1/(HW) of the inverse transform is
      // folded into the per-pixel factor.
      wave.forward();
      const double* amp = moduli[i].data();
      for (std::size_t k = 0; k < npix; ++k) {
        const double re = wv[k].real(), im = wv[k].imag();
        const double mag = std::sqrt(re * re + im * im);
        const double diff = mag - amp[k];
        error += diff * diff;
        const double f = mag > 0.0 ? amp[k] / mag * inv_npix : 0.0;
        wv[k] = Complex(re * f, im * f);
      }
      wave.backward();

      const double object_max = config.update_probe ? max_norm(patch) : 0.0;
      const double obj_gain = probe_max > 0.0 ? config.object_step / probe_max : 0.0;
      const double probe_gain = object_max > 0.0 ? config.probe_step / object_max : 0.0;

      for (std::size_t r = 0; r < size; ++r) {
        Complex* orow = &object(row0[i] + r, col0[i]);
        for (std::size_t c = 0; c < size; ++c) {
          const std::size_t k = r * size + c;
          const double dre = wv[k].real() - ev[k].real();
          const double dim = wv[k].imag() - ev[k].imag();
          // conj(p) * delta
          const double pre = prv[k].real(), pim = prv[k].imag();
          orow[c] += Complex(obj_gain * (pre * dre + pim * dim), obj_gain * (pre * dim - pim * dre));
          if (config.update_probe) {
            const double ore = pv[k].real(), oim = pv[k].imag();
            prv[k] += Complex(probe_gain * (ore * dre + oim * dim), probe_gain * (ore * dim - oim * dre));
          }
        }
      }
      if (config.update_probe) probe_max = max_norm(probe_field);
    }
    error *= error_scale;
    if (!std::isfinite(error) || !all_finite(object) || !all_finite(probe_field)) {
      throw DivergenceError("reconstruction diverged at iteration " + std::to_string(iter), iter);
    }
    result.error_history.push_back(error);
  }

  result.illuminated_mask = RealImage2D(oh, ow, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t r = 0; r < size; ++r) {
      for (std::size_t c = 0; c < size; ++c) {
        result.illuminated_mask(row0[i] + r, col0[i] + c) += std::norm(probe_field(r, c));
      }
    }
  }
  result.object_estimate = std::move(object);
  result.probe_estimate = std::move(probe_field);
  return result;
}

double poisson_nll(const RealImage2D& predicted, const RealImage2D& measured) {
  require_same_shape(predicted, measured, "poisson_nll");
  constexpr double kEps = 1e-9;
  double total = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const double lambda = predicted.values()[i];
    const double k = measured.values()[i];
    if (!(lambda >= 0.0) || !(k >= 0.0) || !std::isfinite(lambda) || !std::isfinite(k)) {
      throw ValidationError("poisson_nll inputs must be finite and >= 0");
    }
    total += lambda - k * std::log(lambda + kEps);
  }
  return total / static_cast<double>(predicted.size());
}

Region illuminated_region(const RealImage2D& mask, double fraction) {
  if (mask.empty()) throw ValidationError("illuminated_region: empty mask");
  const double peak = *std::max_element(mask.begin(), mask.end());
  if (!(peak > 0.0)) throw ValidationError("illuminated_region: mask has no illumination");
  const double cut = fraction * peak;
  std::size_t r_lo = mask.height(), r_hi = 0, c_lo = mask.width(), c_hi = 0;
  for (std::size_t r = 0; r < mask.height(); ++r) {
    for (std::size_t c = 0; c < mask.width(); ++c) {
      if (mask(r, c) >= cut) {
        r_lo = std::min(r_lo, r);
        r_hi = std::max(r_hi, r);
        c_lo = std::min(c_lo, c);
        c_hi = std::max(c_hi, c);
      }
    }
  }
  return Region{r_lo, c_lo, r_hi - r_lo + 1, c_hi - c_lo + 1};
}

}  // namespace ptychoforge::recon
