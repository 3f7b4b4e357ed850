#include "ptychoforge/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <numbers>

#include "ptychoforge/fft.hpp"

namespace ptychoforge::metrics {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double energy(const ComplexImage2D& img) {
  double e = 0.0;
  for (const auto& v : img) e += std::norm(v);
  return e;
}

// Evaluates sum_k X(k) exp(+2 pi i (kx tx / W + ky ty / H)) on a grid of
// shifts (tx, ty); X is in FFT layout.
Image2D<Complex> dft_correlation(const ComplexImage2D& spectrum, const std::vector<double>& tx,
                                 const std::vector<double>& ty) {
  const std::size_t h = spectrum.height(), w = spectrum.width();
  Image2D<Complex> partial(ty.size(), w, Complex{});
  for (std::size_t a = 0; a < ty.size(); ++a) {
    for (std::size_t r = 0; r < h; ++r) {
      const double f = static_cast<double>(signed_frequency(r, h)) / static_cast<double>(h);
      const Complex e = std::polar(1.0, kTwoPi * f * ty[a]);
      for (std::size_t c = 0; c < w; ++c) partial(a, c) += e * spectrum(r, c);
    }
  }
  Image2D<Complex> out(ty.size(), tx.size(), Complex{});
  for (std::size_t b = 0; b < tx.size(); ++b) {
    std::vector<Complex> kernel(w);
    for (std::size_t c = 0; c < w; ++c) {
      const double f = static_cast<double>(signed_frequency(c, w)) / static_cast<double>(w);
      kernel[c] = std::polar(1.0, kTwoPi * f * tx[b]);
    }
    for (std::size_t a = 0; a < ty.size(); ++a) {
      Complex acc{};
      for (std::size_t c = 0; c < w; ++c) acc += kernel[c] * partial(a, c);
      out(a, b) = acc;
    }
  }
  return out;
}

std::vector<double> grid_around(double centre, double half_width, int steps_per_unit) {
  const int n = static_cast<int>(std::lround(half_width * steps_per_unit));
  std::vector<double> g;
  g.reserve(static_cast<std::size_t>(2 * n + 1));
  for (int k = -n; k <= n; ++k) g.push_back(centre + static_cast<double>(k) / steps_per_unit);
  return g;
}

// W(g) = sum weights(y, x) exp(-i (gx x + gy y)) and its derivatives in g.
struct RampObjective {
  Complex value;
  std::array<Complex, 2> grad;
  std::array<Complex, 3> hess;  // xx, xy, yy
};

RampObjective evaluate_ramp(const ComplexImage2D& weights, double gx, double gy) {
  RampObjective out{};
  const std::size_t h = weights.height(), w = weights.width();
  std::vector<Complex> col_phase(w);
  for (std::size_t c = 0; c < w; ++c) col_phase[c] = std::polar(1.0, -gx * static_cast<double>(c));
  for (std::size_t r = 0; r < h; ++r) {
    const double y = static_cast<double>(r);
    const Complex row_phase = std::polar(1.0, -gy * y);
    Complex s0{}, sx{}, sxx{};
    for (std::size_t c = 0; c < w; ++c) {
      const double x = static_cast<double>(c);
      const Complex t = weights(r, c) * col_phase[c];
      s0 += t;
      sx += x * t;
      sxx += x * x * t;
    }
    s0 *= row_phase;
    sx *= row_phase;
    sxx *= row_phase;
    const Complex i(0.0, 1.0);
    out.value += s0;
    out.grad[0] += -i * sx;
    out.grad[1] += -i * y * s0;
    out.hess[0] += -sxx;
    out.hess[1] += -y * sx;
    out.hess[2] += -y * y * s0;
  }
  return out;
}

double window_1d(std::size_t i, std::size_t n, double fraction) {
  const double taper = fraction * static_cast<double>(n);
  const double t = static_cast<double>(std::min(i, n - 1 - i));
  if (t >= taper) return 1.0;
  return 0.5 * (1.0 - std::cos(std::numbers::pi * t / taper));
}

}  // namespace

Registration register_images(const ComplexImage2D& reference, const ComplexImage2D& moving,
                             int upsample) {
  require_same_shape(reference, moving, "register_images");
  if (upsample < 1) throw ValidationError("registration upsample factor must be >= 1");
  require_finite(reference, "reference image");
  require_finite(moving, "moving image");
  if (!(energy(reference) > 0.0) || !(energy(moving) > 0.0)) {
    throw ValidationError("cannot register a zero-energy image");
  }
  const std::size_t h = reference.height(), w = reference.width();
  const ComplexImage2D fr = fft2_forward(reference);
  const ComplexImage2D fm = fft2_forward(moving);
  ComplexImage2D cross(h, w);
  for (std::size_t i = 0; i < cross.size(); ++i) {
    cross.values()[i] = std::conj(fr.values()[i]) * fm.values()[i];
  }
  const ComplexImage2D cc = fft2_inverse(cross);
  std::size_t best = 0;
  double best_mag = -1.0;
  for (std::size_t i = 0; i < cc.size(); ++i) {
    const double m = std::abs(cc.values()[i]);
    if (m > best_mag) {
      best_mag = m;
      best = i;
    }
  }
  double dy = static_cast<double>(signed_frequency(best / w, h));
  double dx = static_cast<double>(signed_frequency(best % w, w));
  Complex peak = cc.values()[best];

  if (upsample > 1) {
    const auto tx = grid_around(dx, 1.0, upsample);
    const auto ty = grid_around(dy, 1.0, upsample);
    const auto local = dft_correlation(cross, tx, ty);
    double local_best = -1.0;
    for (std::size_t a = 0; a < ty.size(); ++a) {
      for (std::size_t b = 0; b < tx.size(); ++b) {
        const double m = std::abs(local(a, b));
        if (m > local_best) {
          local_best = m;
          dy = ty[a];
          dx = tx[b];
          peak = local(a, b);
        }
      }
    }
  }
  Registration reg;
  reg.dx = dx;
  reg.dy = dy;
  reg.global_phase = std::arg(peak);
  return reg;
}

PhaseRamp fit_phase_ramp(const ComplexImage2D& img, const RealImage2D& mask) {
  require_same_shape(img, mask, "fit_phase_ramp");
  require_finite(img, "image");
  const std::size_t h = img.height(), w = img.width();
  ComplexImage2D weights(h, w);
  double total = 0.0, mx = 0.0, my = 0.0;
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < w; ++c) {
      const double m = mask(r, c);
      if (!(m >= 0.0) || !std::isfinite(m)) throw ValidationError("phase-ramp mask must be finite and >= 0");
      weights(r, c) = m * std::abs(img(r, c)) * img(r, c);
      const double wt = m * std::norm(img(r, c));
      total += wt;
      mx += wt * static_cast<double>(c);
      my += wt * static_cast<double>(r);
    }
  }
  if (!(total > 0.0)) throw ValidationError("phase-ramp fit has no weighted support");
  mx /= total;
  my /= total;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < w; ++c) {
      const double wt = mask(r, c) * std::norm(img(r, c));
      const double ddx = static_cast<double>(c) - mx, ddy = static_cast<double>(r) - my;
      sxx += wt * ddx * ddx;
      syy += wt * ddy * ddy;
      sxy += wt * ddx * ddy;
    }
  }
  if (sxx * syy - sxy * sxy <= 1e-12 * total * total) {
    throw ValidationError("phase-ramp fit support is collinear; the plane is undetermined");
  }

  // Coarse: FFT peak. Medium: DFT zoom to 1/16 bin. Fine: Newton on |W|^2.
  const ComplexImage2D spectrum = fft2_forward(weights);
  std::size_t best = 0;
  for (std::size_t i = 0; i < spectrum.size(); ++i) {
    if (std::abs(spectrum.values()[i]) > std::abs(spectrum.values()[best])) best = i;
  }
  double ky = static_cast<double>(signed_frequency(best / w, h));
  double kx = static_cast<double>(signed_frequency(best % w, w));
  {
    // Separable evaluation of |W| on a 1/16-bin grid around the FFT peak.
    const auto gx_bins = grid_around(kx, 1.0, 16);
    const auto gy_bins = grid_around(ky, 1.0, 16);
    Image2D<Complex> partial(gy_bins.size(), w, Complex{});
    for (std::size_t a = 0; a < gy_bins.size(); ++a) {
      const double gy = kTwoPi * gy_bins[a] / static_cast<double>(h);
      for (std::size_t r = 0; r < h; ++r) {
        const Complex e = std::polar(1.0, -gy * static_cast<double>(r));
        for (std::size_t c = 0; c < w; ++c) partial(a, c) += e * weights(r, c);
      }
    }
    double best_mag = -1.0, best_x = kx, best_y = ky;
    std::vector<Complex> kernel(w);
    for (std::size_t b = 0; b < gx_bins.size(); ++b) {
      const double gx = kTwoPi * gx_bins[b] / static_cast<double>(w);
      for (std::size_t c = 0; c < w; ++c) kernel[c] = std::polar(1.0, -gx * static_cast<double>(c));
      for (std::size_t a = 0; a < gy_bins.size(); ++a) {
        Complex acc{};
        for (std::size_t c = 0; c < w; ++c) acc += kernel[c] * partial(a, c);
        if (std::abs(acc) > best_mag) {
          best_mag = std::abs(acc);
          best_x = gx_bins[b];
          best_y = gy_bins[a];
        }
      }
    }
    kx = best_x;
    ky = best_y;
  }
  double gx = kTwoPi * kx / static_cast<double>(w);
  double gy = kTwoPi * ky / static_cast<double>(h);

  RampObjective obj = evaluate_ramp(weights, gx, gy);
  double f = std::norm(obj.value);
  for (int iter = 0; iter < 20; ++iter) {
    // f = |W|^2; gradient and Hessian from the complex derivatives of W.
    const Complex wc = std::conj(obj.value);
    const double g0 = 2.0 * std::real(wc * obj.grad[0]);
    const double g1 = 2.0 * std::real(wc * obj.grad[1]);
    const double h00 = 2.0 * std::real(std::conj(obj.grad[0]) * obj.grad[0] + wc * obj.hess[0]);
    const double h01 = 2.0 * std::real(std::conj(obj.grad[0]) * obj.grad[1] + wc * obj.hess[1]);
    const double h11 = 2.0 * std::real(std::conj(obj.grad[1]) * obj.grad[1] + wc * obj.hess[2]);
    const double det = h00 * h11 - h01 * h01;
    if (!(det > 0.0) || !(h00 < 0.0)) break;  // not locally concave
    const double step_x = -(h11 * g0 - h01 * g1) / det;
    const double step_y = -(h00 * g1 - h01 * g0) / det;
    const RampObjective next = evaluate_ramp(weights, gx + step_x, gy + step_y);
    const double f_next = std::norm(next.value);
    if (!(f_next >= f)) break;
    gx += step_x;
    gy += step_y;
    obj = next;
    const bool converged = std::abs(step_x) < 1e-14 && std::abs(step_y) < 1e-14;
    f = f_next;
    if (converged) break;
  }
  return PhaseRamp{gx, gy, std::arg(obj.value)};
}

ComplexImage2D apply_phase_ramp_removal(const ComplexImage2D& img, const PhaseRamp& ramp) {
  if (ramp.gx == 0.0 && ramp.gy == 0.0 && ramp.c == 0.0) return img;
  ComplexImage2D out(img.height(), img.width());
  for (std::size_t r = 0; r < img.height(); ++r) {
    for (std::size_t c = 0; c < img.width(); ++c) {
      const double plane = ramp.gx * static_cast<double>(c) + ramp.gy * static_cast<double>(r) + ramp.c;
      out(r, c) = img(r, c) * std::polar(1.0, -plane);
    }
  }
  return out;
}

ComplexImage2D remove_phase_ramp(const ComplexImage2D& img, const RealImage2D& mask) {
  return apply_phase_ramp_removal(img, fit_phase_ramp(img, mask));
}

RealImage2D soft_edge_mask(std::size_t height, std::size_t width, double edge_fraction) {
  if (!(edge_fraction > 0.0 && edge_fraction < 0.5)) {
    throw ValidationError("soft-edge fraction must lie in (0, 0.5)");
  }
  RealImage2D mask(height, width);
  std::vector<double> col(width);
  for (std::size_t c = 0; c < width; ++c) col[c] = window_1d(c, width, edge_fraction);
  for (std::size_t r = 0; r < height; ++r) {
    const double wr = window_1d(r, height, edge_fraction);
    for (std::size_t c = 0; c < width; ++c) mask(r, c) = wr * col[c];
  }
  return mask;
}

FrcResult frc(const ComplexImage2D& a, const ComplexImage2D& b, double ring_width, AucMode mode) {
  require_same_shape(a, b, "frc");
  const std::size_t h = a.height(), w = a.width();
  const double n = static_cast<double>(std::max(h, w));
  if (ring_width <= 0.0) ring_width = 1.0 / n;
  const auto rings = static_cast<std::size_t>(std::floor(0.5 / ring_width + 1e-9)) + 1;

  const ComplexImage2D fa = fft2_forward(a);
  const ComplexImage2D fb = fft2_forward(b);
  std::vector<double> cross(rings, 0.0), pa(rings, 0.0), pb(rings, 0.0);
  std::vector<std::size_t> count(rings, 0);
  for (std::size_t r = 0; r < h; ++r) {
    const double fy = static_cast<double>(signed_frequency(r, h)) / static_cast<double>(h);
    for (std::size_t c = 0; c < w; ++c) {
      const double fx = static_cast<double>(signed_frequency(c, w)) / static_cast<double>(w);
      const auto ring = static_cast<std::size_t>(std::lround(std::hypot(fx, fy) / ring_width));
      if (ring >= rings) continue;
      cross[ring] += std::real(fa(r, c) * std::conj(fb(r, c)));
      pa[ring] += std::norm(fa(r, c));
      pb[ring] += std::norm(fb(r, c));
      ++count[ring];
    }
  }

  FrcResult out;
  for (std::size_t k = 0; k < rings; ++k) {
    if (count[k] == 0) {
      throw ValidationError("FRC ring " + std::to_string(k) + " is empty; ring width too fine");
    }
    const double denom = std::sqrt(pa[k] * pb[k]);
    const double corr = denom > 0.0 ? std::clamp(cross[k] / denom, -1.0, 1.0) : 0.0;
    const double root_n = std::sqrt(static_cast<double>(count[k]));
    out.frequencies.push_back(static_cast<double>(k) * ring_width);
    out.correlation.push_back(corr);
    out.ring_pixels.push_back(count[k]);
    out.half_bit_threshold.push_back((0.2071 + 1.9102 / root_n) / (1.2071 + 0.9102 / root_n));
  }

  for (std::size_t k = 1; k < rings; ++k) {
    const double below = out.correlation[k] - out.half_bit_threshold[k];
    if (below < 0.0) {
      const double above = out.correlation[k - 1] - out.half_bit_threshold[k - 1];
      const double t = above > 0.0 ? above / (above - below) : 0.0;
      out.crossing_half_bit = out.frequencies[k - 1] + t * ring_width;
      break;
    }
  }

  const double f_max = out.frequencies.back();
  double integral = 0.0;
  if (mode == AucMode::Nyquist) {
    for (std::size_t k = 1; k < rings; ++k) {
      integral += 0.5 * (out.correlation[k] + out.correlation[k - 1]) * ring_width;
    }
  } else {
    for (std::size_t k = 1; k < rings; ++k) {
      const double c0 = out.correlation[k - 1], c1 = out.correlation[k];
      if (c1 >= 0.5) {
        integral += 0.5 * (c0 + c1) * ring_width;
        continue;
      }
      const double t = c0 > 0.5 ? (c0 - 0.5) / (c0 - c1) : 0.0;
      integral += 0.5 * (c0 + 0.5) * t * ring_width;
      break;
    }
  }
  out.auc = f_max > 0.0 ? std::clamp(integral / f_max, 0.0, 1.0) : 0.0;
  return out;
}

AlignedPair align_for_frc(const ComplexImage2D& truth, const ComplexImage2D& estimate,
                          const PipelineOptions& options) {
  require_same_shape(truth, estimate, "frc pipeline");
  const std::size_t h = truth.height(), w = truth.width();
  const RealImage2D mask = soft_edge_mask(h, w, options.edge_fraction);

  struct Candidate {
    Registration registration;
    ComplexImage2D corrected;
    double score = -1.0;
  };
  auto evaluate = [&](Registration reg) {
    Candidate cand;
    ComplexImage2D shifted = fourier_shift(estimate, -reg.dx, -reg.dy);
    ComplexImage2D relative(h, w);
    Complex overlap{};
    for (std::size_t i = 0; i < relative.size(); ++i) {
      relative.values()[i] = shifted.values()[i] * std::conj(truth.values()[i]);
      overlap += relative.values()[i];
    }
    reg.global_phase = std::arg(overlap);
    reg.ramp = fit_phase_ramp(relative, mask);
    // Take the plane off before resampling: a ramped estimate is not
    // periodic and its Fourier shift would ring. In the unshifted frame the
    // plane keeps its slopes and its offset moves by -g.d.
    PhaseRamp pre = reg.ramp;
    pre.c -= pre.gx * reg.dx + pre.gy * reg.dy;
    cand.corrected = fourier_shift(apply_phase_ramp_removal(estimate, pre), -reg.dx, -reg.dy);
    Complex cross{};
    double et = 0.0, ee = 0.0;
    for (std::size_t i = 0; i < relative.size(); ++i) {
      const double m2 = mask.values()[i] * mask.values()[i];
      cross += m2 * std::conj(truth.values()[i]) * cand.corrected.values()[i];
      et += m2 * std::norm(truth.values()[i]);
      ee += m2 * std::norm(cand.corrected.values()[i]);
    }
    cand.score = et > 0.0 && ee > 0.0 ? std::abs(cross) / std::sqrt(et * ee) : 0.0;
    cand.registration = reg;
    return cand;
  };

  // A phase ramp on the estimate shifts its spectrum and can pull the complex
  // correlation peak away from the true offset. Amplitudes are blind to the
  // ramp, so their registration is tried as well and the alignment that
  // correlates best after ramp removal wins.
  Candidate best = evaluate(register_images(truth, estimate, options.upsample));
  auto centred_amplitude = [](const ComplexImage2D& img) {
    ComplexImage2D out(img.height(), img.width());
    double mean = 0.0;
    for (const auto& v : img) mean += std::abs(v);
    mean /= static_cast<double>(img.size());
    for (std::size_t i = 0; i < img.size(); ++i) out.values()[i] = Complex(std::abs(img.values()[i]) - mean, 0.0);
    return out;
  };
  const ComplexImage2D amp_truth = centred_amplitude(truth);
  const ComplexImage2D amp_estimate = centred_amplitude(estimate);
  if (energy(amp_truth) > 1e-20 * energy(truth) && energy(amp_estimate) > 1e-20 * energy(estimate)) {
    const Registration amp_reg = register_images(amp_truth, amp_estimate, options.upsample);
    if (amp_reg.dx != best.registration.dx || amp_reg.dy != best.registration.dy) {
      Candidate alt = evaluate(amp_reg);
      if (alt.score > best.score) best = std::move(alt);
    }
  }

  AlignedPair out;
  out.registration = best.registration;
  out.truth = ComplexImage2D(h, w);
  for (std::size_t i = 0; i < best.corrected.size(); ++i) {
    out.truth.values()[i] = truth.values()[i] * mask.values()[i];
    best.corrected.values()[i] *= mask.values()[i];
  }
  out.estimate = std::move(best.corrected);
  return out;
}

FrcResult frc_auc_pipeline(const ComplexImage2D& truth, const ComplexImage2D& estimate,
                           const PipelineOptions& options) {
  const AlignedPair aligned = align_for_frc(truth, estimate, options);
  return frc(aligned.truth, aligned.estimate, 0.0, options.mode);
}

std::vector<PsdRing> radial_psd(const ComplexImage2D& img, PsdWindow window) {
  const std::size_t h = img.height(), w = img.width();
  const double n = static_cast<double>(std::max(h, w));
  const auto rings = static_cast<std::size_t>(std::max(h, w) / 2) + 1;
  ComplexImage2D input = img;
  if (window == PsdWindow::Hann) {
    const Complex mean = std::accumulate(img.begin(), img.end(), Complex{}) / static_cast<double>(img.size());
    const double two_pi = 2.0 * std::numbers::pi;
    for (std::size_t r = 0; r < h; ++r) {
      const double wr = 0.5 - 0.5 * std::cos(two_pi * static_cast<double>(r) / static_cast<double>(h));
      for (std::size_t c = 0; c < w; ++c) {
        const double wc = 0.5 - 0.5 * std::cos(two_pi * static_cast<double>(c) / static_cast<double>(w));
        input(r, c) = (img(r, c) - mean) * (wr * wc);
      }
    }
  }
  const ComplexImage2D spectrum = fft2_forward(input);
  std::vector<PsdRing> psd(rings);
  for (std::size_t k = 0; k < rings; ++k) psd[k].frequency = static_cast<double>(k) / n;
  for (std::size_t r = 0; r < h; ++r) {
    const double fy = static_cast<double>(signed_frequency(r, h)) / static_cast<double>(h);
    for (std::size_t c = 0; c < w; ++c) {
      const double fx = static_cast<double>(signed_frequency(c, w)) / static_cast<double>(w);
      const auto ring = static_cast<std::size_t>(std::lround(std::hypot(fx, fy) * n));
      if (ring >= rings) continue;
      psd[ring].power += std::norm(spectrum(r, c));
      ++psd[ring].pixels;
    }
  }
  return psd;
}

std::vector<PsdRing> radial_psd(const RealImage2D& img, PsdWindow window) {
  return radial_psd(to_complex(img), window);
}

double psd_energy_fraction_above(const std::vector<PsdRing>& psd, double cutoff) {
  double total = 0.0, above = 0.0;
  for (std::size_t k = 1; k < psd.size(); ++k) {
    total += psd[k].power;
    if (psd[k].frequency > cutoff) above += psd[k].power;
  }
  return total > 0.0 ? above / total : 0.0;
}

}  // namespace ptychoforge::metrics
