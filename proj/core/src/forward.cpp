#include "ptychoforge/forward.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "ptychoforge/fft.hpp"

namespace ptychoforge::forward {
namespace {

struct Footprint {
  long col0, row0;  // integer part of the top-left sample coordinate
  double fx, fy;    // fractional offsets shared by every patch pixel
};

Footprint footprint(scan::Position center, std::size_t size) {
  const double half = static_cast<double>(size / 2);
  const double x0 = center.x - half, y0 = center.y - half;
  const double fl_x = std::floor(x0), fl_y = std::floor(y0);
  return {static_cast<long>(fl_x), static_cast<long>(fl_y), x0 - fl_x, y0 - fl_y};
}

std::string describe(scan::Position p) {
  std::ostringstream os;
  os.precision(17);
  os << "(" << p.x << ", " << p.y << ")";
  return os.str();
}

}  // namespace

void DiffractionStack::validate() const {
  if (patterns.empty()) throw ValidationError("diffraction stack is empty");
  if (positions.size() != patterns.size()) {
    throw ValidationError("diffraction stack has " + std::to_string(patterns.size()) +
                          " patterns but " + std::to_string(positions.size()) + " positions");
  }
  const auto h = patterns.front().height(), w = patterns.front().width();
  for (const auto& p : patterns) {
    if (p.height() != h || p.width() != w) throw ValidationError("diffraction patterns differ in shape");
    for (double v : p) {
      if (!std::isfinite(v) || v < 0.0) throw ValidationError("diffraction values must be finite and >= 0");
    }
  }
  if (photon_target && !(std::isfinite(*photon_target) && *photon_target > 0.0)) {
    throw ValidationError("photon target must be positive");
  }
}

bool patch_in_bounds(std::size_t object_height, std::size_t object_width, scan::Position center,
                     std::size_t size) noexcept {
  if (size == 0 || !std::isfinite(center.x) || !std::isfinite(center.y)) return false;
  const Footprint fp = footprint(center, size);
  const long last_col = fp.col0 + static_cast<long>(size) - 1 + (fp.fx > 0.0 ? 1 : 0);
  const long last_row = fp.row0 + static_cast<long>(size) - 1 + (fp.fy > 0.0 ? 1 : 0);
  return fp.col0 >= 0 && fp.row0 >= 0 && last_col < static_cast<long>(object_width) &&
         last_row < static_cast<long>(object_height);
}

ComplexImage2D extract_patch(const ComplexImage2D& object, scan::Position center, std::size_t size) {
  if (!patch_in_bounds(object.height(), object.width(), center, size)) {
    throw ValidationError("patch footprint centred at " + describe(center) + " with size " +
                          std::to_string(size) + " leaves the " + std::to_string(object.height()) +
                          "x" + std::to_string(object.width()) + " object");
  }
  const Footprint fp = footprint(center, size);
  const auto r0 = static_cast<std::size_t>(fp.row0);
  const auto c0 = static_cast<std::size_t>(fp.col0);
  ComplexImage2D patch(size, size);
  if (fp.fx == 0.0 && fp.fy == 0.0) {
    for (std::size_t i = 0; i < size; ++i) std::copy_n(&object(r0 + i, c0), size, &patch(i, 0));
    return patch;
  }
  const double wx1 = fp.fx, wx0 = 1.0 - fp.fx;
  const double wy1 = fp.fy, wy0 = 1.0 - fp.fy;
  const std::size_t dx = fp.fx > 0.0 ? 1 : 0;
  const std::size_t dy = fp.fy > 0.0 ? 1 : 0;
  for (std::size_t i = 0; i < size; ++i) {
    for (std::size_t j = 0; j < size; ++j) {
      const Complex top = wx0 * object(r0 + i, c0 + j) + wx1 * object(r0 + i, c0 + j + dx);
      const Complex bottom = wx0 * object(r0 + i + dy, c0 + j) + wx1 * object(r0 + i + dy, c0 + j + dx);
      patch(i, j) = wy0 * top + wy1 * bottom;
    }
  }
  return patch;
}

RealImage2D simulate_pattern(const ComplexImage2D& object_patch, const Probe& probe) {
  require_same_shape(object_patch, probe.field, "simulate_pattern");
  ComplexImage2D exit_wave(object_patch.height(), object_patch.width());
  for (std::size_t i = 0; i < exit_wave.size(); ++i) {
    exit_wave.values()[i] = object_patch.values()[i] * probe.field.values()[i];
  }
  return fftshift(abs_squared(fft2_forward(exit_wave)));
}

RealImage2D apply_photon_scale(const RealImage2D& pattern, double total_photons, RandomSeed seed) {
  if (!(std::isfinite(total_photons) && total_photons > 0.0)) {
    throw ValidationError("total_photons must be positive and finite");
  }
  double sum = 0.0;
  for (double v : pattern) {
    if (!std::isfinite(v) || v < 0.0) throw ValidationError("pattern values must be finite and >= 0");
    sum += v;
  }
  if (!(sum > 0.0)) throw ValidationError("cannot photon-scale a zero-energy pattern");

  const double scale = total_photons / sum;
  Rng rng = make_rng(seed);
  RealImage2D counts(pattern.height(), pattern.width(), 0.0);
  for (std::size_t i = 0; i < pattern.size(); ++i) {
    const double lambda = pattern.values()[i] * scale;
    if (lambda > 0.0) {
      std::poisson_distribution<long long> poisson(lambda);
      counts.values()[i] = static_cast<double>(poisson(rng));
    }
  }
  return counts;
}

DiffractionStack simulate_dataset(const ComplexImage2D& object, const Probe& probe,
                                  const scan::ScanPlan& plan, const SimulationOptions& options,
                                  RandomSeed seed) {
  plan.validate();
  const std::size_t size = probe.field.height();
  if (probe.field.width() != size) throw ValidationError("probe must be square");
  require_finite(object, "object");
  require_finite(probe.field, "probe");
  for (const auto& p : plan.positions) {
    if (!patch_in_bounds(object.height(), object.width(), p, size)) {
      throw ValidationError("scan position " + describe(p) + " puts the " + std::to_string(size) +
                            "-pixel patch outside the object");
    }
  }

  DiffractionStack stack;
  stack.positions = plan;
  stack.probe_label = probe.source_label;
  double target = 0.0;
  if (!options.noiseless) {
    const double lo = options.photons_low, hi = options.photons_high;
    if (!(std::isfinite(lo) && std::isfinite(hi) && lo > 0.0 && lo <= hi)) {
      throw ValidationError("photon range must satisfy 0 < low <= high");
    }
    if (lo == hi) {
      target = lo;
    } else {
      Rng rng = make_rng(derive_stream(seed, "photons", 0));
      std::uniform_real_distribution<double> u(std::log(lo), std::log(hi));
      target = std::exp(u(rng));
    }
    stack.photon_target = target;
  }

  stack.patterns.resize(plan.size());
  const auto n = static_cast<long>(plan.size());
#pragma omp parallel for schedule(static)
  for (long i = 0; i < n; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    RealImage2D pattern = simulate_pattern(extract_patch(object, plan.positions[idx], size), probe);
    if (!options.noiseless) {
      pattern = apply_photon_scale(pattern, target, derive_stream(seed, "pos", idx));
    }
    stack.patterns[idx] = std::move(pattern);
  }
  return stack;
}

NormalizationFactors rms_norm(const DiffractionStack& stack) {
  if (stack.patterns.empty()) throw ValidationError("rms_norm requires at least one pattern");
  const auto hw = static_cast<double>(stack.height() * stack.width());
  double sum = 0.0, sum_sq = 0.0;
  for (const auto& pattern : stack.patterns) {
    for (double v : pattern) {
      sum += v;
      sum_sq += v * v;
    }
  }
  if (!(sum_sq > 0.0)) throw ValidationError("rms_norm of an all-zero stack is undefined");
  const auto n = static_cast<double>(stack.size());
  return NormalizationFactors{std::sqrt(hw / (sum_sq / n)), 1.0 / (sum / n), stack.size()};
}

Probe normalize_probe(const Probe& probe) {
  require_finite(probe.field, "probe");
  double power = 0.0;
  for (const auto& v : probe.field) power += std::norm(v);
  power /= static_cast<double>(probe.field.size());
  if (!(power > 0.0)) throw ValidationError("cannot normalize an all-zero probe");
  Probe out = probe;
  const double scale = 1.0 / std::sqrt(power);
  for (auto& v : out.field) v *= scale;
  out.normalization = ProbeNormalization::RmsNormalized;
  return out;
}

Probe make_synthetic_probe(const SyntheticProbeParams& params) {
  if (params.size < 2 || !(params.diameter > 0.0) || params.edge_width < 0.0) {
    throw ValidationError("synthetic probe needs size >= 2, diameter > 0 and edge_width >= 0");
  }
  const double radius = params.diameter / 2.0;
  const double inner = radius - params.edge_width / 2.0;
  const double outer = radius + params.edge_width / 2.0;
  const double centre = static_cast<double>(params.size / 2);
  Probe probe;
  probe.field = ComplexImage2D(params.size, params.size);
  probe.source_label = "synthetic-disk";
  for (std::size_t r = 0; r < params.size; ++r) {
    for (std::size_t c = 0; c < params.size; ++c) {
      const double dx = static_cast<double>(c) - centre, dy = static_cast<double>(r) - centre;
      const double rho = std::hypot(dx, dy);
      double amp = 0.0;
      if (rho <= inner) {
        amp = 1.0;
      } else if (rho < outer) {
        amp = 0.5 * (1.0 + std::cos(std::numbers::pi * (rho - inner) / (outer - inner)));
      }
      const double u = rho / radius;
      const double cos_theta = rho > 0.0 ? dx / rho : 0.0;
      const double phase = params.defocus * u * u + params.coma * u * u * u * cos_theta;
      probe.field(r, c) = std::polar(amp, phase);
    }
  }
  return normalize_probe(probe);
}

}  // namespace ptychoforge::forward
