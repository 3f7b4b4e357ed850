#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ptychoforge/image.hpp"
#include "ptychoforge/objgen.hpp"
#include "ptychoforge/random.hpp"
#include "ptychoforge/scan.hpp"

namespace ptychoforge::forward {

enum class ProbeNormalization { RawScale, RmsNormalized };

struct Probe {
  ComplexImage2D field;
  std::string source_label;
  ProbeNormalization normalization = ProbeNormalization::RawScale;
};

/// N patterns of H x W photon counts (or noiseless intensities), fftshifted.
struct DiffractionStack {
  std::vector<RealImage2D> patterns;
  scan::ScanPlan positions;
  std::optional<double> photon_target;  // null when unknown
  std::string probe_label;

  [[nodiscard]] std::size_t size() const noexcept { return patterns.size(); }
  [[nodiscard]] std::size_t height() const noexcept { return patterns.empty() ? 0 : patterns.front().height(); }
  [[nodiscard]] std::size_t width() const noexcept { return patterns.empty() ? 0 : patterns.front().width(); }

  /// Equal shapes, nonnegative finite values, one position per pattern.
  void validate() const;
};

struct NormalizationFactors {
  double n_rms = 0.0;
  double n_energy = 0.0;
  std::size_t batch_size = 0;
};

/// Samples an H=W=size patch centred at center (x: column, y: row). Patch
/// pixel (i, j) reads the object at (center.x - size/2 + j, center.y - size/2 + i)
/// with bilinear interpolation of the real and imaginary parts.
ComplexImage2D extract_patch(const ComplexImage2D& object, scan::Position center, std::size_t size);

/// True when extract_patch at center keeps its bilinear footprint in bounds.
bool patch_in_bounds(std::size_t object_height, std::size_t object_width, scan::Position center,
                     std::size_t size) noexcept;

/// |FFT(patch * probe)|^2 with zero frequency moved to the central pixel.
RealImage2D simulate_pattern(const ComplexImage2D& object_patch, const Probe& probe);

/// Rescales pattern to sum to total_photons, then Poisson-samples each pixel.
RealImage2D apply_photon_scale(const RealImage2D& pattern, double total_photons, RandomSeed seed);

struct SimulationOptions {
  double photons_low = 1e4;
  double photons_high = 1e6;
  bool noiseless = false;
};

/// One log-uniform photon target per dataset; position i draws its noise from
/// derive_stream(seed, "pos", i), so the output does not depend on thread count.
/// In noiseless mode patterns are raw |FT|^2 intensities and photon_target is unset.
DiffractionStack simulate_dataset(const ComplexImage2D& object, const Probe& probe,
                                  const scan::ScanPlan& plan, const SimulationOptions& options,
                                  RandomSeed seed);

/// n_rms = sqrt(HW / mean_n sum_ij I^2) and n_energy = 1 / mean_n sum_ij I.
NormalizationFactors rms_norm(const DiffractionStack& stack);

/// Scales the probe so mean |p|^2 = 1. Phase is untouched.
Probe normalize_probe(const Probe& probe);

/// Test/synthetic probe: soft-edged disk of the given diameter with a
/// polynomial pupil phase (defocus r^2 and coma r^3 cos(theta) terms, radians
/// at the rim). Returned RMS-normalized.
struct SyntheticProbeParams {
  std::size_t size = 64;
  double diameter = 20.0;
  double edge_width = 3.0;
  double defocus = 1.5;
  double coma = 0.0;
};
Probe make_synthetic_probe(const SyntheticProbeParams& params);

}  // namespace ptychoforge::forward
