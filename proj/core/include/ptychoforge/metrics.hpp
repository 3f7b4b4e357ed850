#pragma once

#include <optional>
#include <vector>

#include "ptychoforge/image.hpp"

namespace ptychoforge::metrics {

// --- registration ---------------------------------------------------------

struct PhaseRamp {
  double gx = 0.0;  // radians per pixel along columns
  double gy = 0.0;  // radians per pixel along rows
  double c = 0.0;   // radians
};

struct Registration {
  double dx = 0.0;  // moving(x, y) ~ reference(x - dx, y - dy)
  double dy = 0.0;
  PhaseRamp ramp;
  double global_phase = 0.0;  // phase of moving relative to reference after the shift
};

/// Integer cross-correlation peak refined to 1/upsample pixel by a local
/// DFT around it.
Registration register_images(const ComplexImage2D& reference, const ComplexImage2D& moving,
                             int upsample = 16);

/// Least-squares plane fit of the phase: maximizes
/// |sum mask |img| img exp(-i(gx x + gy y))| over (gx, gy); c is the phase
/// of that sum. x is the column index, y the row index.
PhaseRamp fit_phase_ramp(const ComplexImage2D& img, const RealImage2D& mask);

/// Multiplies by exp(-i(gx x + gy y + c)).
ComplexImage2D apply_phase_ramp_removal(const ComplexImage2D& img, const PhaseRamp& ramp);

/// fit_phase_ramp followed by apply_phase_ramp_removal.
ComplexImage2D remove_phase_ramp(const ComplexImage2D& img, const RealImage2D& mask);

/// Separable Tukey window: 1 inside, raised-cosine taper to 0 over
/// edge_fraction of each dimension.
RealImage2D soft_edge_mask(std::size_t height, std::size_t width, double edge_fraction);

// --- Fourier ring correlation ---------------------------------------------------

enum class AucMode {
  Nyquist,          // integrate the whole curve up to 0.5 cycles/pixel
  HalfCorrelation,  // stop where the curve first drops below 0.5
};

struct FrcResult {
  std::vector<double> frequencies;  // ring centres, cycles/pixel, ascending to 0.5
  std::vector<double> correlation;
  std::vector<std::size_t> ring_pixels;
  std::vector<double> half_bit_threshold;
  double auc = 0.0;
  std::optional<double> crossing_half_bit;
};

/// Per-ring Re[sum Fa conj(Fb)] / sqrt(sum |Fa|^2 sum |Fb|^2). ring_width <= 0
/// selects one frequency bin, 1 / max(H, W).
FrcResult frc(const ComplexImage2D& a, const ComplexImage2D& b, double ring_width = 0.0,
              AucMode mode = AucMode::Nyquist);

struct PipelineOptions {
  int upsample = 16;
  double edge_fraction = 0.1;
  AucMode mode = AucMode::Nyquist;
};

struct AlignedPair {
  ComplexImage2D truth;     // masked
  ComplexImage2D estimate;  // shifted, ramp-removed, masked
  Registration registration;
};

/// Registration, phase-ramp removal of estimate * conj(truth), soft-edge mask.
AlignedPair align_for_frc(const ComplexImage2D& truth, const ComplexImage2D& estimate,
                          const PipelineOptions& options = {});

/// align_for_frc followed by frc: the scalar FRC-AUC score.
FrcResult frc_auc_pipeline(const ComplexImage2D& truth, const ComplexImage2D& estimate,
                           const PipelineOptions& options = {});

// --- power spectral density ----------------------------------------------------------

struct PsdRing {
  double frequency = 0.0;  // cycles/pixel
  double power = 0.0;      // sum of |FFT|^2 over the ring
  std::size_t pixels = 0;
};

enum class PsdWindow {
  None,  // periodogram of the image as given
  Hann,  // subtract the mean, then taper with a separable periodic Hann window
};

/// |FFT|^2 summed over integer-radius rings up to 0.5 cycles/pixel.
std::vector<PsdRing> radial_psd(const ComplexImage2D& img, PsdWindow window = PsdWindow::None);
std::vector<PsdRing> radial_psd(const RealImage2D& img, PsdWindow window = PsdWindow::None);

/// Share of non-DC ring power at frequencies strictly above cutoff.
double psd_energy_fraction_above(const std::vector<PsdRing>& psd, double cutoff);

}  // namespace ptychoforge::metrics
