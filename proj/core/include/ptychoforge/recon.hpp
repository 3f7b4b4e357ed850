#pragma once

#include <optional>
#include <vector>

#include "ptychoforge/error.hpp"
#include "ptychoforge/forward.hpp"
#include "ptychoforge/image.hpp"
#include "ptychoforge/random.hpp"

namespace ptychoforge::recon {

/// Raised when an estimate turns non-finite.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, std::size_t iteration)
      : Error(what), iteration_(iteration) {}
  [[nodiscard]] std::size_t iteration() const noexcept { return iteration_; }

 private:
  std::size_t iteration_;
};

struct ReconConfig {
  std::size_t iterations = 300;
  double object_step = 0.9;  // alpha
  double probe_step = 0.9;   // beta
  bool update_probe = false;
  RandomSeed seed{};
  std::size_t object_height = 0;  // all-ones start when initial_object is absent
  std::size_t object_width = 0;
  std::optional<ComplexImage2D> initial_object;

  void validate() const;
};

struct ReconResult {
  ComplexImage2D object_estimate;
  ComplexImage2D probe_estimate;
  // Per sweep: sum over positions of sum (|Psi| - sqrt(I))^2, divided by sum I.
  std::vector<double> error_history;
  RealImage2D illuminated_mask;  // sum of |probe|^2 over all footprints
};

/// Sequential ePIE sweeps with a per-sweep shuffled position order.
ReconResult reconstruct(const forward::DiffractionStack& stack, const forward::Probe& probe,
                        const ReconConfig& config);

/// Fourier modulus projection: sqrt(I) * Psi / |Psi|, zero where |Psi| = 0.
/// measured_shifted is fftshifted (detector layout), spectrum is not.
ComplexImage2D project_modulus(const ComplexImage2D& spectrum, const RealImage2D& measured_shifted);

/// Mean over pixels of predicted - measured * log(predicted + 1e-9).
double poisson_nll(const RealImage2D& predicted, const RealImage2D& measured);

/// Smallest rectangle holding every pixel where mask >= fraction * max(mask).
struct Region {
  std::size_t row0 = 0, col0 = 0, height = 0, width = 0;
};
Region illuminated_region(const RealImage2D& mask, double fraction);

}  // namespace ptychoforge::recon
