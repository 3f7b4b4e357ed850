#include <gtest/gtest.h>

#include <numeric>

#include "../oracles.hpp"
#include "ptychoforge/fft.hpp"
#include "ptychoforge/forward.hpp"
#include "ptychoforge/objgen.hpp"
#include "ptychoforge/pipeline.hpp"

namespace pf = ptychoforge;
namespace fw = ptychoforge::forward;
using pf::Complex;
using pf::ComplexImage2D;
using pf::RealImage2D;

namespace {

fw::Probe random_probe(std::size_t n, std::uint64_t seed) {
  fw::Probe p;
  p.field = oracle::random_complex(n, n, seed);
  p.source_label = "random";
  return p;
}

double total(const RealImage2D& img) { return std::accumulate(img.begin(), img.end(), 0.0); }

pf::scan::ScanPlan raster(double x0, double y0, double step, std::size_t nx, std::size_t ny) {
  pf::scan::ScanSpec s;
  s.extent_x = step * static_cast<double>(nx - 1);
  s.extent_y = step * static_cast<double>(ny - 1);
  s.step_x = s.step_y = step;
  s.origin_x = x0;
  s.origin_y = y0;
  return pf::scan::make_scan(s, {});
}

}  // namespace

TEST(ExtractPatch, IntegerCenterIsExactSlice) {
  const auto obj = oracle::random_complex(40, 50, 1);
  const auto patch = fw::extract_patch(obj, {20.0, 15.0}, 16);
  for (std::size_t r = 0; r < 16; ++r) {
    for (std::size_t c = 0; c < 16; ++c) EXPECT_EQ(patch(r, c), obj(7 + r, 12 + c));
  }
}

TEST(ExtractPatch, BilinearIsExactOnLinearRamp) {
  ComplexImage2D obj(32, 32);
  for (std::size_t r = 0; r < 32; ++r) {
    for (std::size_t c = 0; c < 32; ++c) obj(r, c) = Complex(static_cast<double>(c), -2.0 * static_cast<double>(c));
  }
  const auto patch = fw::extract_patch(obj, {16.5, 16.0}, 8);
  for (std::size_t r = 0; r < 8; ++r) {
    for (std::size_t c = 0; c < 8; ++c) {
      const double expect = static_cast<double>(12 + c) + 0.5;
      EXPECT_NEAR(patch(r, c).real(), expect, 1e-13);
      EXPECT_NEAR(patch(r, c).imag(), -2.0 * expect, 1e-13);
    }
  }
}

TEST(ExtractPatch, MatchesBruteForceBilinear) {
  const auto obj = oracle::random_complex(48, 48, 7);
  const pf::scan::Position center{10.25, 17.75};
  const auto patch = fw::extract_patch(obj, center, 16);
  for (std::size_t r = 0; r < 16; ++r) {
    for (std::size_t c = 0; c < 16; ++c) {
      const auto expect = oracle::bilinear(obj, center.x - 8.0 + static_cast<double>(c),
                                           center.y - 8.0 + static_cast<double>(r));
      EXPECT_LT(std::abs(patch(r, c) - expect), 1e-12);
    }
  }
}

TEST(ExtractPatch, OutOfBoundsNamesTheCenter) {
  const auto obj = oracle::random_complex(32, 32, 1);
  try {
    (void)fw::extract_patch(obj, {30.5, 16.0}, 8);
    FAIL();
  } catch (const pf::ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("30.5"), std::string::npos) << e.what();
  }
  EXPECT_FALSE(fw::patch_in_bounds(32, 32, {28.5, 16.0}, 8));
  EXPECT_TRUE(fw::patch_in_bounds(32, 32, {28.0, 16.0}, 8));
  EXPECT_TRUE(fw::patch_in_bounds(32, 32, {27.5, 16.0}, 8));
}

TEST(SimulatePattern, FlatObjectGivesProbeSpectrum) {
  const auto probe = random_probe(16, 2);
  const auto pattern = fw::simulate_pattern(ComplexImage2D(16, 16, Complex(1.0, 0.0)), probe);
  const auto expect = pf::fftshift(pf::abs_squared(pf::fft2_forward(probe.field)));
  for (std::size_t i = 0; i < pattern.size(); ++i) {
    EXPECT_NEAR(pattern.values()[i], expect.values()[i], 1e-12 * expect.values()[i] + 1e-12);
  }
}

TEST(SimulatePattern, ZeroProbeGivesZeroPattern) {
  fw::Probe probe;
  probe.field = ComplexImage2D(8, 8);
  for (double v : fw::simulate_pattern(oracle::random_complex(8, 8, 1), probe)) EXPECT_EQ(v, 0.0);
}

TEST(SimulatePattern, ConservesEnergy) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto y = oracle::random_complex(64, 64, seed);
    const auto probe = random_probe(64, seed + 100);
    ComplexImage2D psi(64, 64);
    for (std::size_t i = 0; i < psi.size(); ++i) psi.values()[i] = y.values()[i] * probe.field.values()[i];
    EXPECT_LT(oracle::rel_err(total(fw::simulate_pattern(y, probe)), 4096.0 * oracle::sum_norm(psi)), 1e-10);
  }
}

TEST(SimulatePattern, DimensionMismatchThrows) {
  EXPECT_THROW(fw::simulate_pattern(ComplexImage2D(8, 8), random_probe(16, 1)), pf::ValidationError);
}

TEST(SimulatePattern, KeepsProbePhase) {
  const auto base = fw::make_synthetic_probe({32, 14.0, 2.0, 2.0, 1.5});
  fw::Probe conj = base;
  for (auto& v : conj.field) v = std::conj(v);
  const auto obj = pf::objgen::generate_object(pf::objgen::ObjectClass::with_defaults(pf::objgen::ObjectKind::DeadLeaves),
                                               64, 64, {3, 0});
  const auto patch = fw::extract_patch(obj.field, {32, 32}, 32);
  const auto a = fw::simulate_pattern(patch, base);
  const auto b = fw::simulate_pattern(patch, conj);
  double diff = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) diff += std::abs(a.values()[i] - b.values()[i]);
  EXPECT_GT(diff / total(a), 1e-3);
}

TEST(PhotonScale, MeanTotalMatchesTarget) {
  const auto probe = fw::make_synthetic_probe({});
  const auto pattern = fw::simulate_pattern(ComplexImage2D(64, 64, Complex(1.0, 0.0)), probe);
  double sum = 0.0;
  for (std::uint64_t i = 0; i < 100; ++i) {
    const auto counts = fw::apply_photon_scale(pattern, 1e6, {9, i});
    for (double v : counts) ASSERT_EQ(v, std::floor(v));
    sum += total(counts);
  }
  EXPECT_LT(std::abs(sum / 100.0 - 1e6) / 1e6, 0.01);
}

TEST(PhotonScale, HighPhotonLimitApproachesNoiseless) {
  const auto probe = fw::make_synthetic_probe({});
  const auto pattern = fw::simulate_pattern(ComplexImage2D(64, 64, Complex(1.0, 0.0)), probe);
  const auto counts = fw::apply_photon_scale(pattern, 1e9, {1, 0});
  const double scale = 1e9 / total(pattern);
  std::size_t checked = 0;
  for (std::size_t i = 0; i < pattern.size(); ++i) {
    const double lambda = pattern.values()[i] * scale;
    if (lambda <= 1e4) continue;
    // 5 sigma of the Poisson CV at the smallest admitted lambda stays under 1e-3 only for
    // lambda > 2.5e7; below that the bound is the CV itself.
    EXPECT_LT(std::abs(counts.values()[i] - lambda) / lambda, std::max(1e-3, 5.0 / std::sqrt(lambda)));
    ++checked;
  }
  EXPECT_GT(checked, 10U);
}

TEST(PhotonScale, PreservesSupportAndRejectsZeroEnergy) {
  RealImage2D single(8, 8, 0.0);
  single(3, 5) = 2.0;
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto out = fw::apply_photon_scale(single, 100.0, {s, 0});
    for (std::size_t i = 0; i < out.size(); ++i) {
      if (i != 3 * 8 + 5) EXPECT_EQ(out.values()[i], 0.0);
    }
  }
  EXPECT_THROW(fw::apply_photon_scale(RealImage2D(8, 8, 0.0), 100.0, {}), pf::ValidationError);
  EXPECT_THROW(fw::apply_photon_scale(single, 0.0, {}), pf::ValidationError);
}

TEST(SimulateDataset, DegenerateRangeFixesTarget) {
  const auto obj = oracle::random_complex(64, 64, 1);
  const auto probe = fw::make_synthetic_probe({32, 12.0});
  const auto plan = raster(16, 16, 8, 5, 5);
  for (std::uint64_t s = 0; s < 3; ++s) {
    const auto stack = fw::simulate_dataset(obj, probe, plan, {1e4, 1e4, false}, {s, 0});
    ASSERT_TRUE(stack.photon_target.has_value());
    EXPECT_EQ(*stack.photon_target, 1e4);
    EXPECT_EQ(stack.size(), plan.size());
  }
  const auto ranged = fw::simulate_dataset(obj, probe, plan, {1e4, 1e6, false}, {1, 0});
  EXPECT_GE(*ranged.photon_target, 1e4);
  EXPECT_LE(*ranged.photon_target, 1e6);
}

TEST(SimulateDataset, NoiselessFlatObjectRepeatsProbeSpectrum) {
  const auto probe = fw::make_synthetic_probe({32, 12.0});
  const auto stack = fw::simulate_dataset(ComplexImage2D(64, 64, Complex(1.0, 0.0)), probe,
                                          raster(16.25, 16.5, 7.5, 4, 4), {1e4, 1e6, true}, {1, 0});
  EXPECT_FALSE(stack.photon_target.has_value());
  const auto expect = pf::fftshift(pf::abs_squared(pf::fft2_forward(probe.field)));
  for (const auto& p : stack.patterns) {
    for (std::size_t i = 0; i < p.size(); ++i) EXPECT_NEAR(p.values()[i], expect.values()[i], 1e-9);
  }
}

TEST(SimulateDataset, TranslationConsistency) {
  const auto obj = oracle::random_complex(64, 64, 4);
  ComplexImage2D moved(70, 67);
  for (std::size_t r = 0; r < 64; ++r) {
    for (std::size_t c = 0; c < 64; ++c) moved(r + 6, c + 3) = obj(r, c);
  }
  const auto probe = fw::make_synthetic_probe({16, 8.0});
  const auto plan = raster(10, 10, 5, 6, 6);
  auto shifted = plan;
  for (auto& p : shifted.positions) {
    p.x += 3.0;
    p.y += 6.0;
  }
  const auto a = fw::simulate_dataset(obj, probe, plan, {1, 1, true}, {});
  const auto b = fw::simulate_dataset(moved, probe, shifted, {1, 1, true}, {});
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a.patterns[i], b.patterns[i]);
}

TEST(SimulateDataset, IndependentOfThreadCount) {
  const auto obj = oracle::random_complex(80, 80, 4);
  const auto probe = fw::make_synthetic_probe({32, 12.0});
  const auto plan = raster(16, 16, 4, 12, 12);
  pf::pipeline::set_thread_count(1);
  const auto a = fw::simulate_dataset(obj, probe, plan, {1e4, 1e6, false}, {5, 0});
  pf::pipeline::set_thread_count(4);
  const auto b = fw::simulate_dataset(obj, probe, plan, {1e4, 1e6, false}, {5, 0});
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a.patterns[i], b.patterns[i]);
}

TEST(SimulateDataset, RejectsOutOfBoundsPlan) {
  const auto probe = fw::make_synthetic_probe({32, 12.0});
  EXPECT_THROW(fw::simulate_dataset(ComplexImage2D(40, 40), probe, raster(16, 16, 8, 3, 1), {1, 1, true}, {}),
               pf::ValidationError);
  EXPECT_THROW(fw::simulate_dataset(ComplexImage2D(64, 64), probe, raster(16, 16, 8, 2, 2), {10, 1, false}, {}),
               pf::ValidationError);
}

TEST(RmsNorm, UnitAndConstantStacks) {
  fw::DiffractionStack s;
  s.patterns.assign(3, RealImage2D(8, 8, 1.0));
  s.positions.positions.assign(3, {});
  auto f = fw::rms_norm(s);
  EXPECT_DOUBLE_EQ(f.n_rms, 1.0);
  EXPECT_EQ(f.batch_size, 3U);
  const double c = 3.7;
  s.patterns.assign(3, RealImage2D(8, 8, c));
  f = fw::rms_norm(s);
  EXPECT_LT(oracle::rel_err(f.n_rms, 1.0 / c), 1e-12);
  EXPECT_LT(oracle::rel_err(f.n_energy, 1.0 / (64.0 * c)), 1e-12);
}

TEST(RmsNorm, MatchesDoubleLoopOracle) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    fw::DiffractionStack s;
    for (std::uint64_t k = 0; k < 7; ++k) s.patterns.push_back(oracle::random_real(12, 9, seed * 100 + k, 0.0, 50.0));
    s.positions.positions.assign(7, {});
    const auto f = fw::rms_norm(s);
    const auto o = oracle::naive_norms(s.patterns);
    EXPECT_LT(oracle::rel_err(f.n_rms, o.n_rms), 1e-12);
    EXPECT_LT(oracle::rel_err(f.n_energy, o.n_energy), 1e-12);
  }
}

TEST(RmsNorm, AllZeroStackThrows) {
  fw::DiffractionStack s;
  s.patterns.assign(2, RealImage2D(4, 4, 0.0));
  s.positions.positions.assign(2, {});
  EXPECT_THROW(fw::rms_norm(s), pf::ValidationError);
}

TEST(NormalizeProbe, ScalesToUnitMeanPower) {
  fw::Probe p;
  p.field = ComplexImage2D(8, 8, std::polar(2.0, 0.4));
  const auto n = fw::normalize_probe(p);
  for (const auto& v : n.field) {
    EXPECT_NEAR(std::abs(v), 1.0, 1e-15);
    EXPECT_NEAR(std::arg(v), 0.4, 1e-15);
  }
  EXPECT_EQ(n.normalization, fw::ProbeNormalization::RmsNormalized);
  const auto r = fw::normalize_probe(random_probe(32, 5));
  EXPECT_NEAR(oracle::sum_norm(r.field) / 1024.0, 1.0, 1e-12);
  const auto twice = fw::normalize_probe(r);
  for (std::size_t i = 0; i < r.field.size(); ++i) {
    EXPECT_NEAR(std::abs(twice.field.values()[i] - r.field.values()[i]), 0.0, 1e-14);
  }
  fw::Probe zero;
  zero.field = ComplexImage2D(4, 4);
  EXPECT_THROW(fw::normalize_probe(zero), pf::ValidationError);
}

TEST(SyntheticProbe, IsRmsNormalizedWithPhase) {
  const auto p = fw::make_synthetic_probe({});
  EXPECT_EQ(p.field.height(), 64U);
  EXPECT_NEAR(oracle::sum_norm(p.field) / 4096.0, 1.0, 1e-10);
  double max_phase = 0.0;
  for (const auto& v : p.field) {
    if (std::abs(v) > 0.5) max_phase = std::max(max_phase, std::abs(std::arg(v)));
  }
  EXPECT_GT(max_phase, 0.3);
}
