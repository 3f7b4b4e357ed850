#pragma once
// Independent reference implementations used as test oracles. Nothing here
// calls into the library beyond its plain data types.

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "ptychoforge/forward.hpp"
#include "ptychoforge/image.hpp"
#include "ptychoforge/scan.hpp"

namespace oracle {

using ptychoforge::Complex;
using ptychoforge::ComplexImage2D;
using ptychoforge::RealImage2D;

inline constexpr double kPi = std::numbers::pi;

// O(N^2 M^2) textbook DFT, sign -1, unnormalized.
inline ComplexImage2D naive_dft2(const ComplexImage2D& x) {
  const std::size_t h = x.height(), w = x.width();
  ComplexImage2D out(h, w);
  for (std::size_t u = 0; u < h; ++u) {
    for (std::size_t v = 0; v < w; ++v) {
      Complex acc{};
      for (std::size_t r = 0; r < h; ++r) {
        for (std::size_t c = 0; c < w; ++c) {
          const double ang = -2.0 * kPi *
                             (static_cast<double>(u * r) / static_cast<double>(h) +
                              static_cast<double>(v * c) / static_cast<double>(w));
          acc += x(r, c) * std::polar(1.0, ang);
        }
      }
      out(u, v) = acc;
    }
  }
  return out;
}

inline ComplexImage2D random_complex(std::size_t h, std::size_t w, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, scale);
  ComplexImage2D img(h, w);
  for (auto& v : img) v = Complex(n(rng), n(rng));
  return img;
}

inline RealImage2D random_real(std::size_t h, std::size_t w, std::uint64_t seed, double lo = 0.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  RealImage2D img(h, w);
  for (auto& v : img) v = u(rng);
  return img;
}

inline double sum_norm(const ComplexImage2D& x) {
  double s = 0.0;
  for (const auto& v : x) s += std::norm(v);
  return s;
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

// Four-neighbour bilinear weighting written out longhand.
inline Complex bilinear(const ComplexImage2D& obj, double x, double y) {
  const double x0 = std::floor(x), y0 = std::floor(y);
  const double fx = x - x0, fy = y - y0;
  const auto c0 = static_cast<std::size_t>(x0), r0 = static_cast<std::size_t>(y0);
  const Complex v00 = obj(r0, c0);
  const Complex v01 = fx > 0.0 ? obj(r0, c0 + 1) : Complex{};
  const Complex v10 = fy > 0.0 ? obj(r0 + 1, c0) : Complex{};
  const Complex v11 = fx > 0.0 && fy > 0.0 ? obj(r0 + 1, c0 + 1) : Complex{};
  return (1 - fx) * (1 - fy) * v00 + fx * (1 - fy) * v01 + (1 - fx) * fy * v10 + fx * fy * v11;
}

// n_rms = sqrt(HW / ((1/N) sum_n sum_ij I^2)), n_energy = 1 / ((1/N) sum_n sum_ij I).
struct Norms {
  double n_rms, n_energy;
};
inline Norms naive_norms(const std::vector<RealImage2D>& stack) {
  const double n = static_cast<double>(stack.size());
  const double hw = static_cast<double>(stack.front().height() * stack.front().width());
  double s1 = 0.0, s2 = 0.0;
  for (const auto& img : stack) {
    for (std::size_t i = 0; i < img.height(); ++i) {
      for (std::size_t j = 0; j < img.width(); ++j) {
        s1 += img(i, j);
        s2 += img(i, j) * img(i, j);
      }
    }
  }
  return {std::sqrt(hw / (s2 / n)), 1.0 / (s1 / n)};
}

// Quadrant sign pattern, written independently of the library's quadrant_of.
inline bool in_quadrant(std::size_t channel, double dx, double dy) {
  switch (channel) {
    case 0: return dx < 0 && dy >= 0;
    case 1: return dx >= 0 && dy >= 0;
    case 2: return dx < 0 && dy < 0;
    case 3: return dx >= 0 && dy < 0;
    default: return false;
  }
}

// Returns an empty string when every group satisfies the contract, otherwise
// a description of the first violation found.
inline std::string verify_groups(const ptychoforge::scan::ScanPlan& plan, const ptychoforge::scan::GroupSet& g,
                                 bool allow_fallback) {
  if (g.channels.size() != g.reference_indices.size()) return "length mismatch";
  for (std::size_t k = 0; k < g.size(); ++k) {
    const auto ref = g.reference_indices[k];
    const auto& rp = plan.positions.at(static_cast<std::size_t>(ref));
    int self_uses = 0;
    for (std::size_t c = 0; c < 4; ++c) {
      const auto m = g.channels[k][c];
      if (m < 0 || static_cast<std::size_t>(m) >= plan.size()) return "index out of range";
      for (std::size_t d = 0; d < c; ++d) {
        if (g.channels[k][d] == m) return "duplicate member in group " + std::to_string(k);
      }
      if (m == ref) {
        ++self_uses;
        continue;
      }
      const bool borrowed = allow_fallback && (g.fallback_mask.at(k) >> c & 1U);
      const auto& mp = plan.positions[static_cast<std::size_t>(m)];
      const double dx = mp.x - rp.x, dy = mp.y - rp.y;
      const double dist = std::hypot(dx, dy);
      if (dist < g.params.d_min - 1e-12 || dist > g.params.d_max + 1e-12) {
        return "distance " + std::to_string(dist) + " outside range in group " + std::to_string(k);
      }
      if (!borrowed && !in_quadrant(c, dx, dy)) {
        return "quadrant violation in group " + std::to_string(k) + " channel " + std::to_string(c);
      }
    }
    if (self_uses > 1) return "reference used twice in group " + std::to_string(k);
  }
  return {};
}

// Brute-force neighbours within [lo, hi] of point i.
inline std::vector<std::size_t> neighbours(const ptychoforge::scan::ScanPlan& plan, std::size_t i, double lo,
                                           double hi) {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < plan.size(); ++j) {
    if (j == i) continue;
    const double d = std::hypot(plan.positions[j].x - plan.positions[i].x, plan.positions[j].y - plan.positions[i].y);
    if (d >= lo && d <= hi) out.push_back(j);
  }
  return out;
}

inline double mean_nn_distance(const ptychoforge::scan::ScanPlan& plan) {
  double total = 0.0;
  for (std::size_t i = 0; i < plan.size(); ++i) {
    double best = INFINITY;
    for (std::size_t j = 0; j < plan.size(); ++j) {
      if (i == j) continue;
      best = std::min(best, std::hypot(plan.positions[j].x - plan.positions[i].x,
                                       plan.positions[j].y - plan.positions[i].y));
    }
    total += best;
  }
  return total / static_cast<double>(plan.size());
}

// One-dimensional Tukey window value at index i of n with taper length L.
inline double tukey(std::size_t i, std::size_t n, double fraction) {
  const double taper = fraction * static_cast<double>(n);
  const double t = static_cast<double>(std::min(i, n - 1 - i));
  if (t >= taper) return 1.0;
  return 0.5 * (1.0 - std::cos(kPi * t / taper));
}

// Gaussian blur transfer function for sigma in pixels, f in cycles/pixel.
inline double gaussian_mtf(double sigma, double f) { return std::exp(-2.0 * kPi * kPi * sigma * sigma * f * f); }

}  // namespace oracle
