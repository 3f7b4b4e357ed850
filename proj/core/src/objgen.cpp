#include "ptychoforge/objgen.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

namespace ptychoforge::objgen {
namespace {

constexpr double kPi = std::numbers::pi;

void require(bool ok, const char* field, const std::string& why) {
  if (!ok) throw ValidationError(std::string("invalid object parameter '") + field + "': " + why);
}

struct Validator {
  void operator()(const DeadLeavesParams& p) const {
    require(std::isfinite(p.r_min) && p.r_min > 0.0, "r_min", "must be > 0");
    require(std::isfinite(p.r_max) && (p.r_max <= 0.0 || p.r_max > p.r_min), "r_max",
            "must exceed r_min (or be <= 0 for automatic)");
    require(std::isfinite(p.exponent) && p.exponent > 1.0, "exponent", "must be > 1");
  }
  void operator()(const ProceduralParams& p) const {
    require(p.coverage > 0.0 && p.coverage <= 0.95, "coverage", "must lie in (0, 0.95]");
    require(p.line_width_min > 0.0 && p.line_width_min <= p.line_width_max, "line_width_min",
            "must be > 0 and <= line_width_max");
    require(p.ellipse_axis_min > 0.0 && p.ellipse_axis_min <= p.ellipse_axis_max,
            "ellipse_axis_min", "must be > 0 and <= ellipse_axis_max");
    require(p.opacity_min > 0.0 && p.opacity_min <= p.opacity_max && p.opacity_max <= 1.0,
            "opacity_min", "opacity range must satisfy 0 < min <= max <= 1");
  }
  void operator()(const WhiteNoiseParams&) const {}
  void operator()(const BlurredWhiteNoiseParams& p) const {
    require(std::isfinite(p.sigma) && p.sigma > 0.0, "sigma", "must be > 0");
    require(std::isfinite(p.truncate) && p.truncate > 0.0, "truncate", "must be > 0");
  }
  void operator()(const SimplexNoiseParams& p) const {
    require(p.octaves >= 1 && p.octaves <= 16, "octaves", "must lie in [1, 16]");
    require(std::isfinite(p.min_wavelength) && p.min_wavelength >= 2.0, "min_wavelength",
            "must be >= 2 pixels");
    require(p.persistence > 0.0 && p.persistence <= 1.0, "persistence", "must lie in (0, 1]");
  }
};

// --- dead leaves -----------------------------------------------------------

RealImage2D dead_leaves(const DeadLeavesParams& p, std::size_t height, std::size_t width,
                        Rng& rng) {
  const double r_min = p.r_min;
  const double r_max =
      p.r_max > 0.0 ? p.r_max : std::max(r_min * 1.5, static_cast<double>(std::min(height, width)) / 4.0);
  const double a = 1.0 - p.exponent;
  const double lo = std::pow(r_min, a), hi = std::pow(r_max, a);

  const double nan = std::numeric_limits<double>::quiet_NaN();
  RealImage2D canvas(height, width, nan);
  std::size_t uncovered = canvas.size();

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> cx_dist(-r_max, static_cast<double>(width) + r_max);
  std::uniform_real_distribution<double> cy_dist(-r_max, static_cast<double>(height) + r_max);

  constexpr std::size_t kMaxDraws = 50'000'000;
  for (std::size_t draw = 0; uncovered > 0; ++draw) {
    if (draw == kMaxDraws) throw Error("dead leaves generation did not reach full coverage");
    const double radius = std::pow(lo + unit(rng) * (hi - lo), 1.0 / a);
    const double cx = cx_dist(rng);
    const double cy = cy_dist(rng);
    const double gray = unit(rng);

    const long r0 = std::max(0L, static_cast<long>(std::floor(cy - radius)));
    const long r1 = std::min(static_cast<long>(height) - 1, static_cast<long>(std::ceil(cy + radius)));
    const long c0 = std::max(0L, static_cast<long>(std::floor(cx - radius)));
    const long c1 = std::min(static_cast<long>(width) - 1, static_cast<long>(std::ceil(cx + radius)));
    const double r2 = radius * radius;
    // Earlier leaves lie on top: a new leaf only shows through uncovered pixels.
    for (long r = r0; r <= r1; ++r) {
      const double dy = static_cast<double>(r) - cy;
      for (long c = c0; c <= c1; ++c) {
        const double dx = static_cast<double>(c) - cx;
        double& px = canvas(static_cast<std::size_t>(r), static_cast<std::size_t>(c));
        if (dx * dx + dy * dy <= r2 && std::isnan(px)) {
          px = gray;
          --uncovered;
        }
      }
    }
  }
  return canvas;
}

// --- procedural lines / ellipses ---------------------------------------------

double segment_distance(double px, double py, double ax, double ay, double bx, double by) {
  const double vx = bx - ax, vy = by - ay;
  const double len2 = vx * vx + vy * vy;
  double t = len2 > 0.0 ? ((px - ax) * vx + (py - ay) * vy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return std::hypot(px - (ax + t * vx), py - (ay + t * vy));
}

class Compositor {
 public:
  explicit Compositor(RealImage2D& canvas) : canvas_(canvas) {}

  void add(std::size_t r, std::size_t c, double value) {
    if (value <= 0.0) return;
    double& px = canvas_(r, c);
    if (px == 0.0) ++covered_;
    px += value;
  }

  [[nodiscard]] std::size_t covered() const noexcept { return covered_; }

 private:
  RealImage2D& canvas_;
  std::size_t covered_ = 0;
};

void draw_line(Compositor& comp, std::size_t height, std::size_t width, double ax, double ay,
               double bx, double by, double line_width, double opacity) {
  const double pad = line_width / 2.0 + 1.0;
  const long r0 = std::max(0L, static_cast<long>(std::floor(std::min(ay, by) - pad)));
  const long r1 = std::min(static_cast<long>(height) - 1, static_cast<long>(std::ceil(std::max(ay, by) + pad)));
  const long c0 = std::max(0L, static_cast<long>(std::floor(std::min(ax, bx) - pad)));
  const long c1 = std::min(static_cast<long>(width) - 1, static_cast<long>(std::ceil(std::max(ax, bx) + pad)));
  for (long r = r0; r <= r1; ++r) {
    for (long c = c0; c <= c1; ++c) {
      const double d = segment_distance(static_cast<double>(c), static_cast<double>(r), ax, ay, bx, by);
      const double cov = std::clamp(line_width / 2.0 + 0.5 - d, 0.0, 1.0);
      comp.add(static_cast<std::size_t>(r), static_cast<std::size_t>(c), opacity * cov);
    }
  }
}

void draw_ellipse(Compositor& comp, std::size_t height, std::size_t width, double cx, double cy,
                  double semi_a, double semi_b, double angle, double opacity) {
  const double reach = std::max(semi_a, semi_b) + 1.0;
  const double ca = std::cos(angle), sa = std::sin(angle);
  const long r0 = std::max(0L, static_cast<long>(std::floor(cy - reach)));
  const long r1 = std::min(static_cast<long>(height) - 1, static_cast<long>(std::ceil(cy + reach)));
  const long c0 = std::max(0L, static_cast<long>(std::floor(cx - reach)));
  const long c1 = std::min(static_cast<long>(width) - 1, static_cast<long>(std::ceil(cx + reach)));
  for (long r = r0; r <= r1; ++r) {
    for (long c = c0; c <= c1; ++c) {
      const double dx = static_cast<double>(c) - cx, dy = static_cast<double>(r) - cy;
      const double u = ca * dx + sa * dy;
      const double v = -sa * dx + ca * dy;
      const double q = std::hypot(u / semi_a, v / semi_b);
      double cov = 1.0;
      if (q > 0.5) {
        // first-order signed distance to the boundary q = 1
        const double grad = std::hypot(u / (semi_a * semi_a), v / (semi_b * semi_b)) / q;
        cov = std::clamp(0.5 - (q - 1.0) / grad, 0.0, 1.0);
      }
      comp.add(static_cast<std::size_t>(r), static_cast<std::size_t>(c), opacity * cov);
    }
  }
}

RealImage2D procedural(const ProceduralParams& p, std::size_t height, std::size_t width,
                       Rng& rng) {
  RealImage2D canvas(height, width, 0.0);
  Compositor comp(canvas);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uniform = [&](double a, double b) { return a + (b - a) * unit(rng); };

  const double w = static_cast<double>(width), h = static_cast<double>(height);
  const double min_side = std::min(w, h);
  const auto target = static_cast<std::size_t>(p.coverage * static_cast<double>(canvas.size()));

  constexpr std::size_t kMaxShapes = 1'000'000;
  for (std::size_t shape = 0; comp.covered() < target; ++shape) {
    if (shape == kMaxShapes) throw Error("procedural generation did not reach target coverage");
    const double opacity = uniform(p.opacity_min, p.opacity_max);
    if (shape % 2 == 0) {
      const double ax = uniform(0.0, w), ay = uniform(0.0, h);
      const double length = uniform(0.1, 0.5) * min_side;
      const double theta = uniform(0.0, kPi);
      draw_line(comp, height, width, ax, ay, ax + length * std::cos(theta),
                ay + length * std::sin(theta), uniform(p.line_width_min, p.line_width_max), opacity);
    } else {
      const double semi_a = uniform(p.ellipse_axis_min, p.ellipse_axis_max) / 2.0;
      const double semi_b = uniform(p.ellipse_axis_min, p.ellipse_axis_max) / 2.0;
      draw_ellipse(comp, height, width, uniform(0.0, w), uniform(0.0, h), semi_a, semi_b,
                   uniform(0.0, kPi), opacity);
    }
  }
  for (auto& v : canvas) v = std::min(v, 1.0);
  return canvas;
}

// --- noise ----------------------------------------------------------------------

RealImage2D white_noise(std::size_t height, std::size_t width, Rng& rng) {
  RealImage2D out(height, width);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (auto& v : out) v = normal(rng);
  return out;
}

// 2D simplex noise over a seeded permutation table, output roughly in [-1, 1].
class SimplexNoise {
 public:
  explicit SimplexNoise(Rng& rng) {
    std::array<std::uint8_t, 256> base{};
    std::iota(base.begin(), base.end(), std::uint8_t{0});
    std::shuffle(base.begin(), base.end(), rng);
    for (std::size_t i = 0; i < perm_.size(); ++i) perm_[i] = base[i & 255];
  }

  [[nodiscard]] double operator()(double x, double y) const noexcept {
    static constexpr double kF2 = 0.36602540378443864676;  // (sqrt(3) - 1) / 2
    static constexpr double kG2 = 0.21132486540518711775;  // (3 - sqrt(3)) / 6
    const double s = (x + y) * kF2;
    const double i = std::floor(x + s);
    const double j = std::floor(y + s);
    const double t = (i + j) * kG2;
    const double x0 = x - (i - t), y0 = y - (j - t);
    const int i1 = x0 > y0 ? 1 : 0;
    const int j1 = 1 - i1;
    const double x1 = x0 - i1 + kG2, y1 = y0 - j1 + kG2;
    const double x2 = x0 - 1.0 + 2.0 * kG2, y2 = y0 - 1.0 + 2.0 * kG2;
    const int ii = static_cast<int>(static_cast<long long>(i) & 255);
    const int jj = static_cast<int>(static_cast<long long>(j) & 255);
    return 70.0 * (corner(ii, jj, x0, y0) + corner(ii + i1, jj + j1, x1, y1) +
                   corner(ii + 1, jj + 1, x2, y2));
  }

 private:
  [[nodiscard]] double corner(int i, int j, double x, double y) const noexcept {
    double t = 0.5 - x * x - y * y;
    if (t < 0.0) return 0.0;
    static constexpr std::array<std::array<double, 2>, 12> kGrad = {{{1, 1},
                                                                     {-1, 1},
                                                                     {1, -1},
                                                                     {-1, -1},
                                                                     {1, 0},
                                                                     {-1, 0},
                                                                     {1, 0},
                                                                     {-1, 0},
                                                                     {0, 1},
                                                                     {0, -1},
                                                                     {0, 1},
                                                                     {0, -1}}};
    const auto& g = kGrad[perm_[static_cast<std::size_t>(i + perm_[static_cast<std::size_t>(j)])] % 12];
    t *= t;
    return t * t * (g[0] * x + g[1] * y);
  }

  std::array<int, 512> perm_{};
};

RealImage2D simplex_noise(const SimplexNoiseParams& p, std::size_t height, std::size_t width,
                          Rng& rng) {
  RealImage2D out(height, width, 0.0);
  std::uniform_real_distribution<double> offset(0.0, 256.0);
  // Simplex kernels carry energy out to about two cycles per lattice cell, so
  // the finest lattice is 2 * min_wavelength to keep that octave below 1 / min_wavelength.
  double wavelength = 2.0 * p.min_wavelength * std::pow(2.0, p.octaves - 1);
  double amplitude = 1.0;
  for (int octave = 0; octave < p.octaves; ++octave) {
    const SimplexNoise noise(rng);
    const double ox = offset(rng), oy = offset(rng);
    for (std::size_t r = 0; r < height; ++r) {
      for (std::size_t c = 0; c < width; ++c) {
        out(r, c) += amplitude * noise(static_cast<double>(c) / wavelength + ox,
                                       static_cast<double>(r) / wavelength + oy);
      }
    }
    wavelength /= 2.0;
    amplitude *= p.persistence;
  }
  return out;
}

std::size_t wrap_index(long i, std::size_t n) {
  long m = i % static_cast<long>(n);
  if (m < 0) m += static_cast<long>(n);
  return static_cast<std::size_t>(m);
}

std::size_t reflect_index(long i, std::size_t n) {
  const long period = 2 * static_cast<long>(n);
  long m = i % period;
  if (m < 0) m += period;
  return static_cast<std::size_t>(m < static_cast<long>(n) ? m : period - 1 - m);
}

}  // namespace

void ObjectClass::validate() const { std::visit(Validator{}, params); }

ObjectClass ObjectClass::with_defaults(ObjectKind kind) {
  switch (kind) {
    case ObjectKind::DeadLeaves: return {DeadLeavesParams{}};
    case ObjectKind::Procedural: return {ProceduralParams{}};
    case ObjectKind::WhiteNoise: return {WhiteNoiseParams{}};
    case ObjectKind::BlurredWhiteNoise: return {BlurredWhiteNoiseParams{}};
    case ObjectKind::SimplexNoise: return {SimplexNoiseParams{}};
  }
  throw ValidationError("unknown object kind");
}

std::string_view short_name(ObjectKind kind) noexcept {
  switch (kind) {
    case ObjectKind::DeadLeaves: return "dl";
    case ObjectKind::Procedural: return "pr";
    case ObjectKind::WhiteNoise: return "wn";
    case ObjectKind::BlurredWhiteNoise: return "bwn";
    case ObjectKind::SimplexNoise: return "sn";
  }
  return "?";
}

ObjectKind parse_kind(std::string_view name) {
  for (auto kind : {ObjectKind::DeadLeaves, ObjectKind::Procedural, ObjectKind::WhiteNoise,
                    ObjectKind::BlurredWhiteNoise, ObjectKind::SimplexNoise}) {
    if (short_name(kind) == name) return kind;
  }
  throw ValidationError("unknown object class '" + std::string(name) +
                        "' (expected dl, pr, wn, bwn or sn)");
}

RealImage2D gaussian_blur(const RealImage2D& img, double sigma, double truncate, BlurBoundary boundary) {
  if (!(sigma > 0.0) || !(truncate > 0.0)) throw ValidationError("gaussian_blur: sigma and truncate must be > 0");
  const auto radius = static_cast<long>(std::ceil(truncate * sigma));
  std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
  for (long k = -radius; k <= radius; ++k) {
    kernel[static_cast<std::size_t>(k + radius)] =
        std::exp(-0.5 * static_cast<double>(k * k) / (sigma * sigma));
  }
  const double norm = std::accumulate(kernel.begin(), kernel.end(), 0.0);
  for (auto& k : kernel) k /= norm;

  const auto index = boundary == BlurBoundary::Wrap ? wrap_index : reflect_index;
  const std::size_t h = img.height(), w = img.width();
  RealImage2D tmp(h, w), out(h, w);
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < w; ++c) {
      double acc = 0.0;
      for (long k = -radius; k <= radius; ++k) {
        acc += kernel[static_cast<std::size_t>(k + radius)] *
               img(r, index(static_cast<long>(c) + k, w));
      }
      tmp(r, c) = acc;
    }
  }
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < w; ++c) {
      double acc = 0.0;
      for (long k = -radius; k <= radius; ++k) {
        acc += kernel[static_cast<std::size_t>(k + radius)] *
               tmp(index(static_cast<long>(r) + k, h), c);
      }
      out(r, c) = acc;
    }
  }
  return out;
}

RealImage2D generate_scalar_texture(const ObjectClass& object_class, std::size_t height,
                                    std::size_t width, RandomSeed seed) {
  object_class.validate();
  if (height < 64 || width < 64) {
    throw ValidationError("texture size must be at least 64x64, got " + std::to_string(height) +
                          "x" + std::to_string(width));
  }
  Rng rng = make_rng(derive_stream(seed, "texture", static_cast<std::uint64_t>(object_class.kind())));
  return std::visit(
      [&](const auto& p) -> RealImage2D {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, DeadLeavesParams>) {
          return dead_leaves(p, height, width, rng);
        } else if constexpr (std::is_same_v<P, ProceduralParams>) {
          return procedural(p, height, width, rng);
        } else if constexpr (std::is_same_v<P, WhiteNoiseParams>) {
          return white_noise(height, width, rng);
        } else if constexpr (std::is_same_v<P, BlurredWhiteNoiseParams>) {
          return gaussian_blur(white_noise(height, width, rng), p.sigma, p.truncate, BlurBoundary::Wrap);
        } else {
          return simplex_noise(p, height, width, rng);
        }
      },
      object_class.params);
}

SyntheticObject to_complex_object(const RealImage2D& texture, AmplitudeRange amp_range,
                                  RandomSeed seed, ObjectClass object_class) {
  if (!(amp_range.low >= 0.0 && amp_range.high <= 1.0 && amp_range.low < amp_range.high)) {
    throw ValidationError("amplitude range must satisfy 0 <= low < high <= 1");
  }
  require_finite(texture, "texture");
  const auto [min_it, max_it] = std::minmax_element(texture.begin(), texture.end());
  const double lo = *min_it, span = *max_it - *min_it;

  ComplexImage2D field(texture.height(), texture.width());
  const double mid = 0.5 * (amp_range.low + amp_range.high);
  const double amp_span = amp_range.high - amp_range.low;
  for (std::size_t i = 0; i < texture.size(); ++i) {
    if (span <= 0.0) {
      field.values()[i] = Complex(mid, 0.0);
      continue;
    }
    const double u = std::clamp((texture.values()[i] - lo) / span, 0.0, 1.0);
    const double phase = std::clamp(-kPi + 2.0 * kPi * u, -kPi, kPi);
    const double amp = std::clamp(amp_range.low + amp_span * u, amp_range.low, amp_range.high);
    field.values()[i] = std::polar(amp, phase);
  }
  return SyntheticObject{std::move(field), std::move(object_class), seed};
}

SyntheticObject generate_object(const ObjectClass& object_class, std::size_t height,
                                std::size_t width, RandomSeed seed, AmplitudeRange amp_range) {
  return to_complex_object(generate_scalar_texture(object_class, height, width, seed), amp_range,
                           seed, object_class);
}

}  // namespace ptychoforge::objgen
