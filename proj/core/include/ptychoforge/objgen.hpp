#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <variant>

#include "ptychoforge/image.hpp"
#include "ptychoforge/random.hpp"

namespace ptychoforge::objgen {

// Occluding disks drawn until every pixel is covered. r_max <= 0 means
// min(height, width) / 4.
struct DeadLeavesParams {
  double r_min = 3.0;
  double r_max = 0.0;
  double exponent = 3.0;  // radius density ~ r^-exponent
};

// Anti-aliased lines and filled ellipses on an empty background.
struct ProceduralParams {
  double coverage = 0.6;
  double line_width_min = 1.0;
  double line_width_max = 3.0;
  double ellipse_axis_min = 4.0;
  double ellipse_axis_max = 40.0;
  double opacity_min = 0.3;
  double opacity_max = 1.0;
};

struct WhiteNoiseParams {};

struct BlurredWhiteNoiseParams {
  double sigma = 3.0;
  double truncate = 4.0;  // kernel half-width in units of sigma
};

// Multi-octave simplex noise. min_wavelength is the shortest period the
// finest octave contains; each coarser octave doubles it and multiplies the
// amplitude by 1 / persistence.
struct SimplexNoiseParams {
  int octaves = 3;
  double min_wavelength = 13.0;
  double persistence = 0.5;
};

using ObjectParams = std::variant<DeadLeavesParams, ProceduralParams, WhiteNoiseParams,
                                  BlurredWhiteNoiseParams, SimplexNoiseParams>;

enum class ObjectKind { DeadLeaves, Procedural, WhiteNoise, BlurredWhiteNoise, SimplexNoise };

struct ObjectClass {
  ObjectParams params;

  [[nodiscard]] ObjectKind kind() const noexcept { return static_cast<ObjectKind>(params.index()); }

  /// Throws ValidationError naming the offending field.
  void validate() const;

  static ObjectClass with_defaults(ObjectKind kind);
};

/// Short CLI name ("dl", "pr", "wn", "bwn", "sn").
std::string_view short_name(ObjectKind kind) noexcept;
ObjectKind parse_kind(std::string_view name);

struct SyntheticObject {
  ComplexImage2D field;
  ObjectClass object_class;
  RandomSeed seed;
};

/// Real-valued texture in arbitrary units. Height and width must be >= 64.
RealImage2D generate_scalar_texture(const ObjectClass& object_class, std::size_t height,
                                    std::size_t width, RandomSeed seed);

struct AmplitudeRange {
  double low = 0.7;
  double high = 1.0;
};

/// Maps a texture to a complex object: phase spans [-pi, pi] and amplitude
/// spans [low, high], both as increasing affine functions of the texture.
SyntheticObject to_complex_object(const RealImage2D& texture, AmplitudeRange amp_range,
                                  RandomSeed seed, ObjectClass object_class = {});

/// generate_scalar_texture followed by to_complex_object with default range.
SyntheticObject generate_object(const ObjectClass& object_class, std::size_t height,
                                std::size_t width, RandomSeed seed,
                                AmplitudeRange amp_range = {});

enum class BlurBoundary { Reflect, Wrap };

/// Separable Gaussian blur, kernel truncated at truncate*sigma. BWN uses the
/// periodic boundary so the field stays stationary on the torus.
RealImage2D gaussian_blur(const RealImage2D& img, double sigma, double truncate = 4.0,
                          BlurBoundary boundary = BlurBoundary::Reflect);

}  // namespace ptychoforge::objgen
