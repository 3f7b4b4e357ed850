#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ptychoforge/archive.hpp"
#include "ptychoforge/forward.hpp"
#include "ptychoforge/image.hpp"
#include "ptychoforge/random.hpp"
#include "ptychoforge/recon.hpp"
#include "ptychoforge/scan.hpp"

namespace ptychoforge::io {

inline constexpr const char* kFormatVersion = "ptychoforge/1";

/// format_version missing or not recognized.
class VersionError : public FormatError {
 public:
  using FormatError::FormatError;
};

/// Shapes that contradict each other or the manifest.
class DimensionError : public FormatError {
 public:
  using FormatError::FormatError;
};

/// Required members or manifest fields absent, or the wrong file kind.
class SchemaError : public FormatError {
 public:
  using FormatError::FormatError;
};

/// Array contents violate the invariants of their type (NaN, negative counts).
class InvariantError : public FormatError {
 public:
  using FormatError::FormatError;
};

struct SeedRecord {
  std::string label;
  RandomSeed seed;

  bool operator==(const SeedRecord&) const = default;
};

struct Manifest {
  std::string format_version = kFormatVersion;
  std::string instrument;
  std::optional<double> photon_target;
  std::size_t crop_size = 0;  // filled from the diffraction shape on write when 0
  bool counts_normalized = false;
  std::size_t object_height = 0;  // object canvas the scan positions refer to (0: unknown)
  std::size_t object_width = 0;
  std::vector<SeedRecord> seed_lineage;

  bool operator==(const Manifest&) const = default;
};

struct DatasetBundle {
  forward::DiffractionStack diffraction;
  std::optional<forward::Probe> probe;
  std::optional<ComplexImage2D> ground_truth_object;
  std::optional<scan::GroupSet> groups;
  Manifest manifest;
};

// Member layout: diffraction (N x H x W, f32), xcoords / ycoords (N, f64),
// probe (H x W, c64), object_truth (c128, optional), group_refs (G, i64) and
// group_channels (G x 4, i64) (optional), manifest.json. Arrays are stored at
// these dtypes, so values round-trip exactly when they are representable in them.
void write_bundle(const DatasetBundle& bundle, const std::filesystem::path& path);
std::vector<std::uint8_t> encode_bundle(const DatasetBundle& bundle);
DatasetBundle read_bundle(const std::filesystem::path& path);
DatasetBundle decode_bundle(const std::vector<std::uint8_t>& bytes);

struct ObjectFile {
  ComplexImage2D field;
  std::string object_class;  // short class name, or empty when unknown
  RandomSeed seed;
};
void write_object_file(const ObjectFile& object, const std::filesystem::path& path);
ObjectFile read_object_file(const std::filesystem::path& path);

void write_probe_file(const forward::Probe& probe, const std::filesystem::path& path);
forward::Probe read_probe_file(const std::filesystem::path& path);

void write_recon_file(const recon::ReconResult& result, const std::filesystem::path& path);
recon::ReconResult read_recon_file(const std::filesystem::path& path);

/// Manifest "kind" of an archive: dataset, object, probe or reconstruction.
std::string archive_kind(const std::filesystem::path& path);

/// Human-readable manifest dump plus the outcome of every load-time check.
/// Never throws for damaged files; the failure is part of the report.
struct InspectReport {
  std::string text;
  bool ok = false;
};
InspectReport inspect(const std::filesystem::path& path);

struct PreprocessResult {
  forward::DiffractionStack stack;
  std::vector<std::size_t> flushed;  // per pattern
};

/// Zeroes pixels >= saturation_threshold and crops crop x crop around (H/2, W/2).
PreprocessResult preprocess(const forward::DiffractionStack& stack, double saturation_threshold,
                            std::size_t crop);

}  // namespace ptychoforge::io
