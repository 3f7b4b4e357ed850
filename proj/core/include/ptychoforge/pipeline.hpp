#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ptychoforge/error.hpp"
#include "ptychoforge/forward.hpp"
#include "ptychoforge/metrics.hpp"
#include "ptychoforge/objgen.hpp"
#include "ptychoforge/recon.hpp"
#include "ptychoforge/scan.hpp"

namespace ptychoforge::pipeline {

/// A pipeline stage failed after validation passed.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& what)
      : Error("stage '" + stage + "' failed: " + what), stage_(std::move(stage)) {}
  [[nodiscard]] const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

struct ObjectStage {
  objgen::ObjectClass object_class = objgen::ObjectClass::with_defaults(objgen::ObjectKind::DeadLeaves);
  std::size_t height = 300;
  std::size_t width = 300;
  std::optional<std::filesystem::path> file;  // load instead of generating
};

struct ProbeStage {
  std::optional<std::filesystem::path> file;
  forward::SyntheticProbeParams synthetic;  // used when file is absent
};

struct EvaluationStage {
  metrics::PipelineOptions options;
  double mask_fraction = 0.5;  // FRC region: where illumination >= fraction * max
};

/// Declarative description of one generate/simulate/group/reconstruct/evaluate run.
struct PipelineSpec {
  std::uint64_t seed = 0;
  ObjectStage object;
  ProbeStage probe;
  scan::ScanSpec scan;
  forward::SimulationOptions simulate;
  std::optional<scan::GroupingParams> grouping;  // d_min = d_max = 0: default range
  recon::ReconConfig recon;
  EvaluationStage evaluation;
  int threads = 0;  // 0: leave the OpenMP default

  /// Checks every stage's inputs, including that the probe file can be read
  /// and every scan footprint lies inside the object. Throws ValidationError.
  void validate() const;
};

/// Parses a JSON spec. A run report (with a "spec" member) is accepted too,
/// which replays the recorded run. Unknown keys are rejected.
PipelineSpec parse_spec(const std::string& json_text);
PipelineSpec load_spec(const std::filesystem::path& path);
std::string spec_to_json(const PipelineSpec& spec);

/// The scan actually used: a zero extent is filled with a raster covering
/// every in-bounds probe footprint, starting at probe_size / 2.
scan::ScanSpec resolved_scan(const PipelineSpec& spec, std::size_t probe_size);

struct StageSeeds {
  RandomSeed object, scan, simulate, group, recon;
};
StageSeeds stage_seeds(std::uint64_t root);

struct PipelineResult {
  metrics::FrcResult frc;
  std::vector<double> error_history;
  std::string report_json;
};

/// Writes object.zip, dataset.zip, reconstruction.zip, frc.json and
/// report.json into out_dir. Validation happens before any file is written.
PipelineResult run_pipeline(const PipelineSpec& spec, const std::filesystem::path& out_dir);

/// FRC of the reconstruction against the truth, restricted to the
/// well-illuminated bounding box of the reconstruction.
metrics::FrcResult evaluate_reconstruction(const ComplexImage2D& truth, const recon::ReconResult& result,
                                           const EvaluationStage& evaluation);

std::string frc_to_json(const metrics::FrcResult& frc);

struct BenchRow {
  std::string name;
  std::size_t images = 0;
  std::size_t iterations = 0;
  std::size_t repetitions = 0;
  double total_mean = 0.0;  // seconds
  double total_std = 0.0;
  double per_iteration_mean = 0.0;
  double per_iteration_std = 0.0;
};

/// Times reconstruct() over `repetitions` runs (sample standard deviation).
BenchRow bench_recon(const std::string& name, const forward::DiffractionStack& stack,
                     const forward::Probe& probe, std::size_t iterations, std::size_t repetitions = 5);
std::string bench_csv_header();
std::string bench_csv_row(const BenchRow& row);

/// Caps OpenMP workers; n <= 0 keeps the current setting.
void set_thread_count(int n);

}  // namespace ptychoforge::pipeline
