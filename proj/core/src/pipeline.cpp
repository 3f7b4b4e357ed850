#include "ptychoforge/pipeline.hpp"

#include <omp.h>

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <initializer_list>
#include <iterator>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "ptychoforge/archive.hpp"
#include "ptychoforge/io.hpp"

namespace ptychoforge::pipeline {

namespace {

using nlohmann::json;

void check_keys(const json& j, std::initializer_list<std::string_view> allowed, const std::string& section) {
  if (!j.is_object()) throw ValidationError("'" + section + "' must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    bool known = false;
    for (auto a : allowed) known = known || key == a;
    if (!known) throw ValidationError("unknown key '" + section + "." + key + "'");
  }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key) && !j[key].is_null()) out = j[key].get<T>();
}

objgen::ObjectClass parse_object_class(const std::string& name, const json& params) {
  auto oc = objgen::ObjectClass::with_defaults(objgen::parse_kind(name));
  std::visit(
      [&](auto& p) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, objgen::DeadLeavesParams>) {
          check_keys(params, {"r_min", "r_max", "exponent"}, "object.params");
          read(params, "r_min", p.r_min);
          read(params, "r_max", p.r_max);
          read(params, "exponent", p.exponent);
        } else if constexpr (std::is_same_v<P, objgen::ProceduralParams>) {
          check_keys(params,
                     {"coverage", "line_width_min", "line_width_max", "ellipse_axis_min", "ellipse_axis_max",
                      "opacity_min", "opacity_max"},
                     "object.params");
          read(params, "coverage", p.coverage);
          read(params, "line_width_min", p.line_width_min);
          read(params, "line_width_max", p.line_width_max);
          read(params, "ellipse_axis_min", p.ellipse_axis_min);
          read(params, "ellipse_axis_max", p.ellipse_axis_max);
          read(params, "opacity_min", p.opacity_min);
          read(params, "opacity_max", p.opacity_max);
        } else if constexpr (std::is_same_v<P, objgen::WhiteNoiseParams>) {
          check_keys(params, {}, "object.params");
        } else if constexpr (std::is_same_v<P, objgen::BlurredWhiteNoiseParams>) {
          check_keys(params, {"sigma", "truncate"}, "object.params");
          read(params, "sigma", p.sigma);
          read(params, "truncate", p.truncate);
        } else {
          check_keys(params, {"octaves", "min_wavelength", "persistence"}, "object.params");
          read(params, "octaves", p.octaves);
          read(params, "min_wavelength", p.min_wavelength);
          read(params, "persistence", p.persistence);
        }
      },
      oc.params);
  return oc;
}

json object_params_json(const objgen::ObjectClass& oc) {
  return std::visit(
      [](const auto& p) -> json {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, objgen::DeadLeavesParams>) {
          return {{"r_min", p.r_min}, {"r_max", p.r_max}, {"exponent", p.exponent}};
        } else if constexpr (std::is_same_v<P, objgen::ProceduralParams>) {
          return {{"coverage", p.coverage},
                  {"line_width_min", p.line_width_min},
                  {"line_width_max", p.line_width_max},
                  {"ellipse_axis_min", p.ellipse_axis_min},
                  {"ellipse_axis_max", p.ellipse_axis_max},
                  {"opacity_min", p.opacity_min},
                  {"opacity_max", p.opacity_max}};
        } else if constexpr (std::is_same_v<P, objgen::WhiteNoiseParams>) {
          return json::object();
        } else if constexpr (std::is_same_v<P, objgen::BlurredWhiteNoiseParams>) {
          return {{"sigma", p.sigma}, {"truncate", p.truncate}};
        } else {
          return {{"octaves", p.octaves}, {"min_wavelength", p.min_wavelength}, {"persistence", p.persistence}};
        }
      },
      oc.params);
}

json seed_json(const RandomSeed& s) { return {{"seed", s.seed}, {"stream", s.stream_index}}; }

const char* auc_mode_name(metrics::AucMode m) {
  return m == metrics::AucMode::Nyquist ? "nyquist" : "half-correlation";
}

metrics::AucMode parse_auc_mode(const std::string& s) {
  if (s == "nyquist") return metrics::AucMode::Nyquist;
  if (s == "half-correlation") return metrics::AucMode::HalfCorrelation;
  throw ValidationError("unknown auc_mode '" + s + "' (nyquist, half-correlation)");
}

PipelineSpec parse_spec_json(const json& root) {
  check_keys(root, {"seed", "threads", "object", "probe", "scan", "simulate", "group", "recon", "evaluation"}, "spec");
  PipelineSpec spec;
  read(root, "seed", spec.seed);
  read(root, "threads", spec.threads);

  if (root.contains("object")) {
    const auto& o = root["object"];
    check_keys(o, {"class", "height", "width", "file", "params"}, "object");
    spec.object.object_class =
        parse_object_class(o.value("class", std::string("dl")), o.value("params", json::object()));
    read(o, "height", spec.object.height);
    read(o, "width", spec.object.width);
    if (o.contains("file") && !o["file"].is_null()) spec.object.file = o["file"].get<std::string>();
  }
  if (root.contains("probe")) {
    const auto& p = root["probe"];
    check_keys(p, {"file", "size", "diameter", "edge_width", "defocus", "coma"}, "probe");
    if (p.contains("file") && !p["file"].is_null()) spec.probe.file = p["file"].get<std::string>();
    read(p, "size", spec.probe.synthetic.size);
    read(p, "diameter", spec.probe.synthetic.diameter);
    read(p, "edge_width", spec.probe.synthetic.edge_width);
    read(p, "defocus", spec.probe.synthetic.defocus);
    read(p, "coma", spec.probe.synthetic.coma);
  }
  spec.scan.pattern = scan::Pattern::Isotropic;
  spec.scan.step_x = spec.scan.step_y = 8.0;
  if (root.contains("scan")) {
    const auto& s = root["scan"];
    check_keys(s,
               {"pattern", "extent_x", "extent_y", "step_x", "step_y", "jitter", "origin_x", "origin_y",
                "spiral_points"},
               "scan");
    if (s.contains("pattern")) spec.scan.pattern = scan::parse_pattern(s["pattern"].get<std::string>());
    read(s, "extent_x", spec.scan.extent_x);
    read(s, "extent_y", spec.scan.extent_y);
    read(s, "step_x", spec.scan.step_x);
    spec.scan.step_y = spec.scan.step_x;
    read(s, "step_y", spec.scan.step_y);
    read(s, "jitter", spec.scan.jitter_sigma);
    read(s, "origin_x", spec.scan.origin_x);
    read(s, "origin_y", spec.scan.origin_y);
    read(s, "spiral_points", spec.scan.spiral_points);
  }
  if (root.contains("simulate")) {
    const auto& s = root["simulate"];
    check_keys(s, {"photons", "noiseless"}, "simulate");
    if (s.contains("photons")) {
      const auto& ph = s["photons"];
      if (ph.is_number()) {
        spec.simulate.photons_low = spec.simulate.photons_high = ph.get<double>();
      } else {
        const auto range = ph.get<std::vector<double>>();
        if (range.size() != 2) throw ValidationError("simulate.photons must be a number or [low, high]");
        spec.simulate.photons_low = range[0];
        spec.simulate.photons_high = range[1];
      }
    }
    read(s, "noiseless", spec.simulate.noiseless);
  }
  if (root.contains("group") && !root["group"].is_null()) {
    const auto& g = root["group"];
    check_keys(g, {"d_min", "d_max", "rounds", "top_n", "policy"}, "group");
    scan::GroupingParams gp;
    read(g, "d_min", gp.d_min);
    read(g, "d_max", gp.d_max);
    read(g, "rounds", gp.groups_per_reference);
    read(g, "top_n", gp.top_n);
    const auto policy = g.value("policy", std::string("skip"));
    if (policy == "skip") {
      gp.policy = scan::EmptyQuadrantPolicy::Skip;
    } else if (policy == "fallback") {
      gp.policy = scan::EmptyQuadrantPolicy::Fallback;
    } else {
      throw ValidationError("unknown group.policy '" + policy + "' (skip, fallback)");
    }
    spec.grouping = gp;
  }
  if (root.contains("recon")) {
    const auto& r = root["recon"];
    check_keys(r, {"iterations", "alpha", "beta", "update_probe"}, "recon");
    read(r, "iterations", spec.recon.iterations);
    read(r, "alpha", spec.recon.object_step);
    read(r, "beta", spec.recon.probe_step);
    read(r, "update_probe", spec.recon.update_probe);
  }
  if (root.contains("evaluation")) {
    const auto& e = root["evaluation"];
    check_keys(e, {"upsample", "edge_fraction", "mask_fraction", "auc_mode"}, "evaluation");
    read(e, "upsample", spec.evaluation.options.upsample);
    read(e, "edge_fraction", spec.evaluation.options.edge_fraction);
    read(e, "mask_fraction", spec.evaluation.mask_fraction);
    if (e.contains("auc_mode")) spec.evaluation.options.mode = parse_auc_mode(e["auc_mode"].get<std::string>());
  }
  return spec;
}

json spec_json(const PipelineSpec& spec) {
  json j;
  j["seed"] = spec.seed;
  j["threads"] = spec.threads;
  j["object"] = {{"class", std::string(objgen::short_name(spec.object.object_class.kind()))},
                 {"height", spec.object.height},
                 {"width", spec.object.width},
                 {"params", object_params_json(spec.object.object_class)}};
  if (spec.object.file) j["object"]["file"] = spec.object.file->string();
  const auto& sp = spec.probe.synthetic;
  j["probe"] = {{"size", sp.size},
                {"diameter", sp.diameter},
                {"edge_width", sp.edge_width},
                {"defocus", sp.defocus},
                {"coma", sp.coma}};
  if (spec.probe.file) j["probe"]["file"] = spec.probe.file->string();
  const auto& s = spec.scan;
  j["scan"] = {{"pattern", std::string(scan::pattern_name(s.pattern))},
               {"extent_x", s.extent_x},
               {"extent_y", s.extent_y},
               {"step_x", s.step_x},
               {"step_y", s.step_y},
               {"jitter", s.jitter_sigma},
               {"origin_x", s.origin_x},
               {"origin_y", s.origin_y},
               {"spiral_points", s.spiral_points}};
  j["simulate"] = {{"photons", {spec.simulate.photons_low, spec.simulate.photons_high}},
                   {"noiseless", spec.simulate.noiseless}};
  if (spec.grouping) {
    const auto& g = *spec.grouping;
    j["group"] = {{"d_min", g.d_min},
                  {"d_max", g.d_max},
                  {"rounds", g.groups_per_reference},
                  {"top_n", g.top_n},
                  {"policy", g.policy == scan::EmptyQuadrantPolicy::Skip ? "skip" : "fallback"}};
  }
  j["recon"] = {{"iterations", spec.recon.iterations},
                {"alpha", spec.recon.object_step},
                {"beta", spec.recon.probe_step},
                {"update_probe", spec.recon.update_probe}};
  j["evaluation"] = {{"upsample", spec.evaluation.options.upsample},
                     {"edge_fraction", spec.evaluation.options.edge_fraction},
                     {"mask_fraction", spec.evaluation.mask_fraction},
                     {"auc_mode", auc_mode_name(spec.evaluation.options.mode)}};
  return j;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error("cannot open '" + path.string() + "' for writing");
  os << text;
}

std::uint32_t file_crc(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  const std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
  return io::crc32_of(bytes);
}

template <typename F>
auto run_stage(const char* name, json& timings, F&& body) {
  const auto start = std::chrono::steady_clock::now();
  try {
    if constexpr (std::is_void_v<decltype(body())>) {
      body();
      timings[name] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    } else {
      auto out = body();
      timings[name] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      return out;
    }
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

}  // namespace

PipelineSpec parse_spec(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("spec is not valid JSON: ") + e.what());
  }
  try {
    if (root.is_object() && root.contains("spec") && root.contains("seeds")) return parse_spec_json(root["spec"]);
    return parse_spec_json(root);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed spec: ") + e.what());
  } catch (const Error& e) {
    throw ValidationError(e.what());
  }
}

PipelineSpec load_spec(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ValidationError("cannot read spec file '" + path.string() + "'");
  return parse_spec(std::string(std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()));
}

std::string spec_to_json(const PipelineSpec& spec) { return spec_json(spec).dump(2) + "\n"; }

scan::ScanSpec resolved_scan(const PipelineSpec& spec, std::size_t probe_size) {
  scan::ScanSpec s = spec.scan;
  const double half = static_cast<double>(probe_size / 2);
  if (s.extent_x <= 0.0 && s.extent_y <= 0.0) {
    s.origin_x = half;
    s.origin_y = half;
    s.extent_x = static_cast<double>(spec.object.width) - static_cast<double>(probe_size);
    s.extent_y = static_cast<double>(spec.object.height) - static_cast<double>(probe_size);
  }
  return s;
}

StageSeeds stage_seeds(std::uint64_t root) {
  const RandomSeed r{root, 0};
  return {derive_stream(r, "object", 0), derive_stream(r, "scan", 0), derive_stream(r, "simulate", 0),
          derive_stream(r, "group", 0), derive_stream(r, "recon", 0)};
}

void PipelineSpec::validate() const {
  if (threads < 0) throw ValidationError("threads must be >= 0");
  if (object.file) {
    if (!std::filesystem::is_regular_file(*object.file)) {
      throw ValidationError("object file '" + object.file->string() + "' does not exist");
    }
  } else {
    object.object_class.validate();
    if (object.height < 64 || object.width < 64) throw ValidationError("object.height and object.width must be >= 64");
  }
  std::size_t probe_size = 0;
  if (probe.file) {
    if (!std::filesystem::is_regular_file(*probe.file)) {
      throw ValidationError("probe file '" + probe.file->string() + "' does not exist");
    }
    try {
      const auto p = io::read_probe_file(*probe.file);
      if (p.field.height() != p.field.width()) throw ValidationError("probe must be square");
      probe_size = p.field.height();
    } catch (const ValidationError&) {
      throw;
    } catch (const std::exception& e) {
      throw ValidationError("probe file '" + probe.file->string() + "' is unreadable: " + e.what());
    }
  } else {
    if (probe.synthetic.size < 2) throw ValidationError("probe.size must be >= 2");
    if (!(probe.synthetic.diameter > 0.0)) throw ValidationError("probe.diameter must be > 0");
    probe_size = probe.synthetic.size;
  }
  if (!(simulate.photons_low > 0.0) || !(simulate.photons_high >= simulate.photons_low) ||
      !std::isfinite(simulate.photons_high)) {
    throw ValidationError("simulate.photons must satisfy 0 < low <= high");
  }
  auto rc = recon;
  rc.object_height = object.height;
  rc.object_width = object.width;
  rc.validate();
  if (evaluation.options.upsample < 1) throw ValidationError("evaluation.upsample must be >= 1");
  if (!(evaluation.options.edge_fraction > 0.0 && evaluation.options.edge_fraction < 0.5)) {
    throw ValidationError("evaluation.edge_fraction must lie in (0, 0.5)");
  }
  if (!(evaluation.mask_fraction > 0.0 && evaluation.mask_fraction <= 1.0)) {
    throw ValidationError("evaluation.mask_fraction must lie in (0, 1]");
  }
  if (grouping && grouping->d_max > 0.0 && !(grouping->d_min < grouping->d_max)) {
    throw ValidationError("group.d_min must be < group.d_max");
  }
  // The scan is cheap to build; checking every footprint here keeps the
  // simulate stage from failing halfway through.
  if (!object.file) {
    const auto plan = scan::make_scan(resolved_scan(*this, probe_size), stage_seeds(seed).scan);
    if (plan.size() == 0) throw ValidationError("scan produces no positions");
    for (std::size_t i = 0; i < plan.size(); ++i) {
      if (!forward::patch_in_bounds(object.height, object.width, plan.positions[i], probe_size)) {
        throw ValidationError("scan position " + std::to_string(i) + " (" +
                              std::to_string(plan.positions[i].x) + ", " + std::to_string(plan.positions[i].y) +
                              ") puts the probe outside the object");
      }
    }
  }
}

metrics::FrcResult evaluate_reconstruction(const ComplexImage2D& truth, const recon::ReconResult& result,
                                           const EvaluationStage& evaluation) {
  require_same_shape(truth, result.object_estimate, "truth vs estimate");
  const auto region = recon::illuminated_region(result.illuminated_mask, evaluation.mask_fraction);
  const auto t = crop_image(truth, region.row0, region.col0, region.height, region.width);
  const auto e = crop_image(result.object_estimate, region.row0, region.col0, region.height, region.width);
  return metrics::frc_auc_pipeline(t, e, evaluation.options);
}

std::string frc_to_json(const metrics::FrcResult& frc) {
  json j;
  j["auc"] = frc.auc;
  j["crossing_half_bit"] = frc.crossing_half_bit ? json(*frc.crossing_half_bit) : json(nullptr);
  j["frequencies"] = frc.frequencies;
  j["correlation"] = frc.correlation;
  j["half_bit_threshold"] = frc.half_bit_threshold;
  j["ring_pixels"] = frc.ring_pixels;
  return j.dump(2) + "\n";
}

PipelineResult run_pipeline(const PipelineSpec& spec, const std::filesystem::path& out_dir) {
  spec.validate();
  set_thread_count(spec.threads);
  const auto seeds = stage_seeds(spec.seed);
  json timings = json::object();

  const auto object = run_stage("object", timings, [&] {
    if (spec.object.file) {
      auto f = io::read_object_file(*spec.object.file);
      return objgen::SyntheticObject{std::move(f.field), spec.object.object_class, f.seed};
    }
    return objgen::generate_object(spec.object.object_class, spec.object.height, spec.object.width, seeds.object);
  });
  const auto probe = run_stage("probe", timings, [&] {
    return spec.probe.file ? io::read_probe_file(*spec.probe.file) : forward::make_synthetic_probe(spec.probe.synthetic);
  });
  const auto plan = run_stage("scan", timings, [&] {
    auto s = spec;
    s.object.height = object.field.height();
    s.object.width = object.field.width();
    return scan::make_scan(resolved_scan(s, probe.field.height()), seeds.scan);
  });
  const auto stack = run_stage("simulate", timings, [&] {
    return forward::simulate_dataset(object.field, probe, plan, spec.simulate, seeds.simulate);
  });
  std::optional<scan::GroupSet> groups;
  if (spec.grouping) {
    groups = run_stage("group", timings, [&] {
      auto gp = *spec.grouping;
      if (gp.d_max <= 0.0) {
        const auto d = scan::default_grouping(plan);
        gp.d_min = d.d_min;
        gp.d_max = d.d_max;
      }
      return scan::group_quadrants(plan, gp, seeds.group);
    });
  }
  const auto result = run_stage("reconstruct", timings, [&] {
    auto config = spec.recon;
    config.seed = seeds.recon;
    config.object_height = object.field.height();
    config.object_width = object.field.width();
    return recon::reconstruct(stack, probe, config);
  });
  const auto frc = run_stage("evaluate", timings, [&] { return evaluate_reconstruction(object.field, result, spec.evaluation); });

  json artifacts = json::object();
  run_stage("write", timings, [&] {
    std::filesystem::create_directories(out_dir);
    io::write_object_file({object.field, std::string(objgen::short_name(object.object_class.kind())), object.seed},
                          out_dir / "object.zip");
    io::DatasetBundle bundle;
    bundle.diffraction = stack;
    bundle.probe = probe;
    bundle.ground_truth_object = object.field;
    bundle.groups = groups;
    bundle.manifest.instrument = probe.source_label;
    bundle.manifest.photon_target = stack.photon_target;
    bundle.manifest.object_height = object.field.height();
    bundle.manifest.object_width = object.field.width();
    bundle.manifest.seed_lineage = {{"object", seeds.object}, {"scan", seeds.scan}, {"simulate", seeds.simulate}};
    if (groups) bundle.manifest.seed_lineage.push_back({"group", seeds.group});
    io::write_bundle(bundle, out_dir / "dataset.zip");
    io::write_recon_file(result, out_dir / "reconstruction.zip");
    write_text(out_dir / "frc.json", frc_to_json(frc));
    for (const char* name : {"object.zip", "dataset.zip", "reconstruction.zip", "frc.json"}) {
      artifacts[name] = file_crc(out_dir / name);
    }
  });

  json report;
  report["spec"] = spec_json(spec);
  report["seeds"] = {{"root", spec.seed},
                     {"object", seed_json(seeds.object)},
                     {"scan", seed_json(seeds.scan)},
                     {"simulate", seed_json(seeds.simulate)},
                     {"group", seed_json(seeds.group)},
                     {"recon", seed_json(seeds.recon)},
                     {"per_position_noise", "derive_stream(simulate, \"pos\", i)"}};
  report["metrics"] = {{"auc", frc.auc},
                       {"crossing_half_bit", frc.crossing_half_bit ? json(*frc.crossing_half_bit) : json(nullptr)},
                       {"final_error", result.error_history.empty() ? 0.0 : result.error_history.back()},
                       {"positions", stack.size()},
                       {"groups", groups ? json(groups->size()) : json(nullptr)},
                       {"photon_target", stack.photon_target ? json(*stack.photon_target) : json(nullptr)}};
  report["timings_s"] = timings;
  report["artifacts_crc32"] = artifacts;
  PipelineResult out{frc, result.error_history, report.dump(2) + "\n"};
  write_text(out_dir / "report.json", out.report_json);
  return out;
}

BenchRow bench_recon(const std::string& name, const forward::DiffractionStack& stack, const forward::Probe& probe,
                     std::size_t iterations, std::size_t repetitions) {
  if (iterations == 0) throw ValidationError("bench needs at least one iteration");
  if (repetitions == 0) throw ValidationError("bench needs at least one repetition");
  stack.validate();
  recon::ReconConfig config;
  config.iterations = iterations;
  double max_x = 0.0, max_y = 0.0;
  for (const auto& p : stack.positions.positions) {
    max_x = std::max(max_x, p.x);
    max_y = std::max(max_y, p.y);
  }
  const std::size_t half = stack.height() / 2 + 2;
  config.object_height = static_cast<std::size_t>(std::ceil(max_y)) + half;
  config.object_width = static_cast<std::size_t>(std::ceil(max_x)) + half;

  std::vector<double> totals;
  for (std::size_t r = 0; r < repetitions; ++r) {
    const auto start = std::chrono::steady_clock::now();
    const auto result = recon::reconstruct(stack, probe, config);
    totals.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
  }
  BenchRow row;
  row.name = name;
  row.images = stack.size();
  row.iterations = iterations;
  row.repetitions = repetitions;
  const double n = static_cast<double>(repetitions);
  row.total_mean = std::accumulate(totals.begin(), totals.end(), 0.0) / n;
  double ss = 0.0;
  for (double t : totals) ss += (t - row.total_mean) * (t - row.total_mean);
  row.total_std = repetitions > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  row.per_iteration_mean = row.total_mean / static_cast<double>(iterations);
  row.per_iteration_std = row.total_std / static_cast<double>(iterations);
  return row;
}

std::string bench_csv_header() {
  return "name,images,iterations,repetitions,total_s_mean,total_s_std,per_iter_s_mean,per_iter_s_std\n";
}

std::string bench_csv_row(const BenchRow& row) {
  std::ostringstream os;
  os << row.name << ',' << row.images << ',' << row.iterations << ',' << row.repetitions << ','
     << std::setprecision(6) << row.total_mean << ',' << row.total_std << ',' << row.per_iteration_mean << ','
     << row.per_iteration_std << '\n';
  return os.str();
}

void set_thread_count(int n) {
  if (n > 0) omp_set_num_threads(n);
}

}  // namespace ptychoforge::pipeline
