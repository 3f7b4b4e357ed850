// ptychoforge command-line front end.
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ptychoforge/forward.hpp"
#include "ptychoforge/io.hpp"
#include "ptychoforge/metrics.hpp"
#include "ptychoforge/objgen.hpp"
#include "ptychoforge/pipeline.hpp"
#include "ptychoforge/recon.hpp"
#include "ptychoforge/scan.hpp"

namespace pf = ptychoforge;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitRuntime = 3;

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) parts.push_back(item);
  return parts;
}

double to_double(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw pf::ValidationError("cannot parse " + what + " '" + s + "' as a number");
  }
}

std::pair<std::size_t, std::size_t> parse_size(const std::string& s) {
  const auto parts = split(s, 'x');
  if (parts.size() != 2) throw pf::ValidationError("--size must look like HxW, got '" + s + "'");
  const double h = to_double(parts[0], "height");
  const double w = to_double(parts[1], "width");
  if (h < 1 || w < 1 || h != std::floor(h) || w != std::floor(w)) {
    throw pf::ValidationError("--size needs positive integers, got '" + s + "'");
  }
  return {static_cast<std::size_t>(h), static_cast<std::size_t>(w)};
}

// isotropic:STEP[:JITTER], rectangular:SX:SY[:JITTER], spiral:STEP:COUNT
pf::scan::ScanSpec parse_plan(const std::string& s) {
  const auto parts = split(s, ':');
  if (parts.empty()) throw pf::ValidationError("empty --plan");
  pf::scan::ScanSpec spec;
  spec.pattern = pf::scan::parse_pattern(parts[0]);
  const auto arg = [&](std::size_t i) { return to_double(parts.at(i), "--plan field " + std::to_string(i)); };
  switch (spec.pattern) {
    case pf::scan::Pattern::Isotropic:
      if (parts.size() < 2 || parts.size() > 3) throw pf::ValidationError("expected isotropic:STEP[:JITTER]");
      spec.step_x = spec.step_y = arg(1);
      if (parts.size() == 3) spec.jitter_sigma = arg(2);
      break;
    case pf::scan::Pattern::Rectangular:
      if (parts.size() < 3 || parts.size() > 4) throw pf::ValidationError("expected rectangular:SX:SY[:JITTER]");
      spec.step_x = arg(1);
      spec.step_y = arg(2);
      if (parts.size() == 4) spec.jitter_sigma = arg(3);
      break;
    case pf::scan::Pattern::Spiral:
      if (parts.size() != 3) throw pf::ValidationError("expected spiral:STEP:COUNT");
      spec.step_x = spec.step_y = arg(1);
      spec.spiral_points = static_cast<std::size_t>(arg(2));
      break;
  }
  return spec;
}

std::pair<double, double> parse_photons(const std::string& s) {
  const auto parts = split(s, ':');
  if (parts.size() == 1) {
    const double v = to_double(parts[0], "--photons");
    return {v, v};
  }
  if (parts.size() != 2) throw pf::ValidationError("--photons must be N or LO:HI");
  return {to_double(parts[0], "--photons low"), to_double(parts[1], "--photons high")};
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw pf::Error("cannot open '" + path + "' for writing");
  os << text;
}

// Complex field held by any archive kind, plus the illumination when known.
struct LoadedField {
  pf::ComplexImage2D field;
  std::optional<pf::RealImage2D> illumination;
};

LoadedField load_field(const std::string& path) {
  const auto kind = pf::io::archive_kind(path);
  if (kind == "object") return {pf::io::read_object_file(path).field, std::nullopt};
  if (kind == "dataset") {
    auto b = pf::io::read_bundle(path);
    if (!b.ground_truth_object) throw pf::ValidationError("dataset '" + path + "' carries no object_truth member");
    return {std::move(*b.ground_truth_object), std::nullopt};
  }
  if (kind == "reconstruction") {
    auto r = pf::io::read_recon_file(path);
    return {std::move(r.object_estimate), std::move(r.illuminated_mask)};
  }
  if (kind == "probe") return {pf::io::read_probe_file(path).field, std::nullopt};
  throw pf::ValidationError("'" + path + "' holds no complex field (kind '" + kind + "')");
}

std::pair<std::size_t, std::size_t> object_extent(const pf::io::DatasetBundle& b) {
  if (b.manifest.object_height > 0 && b.manifest.object_width > 0) {
    return {b.manifest.object_height, b.manifest.object_width};
  }
  double mx = 0.0, my = 0.0;
  for (const auto& p : b.diffraction.positions.positions) {
    mx = std::max(mx, p.x);
    my = std::max(my, p.y);
  }
  const std::size_t half = b.diffraction.height() / 2 + 2;
  return {static_cast<std::size_t>(std::ceil(my)) + half, static_cast<std::size_t>(std::ceil(mx)) + half};
}

int resolve_threads(int flag) {
  if (flag > 0) return flag;
  if (const char* env = std::getenv("PTYCHOFORGE_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Synthetic ptychography data generation, ePIE reconstruction and FRC scoring"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "Worker cap (default: PTYCHOFORGE_THREADS, then all cores)");

  // gen-object
  auto* gen = app.add_subcommand("gen-object", "Generate a synthetic complex object");
  std::string gen_class = "dl", gen_size = "256x256", gen_out;
  std::uint64_t gen_seed = 0;
  double amp_low = 0.7, amp_high = 1.0;
  gen->add_option("--class", gen_class, "dl|pr|wn|bwn|sn")->required();
  gen->add_option("--size", gen_size, "HxW")->required();
  gen->add_option("--seed", gen_seed);
  gen->add_option("--amp-low", amp_low);
  gen->add_option("--amp-high", amp_high);
  gen->add_option("--out", gen_out)->required();

  // gen-probe
  auto* gp = app.add_subcommand("gen-probe", "Write a synthetic soft-disk test probe");
  pf::forward::SyntheticProbeParams probe_params;
  std::string gp_out;
  gp->add_option("--size", probe_params.size);
  gp->add_option("--diameter", probe_params.diameter);
  gp->add_option("--edge", probe_params.edge_width);
  gp->add_option("--defocus", probe_params.defocus);
  gp->add_option("--coma", probe_params.coma);
  gp->add_option("--out", gp_out)->required();

  // simulate
  auto* sim = app.add_subcommand("simulate", "Simulate a diffraction dataset");
  std::string sim_object, sim_probe, sim_plan, sim_photons = "1e4:1e6", sim_out;
  std::uint64_t sim_seed = 0;
  bool noiseless = false;
  sim->add_option("--object", sim_object)->required();
  sim->add_option("--probe", sim_probe)->required();
  sim->add_option("--plan", sim_plan, "isotropic:STEP[:J] | rectangular:SX:SY[:J] | spiral:STEP:COUNT")->required();
  sim->add_option("--photons", sim_photons, "N or LO:HI (log-uniform per dataset)");
  sim->add_option("--seed", sim_seed);
  sim->add_flag("--noiseless", noiseless);
  sim->add_option("--out", sim_out)->required();

  // group
  auto* grp = app.add_subcommand("group", "Quadrant grouping of scan positions");
  std::string grp_in, grp_out, grp_policy = "skip";
  double dmin = 0.0, dmax = 0.0;
  std::size_t rounds = 1, top_n = 12;
  std::uint64_t grp_seed = 0;
  grp->add_option("--in", grp_in)->required();
  grp->add_option("--dmin", dmin, "default 0.3 x mean step");
  grp->add_option("--dmax", dmax, "default 1.8 x mean step");
  grp->add_option("--rounds", rounds);
  grp->add_option("--top-n", top_n);
  grp->add_option("--policy", grp_policy, "skip|fallback");
  grp->add_option("--seed", grp_seed);
  grp->add_option("--out", grp_out)->required();

  // preprocess
  auto* pre = app.add_subcommand("preprocess", "Flush saturated pixels and center-crop patterns");
  std::string pre_in, pre_out, pre_probe;
  double sat = 0.0;
  std::size_t crop = 64;
  pre->add_option("--in", pre_in)->required();
  pre->add_option("--sat", sat, "pixels >= T are zeroed")->required();
  pre->add_option("--crop", crop);
  pre->add_option("--probe", pre_probe, "probe file matching the cropped size");
  pre->add_option("--out", pre_out)->required();

  // reconstruct
  auto* rec = app.add_subcommand("reconstruct", "ePIE reconstruction");
  std::string rec_in, rec_out;
  pf::recon::ReconConfig rc;
  bool fix_probe = false;
  std::uint64_t rec_seed = 0;
  rec->add_option("--in", rec_in)->required();
  rec->add_option("--iters", rc.iterations);
  rec->add_option("--alpha", rc.object_step);
  rec->add_option("--beta", rc.probe_step);
  rec->add_flag("--fix-probe", fix_probe);
  rec->add_option("--seed", rec_seed);
  rec->add_option("--out", rec_out)->required();

  // frc
  auto* frc = app.add_subcommand("frc", "Fourier ring correlation after registration and ramp removal");
  std::string frc_truth, frc_est, frc_out, frc_mode = "nyquist";
  pf::pipeline::EvaluationStage eval;
  frc->add_option("--truth", frc_truth)->required();
  frc->add_option("--est", frc_est)->required();
  frc->add_option("--upsample", eval.options.upsample);
  frc->add_option("--edge", eval.options.edge_fraction);
  frc->add_option("--mask-fraction", eval.mask_fraction, "illumination cut for reconstruction inputs");
  frc->add_option("--auc-mode", frc_mode, "nyquist|half-correlation");
  frc->add_option("--out", frc_out);

  // psd
  auto* psd = app.add_subcommand("psd", "Radial power spectral density as CSV");
  std::string psd_in, psd_out;
  psd->add_option("--in", psd_in)->required();
  psd->add_option("--out", psd_out);

  // inspect
  auto* ins = app.add_subcommand("inspect", "Print manifest and integrity checks");
  std::string ins_file;
  ins->add_option("file", ins_file)->required();

  // run
  auto* run = app.add_subcommand("run", "Run a pipeline spec (or replay a run report)");
  std::string run_spec, run_out;
  std::optional<std::uint64_t> run_seed;
  std::optional<std::size_t> run_iters;
  run->add_option("--spec", run_spec)->required();
  run->add_option("--out", run_out)->required();
  run->add_option("--seed", run_seed, "overrides the spec seed");
  run->add_option("--iters", run_iters, "overrides recon.iterations");

  // bench
  auto* bench = app.add_subcommand("bench", "Time ePIE over repeated runs");
  std::string bench_in, bench_out, bench_name;
  std::size_t bench_iters = 500, reps = 5;
  bench->add_option("--in", bench_in)->required();
  bench->add_option("--iters", bench_iters);
  bench->add_option("--reps", reps);
  bench->add_option("--name", bench_name);
  bench->add_option("--out", bench_out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  try {
    pf::pipeline::set_thread_count(resolve_threads(threads));

    if (*gen) {
      const auto [h, w] = parse_size(gen_size);
      const auto oc = pf::objgen::ObjectClass::with_defaults(pf::objgen::parse_kind(gen_class));
      const pf::RandomSeed seed{gen_seed, 0};
      const auto obj = pf::objgen::generate_object(oc, h, w, seed, {amp_low, amp_high});
      pf::io::write_object_file({obj.field, gen_class, seed}, gen_out);
    } else if (*gp) {
      pf::io::write_probe_file(pf::forward::make_synthetic_probe(probe_params), gp_out);
    } else if (*sim) {
      const auto object = pf::io::read_object_file(sim_object);
      const auto probe = pf::io::read_probe_file(sim_probe);
      pf::pipeline::PipelineSpec spec;
      spec.object.height = object.field.height();
      spec.object.width = object.field.width();
      spec.scan = parse_plan(sim_plan);
      const auto [lo, hi] = parse_photons(sim_photons);
      const auto scan = pf::pipeline::resolved_scan(spec, probe.field.height());
      const pf::RandomSeed root{sim_seed, 0};
      const auto seed_scan = pf::derive_stream(root, "scan", 0);
      const auto seed_sim = pf::derive_stream(root, "simulate", 0);
      const auto plan = pf::scan::make_scan(scan, seed_scan);
      pf::forward::SimulationOptions options{lo, hi, noiseless};
      pf::io::DatasetBundle b;
      b.diffraction = pf::forward::simulate_dataset(object.field, probe, plan, options, seed_sim);
      b.probe = probe;
      b.ground_truth_object = object.field;
      b.manifest.instrument = probe.source_label;
      b.manifest.photon_target = b.diffraction.photon_target;
      b.manifest.object_height = object.field.height();
      b.manifest.object_width = object.field.width();
      b.manifest.seed_lineage = {{"object", object.seed}, {"scan", seed_scan}, {"simulate", seed_sim}};
      pf::io::write_bundle(b, sim_out);
    } else if (*grp) {
      auto b = pf::io::read_bundle(grp_in);
      auto params = pf::scan::default_grouping(b.diffraction.positions);
      if (dmin > 0.0 || dmax > 0.0) {
        params.d_min = dmin;
        params.d_max = dmax;
      }
      params.groups_per_reference = rounds;
      params.top_n = top_n;
      if (grp_policy == "skip") {
        params.policy = pf::scan::EmptyQuadrantPolicy::Skip;
      } else if (grp_policy == "fallback") {
        params.policy = pf::scan::EmptyQuadrantPolicy::Fallback;
      } else {
        throw pf::ValidationError("--policy must be skip or fallback");
      }
      const pf::RandomSeed seed{grp_seed, 0};
      b.groups = pf::scan::group_quadrants(b.diffraction.positions, params, seed);
      b.manifest.seed_lineage.push_back({"group", seed});
      std::cerr << b.groups->size() << " groups, " << b.groups->skipped.size() << " references skipped\n";
      pf::io::write_bundle(b, grp_out);
    } else if (*pre) {
      auto b = pf::io::read_bundle(pre_in);
      const auto result = pf::io::preprocess(b.diffraction, sat, crop);
      std::size_t total = 0;
      for (auto n : result.flushed) total += n;
      std::cerr << "flushed " << total << " saturated pixels\n";
      b.diffraction = result.stack;
      b.manifest.crop_size = crop;
      if (!pre_probe.empty()) {
        b.probe = pf::io::read_probe_file(pre_probe);
      } else if (b.probe && b.probe->field.height() != crop) {
        throw pf::ValidationError("dataset probe is " + std::to_string(b.probe->field.height()) +
                                  " px; pass --probe with a " + std::to_string(crop) + " px probe");
      }
      b.groups.reset();
      pf::io::write_bundle(b, pre_out);
    } else if (*rec) {
      const auto b = pf::io::read_bundle(rec_in);
      if (!b.probe) throw pf::ValidationError("dataset has no probe");
      rc.update_probe = !fix_probe;
      rc.seed = pf::RandomSeed{rec_seed, 0};
      std::tie(rc.object_height, rc.object_width) = object_extent(b);
      const auto result = pf::recon::reconstruct(b.diffraction, *b.probe, rc);
      std::cerr << "final error " << (result.error_history.empty() ? 0.0 : result.error_history.back()) << "\n";
      pf::io::write_recon_file(result, rec_out);
    } else if (*frc) {
      if (frc_mode == "nyquist") {
        eval.options.mode = pf::metrics::AucMode::Nyquist;
      } else if (frc_mode == "half-correlation") {
        eval.options.mode = pf::metrics::AucMode::HalfCorrelation;
      } else {
        throw pf::ValidationError("--auc-mode must be nyquist or half-correlation");
      }
      auto truth = load_field(frc_truth);
      auto est = load_field(frc_est);
      pf::metrics::FrcResult result;
      if (est.illumination && truth.field.same_shape(est.field)) {
        pf::recon::ReconResult r;
        r.object_estimate = std::move(est.field);
        r.illuminated_mask = std::move(*est.illumination);
        result = pf::pipeline::evaluate_reconstruction(truth.field, r, eval);
      } else {
        result = pf::metrics::frc_auc_pipeline(truth.field, est.field, eval.options);
      }
      write_text(frc_out, pf::pipeline::frc_to_json(result));
    } else if (*psd) {
      const auto field = load_field(psd_in).field;
      std::ostringstream os;
      os << "frequency,power,pixels\n" << std::setprecision(17);
      for (const auto& ring : pf::metrics::radial_psd(field)) {
        os << ring.frequency << ',' << ring.power << ',' << ring.pixels << '\n';
      }
      write_text(psd_out, os.str());
    } else if (*ins) {
      const auto report = pf::io::inspect(ins_file);
      std::cout << report.text;
      return report.ok ? 0 : kExitRuntime;
    } else if (*run) {
      auto spec = pf::pipeline::load_spec(run_spec);
      if (run_seed) spec.seed = *run_seed;
      if (run_iters) spec.recon.iterations = *run_iters;
      if (threads > 0) spec.threads = threads;
      const auto result = pf::pipeline::run_pipeline(spec, run_out);
      std::cout << "auc " << result.frc.auc << "\n";
    } else if (*bench) {
      const auto b = pf::io::read_bundle(bench_in);
      if (!b.probe) throw pf::ValidationError("dataset has no probe");
      const auto name = bench_name.empty() ? std::filesystem::path(bench_in).stem().string() : bench_name;
      const auto row = pf::pipeline::bench_recon(name, b.diffraction, *b.probe, bench_iters, reps);
      write_text(bench_out, pf::pipeline::bench_csv_header() + pf::pipeline::bench_csv_row(row));
    }
  } catch (const pf::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const pf::io::SchemaError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return 0;
}
