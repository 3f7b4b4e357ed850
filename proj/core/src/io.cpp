#include "ptychoforge/io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>

#include "json.hpp"

namespace ptychoforge::io {

static_assert(std::endian::native == std::endian::little, "archive members are little-endian");

namespace {

using nlohmann::json;

enum class Dtype { F32, F64, C64, C128, I64 };

struct DtypeInfo {
  Dtype type;
  const char* name;
  std::size_t size;
};

constexpr DtypeInfo kDtypes[] = {
    {Dtype::F32, "f32", 4}, {Dtype::F64, "f64", 8}, {Dtype::C64, "c64", 8},
    {Dtype::C128, "c128", 16}, {Dtype::I64, "i64", 8}};

const DtypeInfo& info(Dtype t) {
  for (const auto& d : kDtypes) {
    if (d.type == t) return d;
  }
  throw Error("unknown dtype");
}

template <typename T>
std::vector<std::uint8_t> to_bytes(const std::vector<T>& values) {
  std::vector<std::uint8_t> out(values.size() * sizeof(T));
  if (!out.empty()) std::memcpy(out.data(), values.data(), out.size());
  return out;
}

template <typename T>
std::vector<T> from_bytes(const std::vector<std::uint8_t>& bytes) {
  std::vector<T> out(bytes.size() / sizeof(T));
  if (!out.empty()) std::memcpy(out.data(), bytes.data(), out.size() * sizeof(T));
  return out;
}

class ArchiveBuilder {
 public:
  void add(const std::string& name, Dtype dtype, std::vector<std::size_t> shape,
           std::vector<std::uint8_t> bytes) {
    members_.push_back({{"name", name},
                        {"dtype", info(dtype).name},
                        {"shape", shape},
                        {"crc32", crc32_of(bytes)}});
    entries_.push_back({name, std::move(bytes)});
  }

  std::vector<std::uint8_t> finish(json manifest) {
    manifest["format_version"] = kFormatVersion;
    manifest["members"] = members_;
    const std::string text = manifest.dump(2) + "\n";
    entries_.push_back({"manifest.json", std::vector<std::uint8_t>(text.begin(), text.end())});
    return encode_zip(entries_);
  }

 private:
  std::vector<ZipEntry> entries_;
  json members_ = json::array();
};

struct Member {
  Dtype dtype;
  std::vector<std::size_t> shape;
  const std::vector<std::uint8_t>* bytes;
};

class ArchiveView {
 public:
  ArchiveView(const std::vector<std::uint8_t>& file_bytes, const char* expected_kind)
      : entries_(decode_zip(file_bytes)) {
    for (const auto& e : entries_) by_name_[e.name] = &e;
    const auto it = by_name_.find("manifest.json");
    if (it == by_name_.end()) throw SchemaError("archive has no manifest.json");
    try {
      manifest_ = json::parse(it->second->data.begin(), it->second->data.end());
    } catch (const json::exception& e) {
      throw SchemaError(std::string("manifest.json is not valid JSON: ") + e.what());
    }
    if (!manifest_.is_object() || !manifest_.contains("format_version") ||
        !manifest_["format_version"].is_string()) {
      throw VersionError("manifest has no format_version");
    }
    if (manifest_["format_version"].get<std::string>() != kFormatVersion) {
      throw VersionError("unsupported format_version '" +
                         manifest_["format_version"].get<std::string>() + "' (expected " +
                         kFormatVersion + ")");
    }
    const std::string kind = manifest_.value("kind", "");
    if (kind != expected_kind) {
      throw SchemaError("archive kind is '" + kind + "', expected '" + expected_kind + "'");
    }
    if (!manifest_.contains("members") || !manifest_["members"].is_array()) {
      throw SchemaError("manifest has no member table");
    }
    for (const auto& m : manifest_["members"]) parse_member(m);
  }

  [[nodiscard]] const json& manifest() const noexcept { return manifest_; }
  [[nodiscard]] bool has(const std::string& name) const { return members_.contains(name); }

  const Member& get(const std::string& name, Dtype dtype, std::size_t rank) const {
    const auto it = members_.find(name);
    if (it == members_.end()) throw SchemaError("archive member '" + name + "' is missing");
    if (it->second.dtype != dtype) {
      throw SchemaError("member '" + name + "' has dtype " + info(it->second.dtype).name +
                        ", expected " + info(dtype).name);
    }
    if (it->second.shape.size() != rank) {
      throw DimensionError("member '" + name + "' has rank " + std::to_string(it->second.shape.size()) +
                           ", expected " + std::to_string(rank));
    }
    return it->second;
  }

 private:
  void parse_member(const json& m) {
    try {
      const auto name = m.at("name").get<std::string>();
      const auto dtype_name = m.at("dtype").get<std::string>();
      const auto shape = m.at("shape").get<std::vector<std::size_t>>();
      const auto crc = m.at("crc32").get<std::uint32_t>();
      const DtypeInfo* dt = nullptr;
      for (const auto& d : kDtypes) {
        if (dtype_name == d.name) dt = &d;
      }
      if (dt == nullptr) throw SchemaError("member '" + name + "' has unknown dtype " + dtype_name);
      const auto it = by_name_.find(name);
      if (it == by_name_.end()) throw SchemaError("manifest lists missing member '" + name + "'");
      std::size_t count = 1;
      for (auto s : shape) count *= s;
      if (count * dt->size != it->second->data.size()) {
        throw DimensionError("member '" + name + "' holds " + std::to_string(it->second->data.size()) +
                             " bytes, shape requires " + std::to_string(count * dt->size));
      }
      if (crc32_of(it->second->data) != crc) throw ChecksumError("manifest CRC mismatch for '" + name + "'");
      members_[name] = Member{dt->type, shape, &it->second->data};
    } catch (const json::exception& e) {
      throw SchemaError(std::string("malformed member table entry: ") + e.what());
    }
  }

  std::vector<ZipEntry> entries_;
  std::map<std::string, const ZipEntry*> by_name_;
  std::map<std::string, Member> members_;
  json manifest_;
};

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error("cannot open '" + path.string() + "' for writing");
  os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw Error("failed writing '" + path.string() + "'");
}

// --- array codecs ----------------------------------------------------------------

std::vector<std::uint8_t> encode_c64(const ComplexImage2D& img) {
  std::vector<float> v;
  v.reserve(img.size() * 2);
  for (const auto& z : img) {
    v.push_back(static_cast<float>(z.real()));
    v.push_back(static_cast<float>(z.imag()));
  }
  return to_bytes(v);
}

std::vector<std::uint8_t> encode_c128(const ComplexImage2D& img) {
  return to_bytes(std::vector<Complex>(img.begin(), img.end()));
}

ComplexImage2D decode_complex(const Member& m) {
  const std::size_t h = m.shape[0], w = m.shape[1];
  if (h == 0 || w == 0) throw DimensionError("complex image member has a zero dimension");
  std::vector<Complex> values;
  if (m.dtype == Dtype::C64) {
    const auto f = from_bytes<float>(*m.bytes);
    values.reserve(f.size() / 2);
    for (std::size_t i = 0; i + 1 < f.size(); i += 2) values.emplace_back(f[i], f[i + 1]);
  } else {
    values = from_bytes<Complex>(*m.bytes);
  }
  ComplexImage2D img(h, w, std::move(values));
  if (!all_finite(img)) throw InvariantError("complex image contains non-finite values");
  return img;
}

RealImage2D decode_f64_image(const Member& m) {
  if (m.shape[0] == 0 || m.shape[1] == 0) throw DimensionError("image member has a zero dimension");
  return RealImage2D(m.shape[0], m.shape[1], from_bytes<double>(*m.bytes));
}

const char* normalization_name(forward::ProbeNormalization n) {
  return n == forward::ProbeNormalization::RmsNormalized ? "rms" : "raw";
}

forward::ProbeNormalization parse_normalization(const std::string& s) {
  if (s == "rms") return forward::ProbeNormalization::RmsNormalized;
  if (s == "raw") return forward::ProbeNormalization::RawScale;
  throw SchemaError("unknown probe normalization '" + s + "'");
}

const char* policy_name(scan::EmptyQuadrantPolicy p) {
  return p == scan::EmptyQuadrantPolicy::Skip ? "skip" : "fallback";
}

json seed_json(const RandomSeed& s) { return {{"seed", s.seed}, {"stream", s.stream_index}}; }

RandomSeed parse_seed(const json& j) {
  return RandomSeed{j.at("seed").get<std::uint64_t>(), j.at("stream").get<std::uint64_t>()};
}

}  // namespace

// --- dataset bundles -----------------------------------------------------------

std::vector<std::uint8_t> encode_bundle(const DatasetBundle& bundle) {
  if (!bundle.probe) throw SchemaError("probe required");
  const auto& stack = bundle.diffraction;
  stack.validate();
  const std::size_t n = stack.size(), h = stack.height(), w = stack.width();
  const auto& probe = *bundle.probe;
  if (probe.field.height() != h || probe.field.width() != w) {
    throw DimensionError("probe is " + std::to_string(probe.field.height()) + "x" +
                         std::to_string(probe.field.width()) + " but patterns are " +
                         std::to_string(h) + "x" + std::to_string(w));
  }
  require_finite(probe.field, "probe");
  const std::size_t crop = bundle.manifest.crop_size == 0 ? h : bundle.manifest.crop_size;
  if (crop != h || crop != w) {
    throw DimensionError("manifest crop " + std::to_string(crop) + " disagrees with " +
                         std::to_string(h) + "x" + std::to_string(w) + " patterns");
  }

  ArchiveBuilder builder;
  std::vector<float> diffraction;
  diffraction.reserve(n * h * w);
  for (const auto& p : stack.patterns) {
    for (double v : p) diffraction.push_back(static_cast<float>(v));
  }
  builder.add("diffraction", Dtype::F32, {n, h, w}, to_bytes(diffraction));
  std::vector<double> xs, ys;
  for (const auto& p : stack.positions.positions) {
    xs.push_back(p.x);
    ys.push_back(p.y);
  }
  builder.add("xcoords", Dtype::F64, {n}, to_bytes(xs));
  builder.add("ycoords", Dtype::F64, {n}, to_bytes(ys));
  builder.add("probe", Dtype::C64, {h, w}, encode_c64(probe.field));
  if (bundle.ground_truth_object) {
    require_finite(*bundle.ground_truth_object, "ground-truth object");
    builder.add("object_truth", Dtype::C128,
                {bundle.ground_truth_object->height(), bundle.ground_truth_object->width()},
                encode_c128(*bundle.ground_truth_object));
  }

  const auto& m = bundle.manifest;
  json manifest;
  manifest["kind"] = "dataset";
  manifest["instrument"] = m.instrument.empty() ? probe.source_label : m.instrument;
  manifest["photon_target"] = m.photon_target ? json(*m.photon_target) : json(nullptr);
  manifest["crop_size"] = crop;
  manifest["counts"] = m.counts_normalized ? "normalized" : "raw";
  manifest["object_shape"] = {m.object_height, m.object_width};
  json lineage = json::array();
  for (const auto& s : m.seed_lineage) {
    json entry = seed_json(s.seed);
    entry["label"] = s.label;
    lineage.push_back(entry);
  }
  manifest["seed_lineage"] = lineage;
  manifest["probe"] = {{"label", probe.source_label},
                       {"normalization", normalization_name(probe.normalization)}};
  manifest["scan"] = {{"pattern", scan::pattern_name(stack.positions.pattern)},
                      {"step_x", stack.positions.step_x},
                      {"step_y", stack.positions.step_y},
                      {"jitter_sigma", stack.positions.jitter_sigma}};
  manifest["stack_photon_target"] =
      stack.photon_target ? json(*stack.photon_target) : json(nullptr);
  manifest["probe_label"] = stack.probe_label;

  if (bundle.groups) {
    const auto& g = *bundle.groups;
    const std::size_t count = g.size();
    if (g.channels.size() != count || g.fallback_mask.size() != count) {
      throw DimensionError("group set arrays disagree in length");
    }
    std::vector<std::int64_t> channels;
    for (const auto& ch : g.channels) {
      for (auto idx : ch) {
        if (idx < 0 || static_cast<std::size_t>(idx) >= n) throw DimensionError("group member index out of range");
        channels.push_back(idx);
      }
    }
    for (auto idx : g.reference_indices) {
      if (idx < 0 || static_cast<std::size_t>(idx) >= n) throw DimensionError("group reference index out of range");
    }
    builder.add("group_refs", Dtype::I64, {count}, to_bytes(g.reference_indices));
    builder.add("group_channels", Dtype::I64, {count, scan::kChannels}, to_bytes(channels));
    manifest["groups"] = {{"d_min", g.params.d_min},
                          {"d_max", g.params.d_max},
                          {"rounds", g.params.groups_per_reference},
                          {"top_n", g.params.top_n},
                          {"policy", policy_name(g.params.policy)},
                          {"fallback_mask", g.fallback_mask},
                          {"skipped", g.skipped}};
  }
  return builder.finish(std::move(manifest));
}

void write_bundle(const DatasetBundle& bundle, const std::filesystem::path& path) {
  write_file(path, encode_bundle(bundle));
}

DatasetBundle decode_bundle(const std::vector<std::uint8_t>& bytes) {
  const ArchiveView view(bytes, "dataset");
  const json& mj = view.manifest();
  DatasetBundle bundle;
  try {
    const auto& diff = view.get("diffraction", Dtype::F32, 3);
    const std::size_t n = diff.shape[0], h = diff.shape[1], w = diff.shape[2];
    if (n == 0 || h == 0 || w == 0) throw DimensionError("diffraction has a zero dimension");
    const std::size_t crop = mj.at("crop_size").get<std::size_t>();
    if (crop != h || crop != w) {
      throw DimensionError("manifest crop " + std::to_string(crop) + " but patterns are " +
                           std::to_string(h) + "x" + std::to_string(w));
    }
    const auto values = from_bytes<float>(*diff.bytes);
    auto& stack = bundle.diffraction;
    stack.patterns.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
      std::vector<double> v(values.begin() + static_cast<long>(k * h * w),
                            values.begin() + static_cast<long>((k + 1) * h * w));
      stack.patterns.emplace_back(h, w, std::move(v));
    }

    const auto& xm = view.get("xcoords", Dtype::F64, 1);
    const auto& ym = view.get("ycoords", Dtype::F64, 1);
    if (xm.shape[0] != n || ym.shape[0] != n) throw DimensionError("coordinate count differs from pattern count");
    const auto xs = from_bytes<double>(*xm.bytes);
    const auto ys = from_bytes<double>(*ym.bytes);
    const auto& sj = mj.at("scan");
    stack.positions.pattern = scan::parse_pattern(sj.at("pattern").get<std::string>());
    stack.positions.step_x = sj.at("step_x").get<double>();
    stack.positions.step_y = sj.at("step_y").get<double>();
    stack.positions.jitter_sigma = sj.at("jitter_sigma").get<double>();
    for (std::size_t k = 0; k < n; ++k) stack.positions.positions.push_back({xs[k], ys[k]});
    if (!mj.at("stack_photon_target").is_null()) stack.photon_target = mj["stack_photon_target"].get<double>();
    stack.probe_label = mj.at("probe_label").get<std::string>();

    const auto& pm = view.get("probe", Dtype::C64, 2);
    if (pm.shape[0] != h || pm.shape[1] != w) throw DimensionError("probe shape differs from pattern shape");
    forward::Probe probe;
    probe.field = decode_complex(pm);
    probe.source_label = mj.at("probe").at("label").get<std::string>();
    probe.normalization = parse_normalization(mj.at("probe").at("normalization").get<std::string>());
    bundle.probe = std::move(probe);

    if (view.has("object_truth")) bundle.ground_truth_object = decode_complex(view.get("object_truth", Dtype::C128, 2));

    if (view.has("group_refs") || view.has("group_channels")) {
      const auto& rm = view.get("group_refs", Dtype::I64, 1);
      const auto& cm = view.get("group_channels", Dtype::I64, 2);
      if (cm.shape[0] != rm.shape[0] || cm.shape[1] != scan::kChannels) {
        throw DimensionError("group_channels must be G x 4 with G matching group_refs");
      }
      scan::GroupSet g;
      g.reference_indices = from_bytes<std::int64_t>(*rm.bytes);
      const auto flat = from_bytes<std::int64_t>(*cm.bytes);
      for (std::size_t k = 0; k < rm.shape[0]; ++k) {
        std::array<std::int64_t, scan::kChannels> ch{};
        for (std::size_t c = 0; c < scan::kChannels; ++c) ch[c] = flat[k * scan::kChannels + c];
        g.channels.push_back(ch);
      }
      const auto& gj = mj.at("groups");
      g.params.d_min = gj.at("d_min").get<double>();
      g.params.d_max = gj.at("d_max").get<double>();
      g.params.groups_per_reference = gj.at("rounds").get<std::size_t>();
      g.params.top_n = gj.at("top_n").get<std::size_t>();
      g.params.policy = gj.at("policy").get<std::string>() == "skip" ? scan::EmptyQuadrantPolicy::Skip
                                                                     : scan::EmptyQuadrantPolicy::Fallback;
      g.fallback_mask = gj.at("fallback_mask").get<std::vector<std::uint8_t>>();
      g.skipped = gj.at("skipped").get<std::vector<std::int64_t>>();
      if (g.fallback_mask.size() != g.size()) throw DimensionError("group fallback mask length mismatch");
      for (auto idx : flat) {
        if (idx < 0 || static_cast<std::size_t>(idx) >= n) throw DimensionError("group member index out of range");
      }
      for (auto idx : g.reference_indices) {
        if (idx < 0 || static_cast<std::size_t>(idx) >= n) throw DimensionError("group reference index out of range");
      }
      bundle.groups = std::move(g);
    }

    auto& m = bundle.manifest;
    m.format_version = mj.at("format_version").get<std::string>();
    m.instrument = mj.at("instrument").get<std::string>();
    if (!mj.at("photon_target").is_null()) m.photon_target = mj["photon_target"].get<double>();
    m.crop_size = crop;
    m.counts_normalized = mj.at("counts").get<std::string>() == "normalized";
    const auto shape = mj.at("object_shape").get<std::vector<std::size_t>>();
    if (shape.size() != 2) throw DimensionError("object_shape must have two entries");
    m.object_height = shape[0];
    m.object_width = shape[1];
    for (const auto& s : mj.at("seed_lineage")) {
      m.seed_lineage.push_back({s.at("label").get<std::string>(), parse_seed(s)});
    }
  } catch (const json::exception& e) {
    throw SchemaError(std::string("malformed dataset manifest: ") + e.what());
  } catch (const FormatError&) {
    throw;
  } catch (const ValidationError& e) {
    throw SchemaError(e.what());
  }

  try {
    bundle.diffraction.validate();
  } catch (const ValidationError& e) {
    throw InvariantError(std::string("diffraction invariant violated: ") + e.what());
  }
  return bundle;
}

DatasetBundle read_bundle(const std::filesystem::path& path) { return decode_bundle(read_file(path)); }

// --- single-array files ----------------------------------------------------------

void write_object_file(const ObjectFile& object, const std::filesystem::path& path) {
  require_finite(object.field, "object");
  ArchiveBuilder builder;
  builder.add("object_truth", Dtype::C128, {object.field.height(), object.field.width()},
              encode_c128(object.field));
  json manifest;
  manifest["kind"] = "object";
  manifest["object_class"] = object.object_class;
  manifest["seed"] = seed_json(object.seed);
  write_file(path, builder.finish(std::move(manifest)));
}

ObjectFile read_object_file(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  const ArchiveView view(bytes, "object");
  try {
    ObjectFile out;
    out.field = decode_complex(view.get("object_truth", Dtype::C128, 2));
    out.object_class = view.manifest().at("object_class").get<std::string>();
    out.seed = parse_seed(view.manifest().at("seed"));
    return out;
  } catch (const json::exception& e) {
    throw SchemaError(std::string("malformed object manifest: ") + e.what());
  }
}

void write_probe_file(const forward::Probe& probe, const std::filesystem::path& path) {
  require_finite(probe.field, "probe");
  ArchiveBuilder builder;
  builder.add("probe", Dtype::C64, {probe.field.height(), probe.field.width()}, encode_c64(probe.field));
  json manifest;
  manifest["kind"] = "probe";
  manifest["probe"] = {{"label", probe.source_label},
                       {"normalization", normalization_name(probe.normalization)}};
  write_file(path, builder.finish(std::move(manifest)));
}

forward::Probe read_probe_file(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  const ArchiveView view(bytes, "probe");
  try {
    forward::Probe probe;
    probe.field = decode_complex(view.get("probe", Dtype::C64, 2));
    probe.source_label = view.manifest().at("probe").at("label").get<std::string>();
    probe.normalization =
        parse_normalization(view.manifest().at("probe").at("normalization").get<std::string>());
    return probe;
  } catch (const json::exception& e) {
    throw SchemaError(std::string("malformed probe manifest: ") + e.what());
  }
}

void write_recon_file(const recon::ReconResult& result, const std::filesystem::path& path) {
  ArchiveBuilder builder;
  const auto& o = result.object_estimate;
  const auto& p = result.probe_estimate;
  const auto& m = result.illuminated_mask;
  builder.add("object_estimate", Dtype::C128, {o.height(), o.width()}, encode_c128(o));
  builder.add("probe_estimate", Dtype::C128, {p.height(), p.width()}, encode_c128(p));
  builder.add("error_history", Dtype::F64, {result.error_history.size()}, to_bytes(result.error_history));
  builder.add("illuminated_mask", Dtype::F64, {m.height(), m.width()},
              to_bytes(std::vector<double>(m.begin(), m.end())));
  json manifest;
  manifest["kind"] = "reconstruction";
  manifest["iterations"] = result.error_history.size();
  write_file(path, builder.finish(std::move(manifest)));
}

recon::ReconResult read_recon_file(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  const ArchiveView view(bytes, "reconstruction");
  recon::ReconResult r;
  r.object_estimate = decode_complex(view.get("object_estimate", Dtype::C128, 2));
  r.probe_estimate = decode_complex(view.get("probe_estimate", Dtype::C128, 2));
  r.error_history = from_bytes<double>(*view.get("error_history", Dtype::F64, 1).bytes);
  r.illuminated_mask = decode_f64_image(view.get("illuminated_mask", Dtype::F64, 2));
  if (!r.object_estimate.same_shape(Image2D<Complex>(r.illuminated_mask.height(), r.illuminated_mask.width()))) {
    throw DimensionError("illuminated mask shape differs from the object estimate");
  }
  return r;
}

std::string archive_kind(const std::filesystem::path& path) {
  for (const auto& e : decode_zip(read_file(path))) {
    if (e.name != "manifest.json") continue;
    try {
      const json mj = json::parse(e.data.begin(), e.data.end());
      return mj.value("kind", "");
    } catch (const json::exception& ex) {
      throw SchemaError(std::string("manifest.json is not valid JSON: ") + ex.what());
    }
  }
  throw SchemaError("archive has no manifest.json");
}

// --- inspect -----------------------------------------------------------------------

InspectReport inspect(const std::filesystem::path& path) {
  std::ostringstream os;
  InspectReport report;
  std::vector<std::uint8_t> bytes;
  try {
    bytes = read_file(path);
  } catch (const std::exception& e) {
    report.text = std::string("error: ") + e.what() + "\n";
    return report;
  }
  std::string kind;
  try {
    const auto entries = decode_zip(bytes);
    os << "archive: " << path.string() << " (" << bytes.size() << " bytes, " << entries.size()
       << " members, CRC-32 ok)\n";
    for (const auto& e : entries) {
      if (e.name != "manifest.json") continue;
      const json mj = json::parse(e.data.begin(), e.data.end());
      kind = mj.value("kind", "");
      os << "manifest:\n" << mj.dump(2) << "\n";
    }
  } catch (const std::exception& e) {
    os << "check failed: " << e.what() << "\n";
    report.text = os.str();
    return report;
  }

  try {
    if (kind == "dataset") {
      const auto b = decode_bundle(bytes);
      const auto f = forward::rms_norm(b.diffraction);
      os << "dataset: " << b.diffraction.size() << " patterns of " << b.diffraction.height() << "x"
         << b.diffraction.width() << ", n_rms=" << f.n_rms << ", n_energy=" << f.n_energy << "\n";
    } else if (kind == "object") {
      const auto o = read_object_file(path);
      os << "object: " << o.field.height() << "x" << o.field.width() << "\n";
    } else if (kind == "probe") {
      const auto p = read_probe_file(path);
      os << "probe: " << p.field.height() << "x" << p.field.width() << "\n";
    } else if (kind == "reconstruction") {
      const auto r = read_recon_file(path);
      os << "reconstruction: " << r.error_history.size() << " iterations, final error "
         << (r.error_history.empty() ? 0.0 : r.error_history.back()) << "\n";
    } else {
      throw SchemaError("unknown archive kind '" + kind + "'");
    }
    os << "invariants: ok\n";
    report.ok = true;
  } catch (const std::exception& e) {
    os << "check failed: " << e.what() << "\n";
  }
  report.text = os.str();
  return report;
}

// --- preprocessing -------------------------------------------------------------------

PreprocessResult preprocess(const forward::DiffractionStack& stack, double saturation_threshold,
                            std::size_t crop) {
  stack.validate();
  if (!(saturation_threshold > 0.0)) throw ValidationError("saturation threshold must be > 0");
  const std::size_t h = stack.height(), w = stack.width();
  if (crop == 0 || crop > h || crop > w) {
    throw ValidationError("crop " + std::to_string(crop) + " exceeds the " + std::to_string(h) +
                          "x" + std::to_string(w) + " patterns");
  }
  const std::size_t row0 = h / 2 - crop / 2;
  const std::size_t col0 = w / 2 - crop / 2;
  PreprocessResult out;
  out.stack.positions = stack.positions;
  out.stack.photon_target = stack.photon_target;
  out.stack.probe_label = stack.probe_label;
  out.flushed.reserve(stack.size());
  for (const auto& pattern : stack.patterns) {
    RealImage2D flushed = pattern;
    std::size_t count = 0;
    for (auto& v : flushed) {
      if (v >= saturation_threshold) {
        v = 0.0;
        ++count;
      }
    }
    out.flushed.push_back(count);
    out.stack.patterns.push_back(crop_image(flushed, row0, col0, crop, crop));
  }
  return out;
}

}  // namespace ptychoforge::io
