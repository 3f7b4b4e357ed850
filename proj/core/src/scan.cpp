#include "ptychoforge/scan.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "ptychoforge/error.hpp"

namespace ptychoforge::scan {
namespace {

constexpr double kIsotropyTolerance = 0.05;
// Hexagonal packing: nearest-neighbour distance d at density 1/(pi c^2)
// satisfies d = c * sqrt(2 pi / sqrt(3)).
const double kSpiralSpacingFactor = std::sqrt(2.0 * std::numbers::pi / std::sqrt(3.0));

bool is_isotropic(double sx, double sy) {
  return std::abs(sx - sy) / std::max(sx, sy) < kIsotropyTolerance;
}

void validate_steps(const ScanSpec& spec) {
  if (!(std::isfinite(spec.step_x) && spec.step_x > 0.0)) throw ValidationError("scan step_x must be > 0");
  if (spec.pattern != Pattern::Spiral && !(std::isfinite(spec.step_y) && spec.step_y > 0.0)) {
    throw ValidationError("scan step_y must be > 0");
  }
  if (!(std::isfinite(spec.extent_x) && spec.extent_x >= 0.0 && std::isfinite(spec.extent_y) &&
        spec.extent_y >= 0.0)) {
    throw ValidationError("degenerate scan extent: must be finite and >= 0");
  }
  if (!(std::isfinite(spec.jitter_sigma) && spec.jitter_sigma >= 0.0)) {
    throw ValidationError("scan jitter_sigma must be >= 0");
  }
  if (spec.pattern == Pattern::Isotropic && !is_isotropic(spec.step_x, spec.step_y)) {
    throw ValidationError("isotropic scan requires |step_x - step_y| / max(step) < 0.05");
  }
  if (spec.pattern == Pattern::Rectangular && is_isotropic(spec.step_x, spec.step_y)) {
    throw ValidationError("rectangular scan requires asymmetric steps (use isotropic)");
  }
}

}  // namespace

std::string_view pattern_name(Pattern pattern) noexcept {
  switch (pattern) {
    case Pattern::Isotropic: return "isotropic";
    case Pattern::Rectangular: return "rectangular";
    case Pattern::Spiral: return "spiral";
  }
  return "?";
}

Pattern parse_pattern(std::string_view name) {
  for (auto p : {Pattern::Isotropic, Pattern::Rectangular, Pattern::Spiral}) {
    if (pattern_name(p) == name) return p;
  }
  throw ValidationError("unknown scan pattern '" + std::string(name) + "'");
}

void ScanPlan::validate() const {
  if (positions.empty()) throw ValidationError("scan plan has no positions");
  for (const auto& p : positions) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) throw ValidationError("scan plan has non-finite coordinates");
  }
  if (pattern == Pattern::Isotropic && !is_isotropic(step_x, step_y)) {
    throw ValidationError("isotropic plan with asymmetric steps");
  }
  if (pattern == Pattern::Rectangular && is_isotropic(step_x, step_y)) {
    throw ValidationError("rectangular plan with symmetric steps");
  }
}

ScanPlan make_scan(const ScanSpec& spec, RandomSeed seed) {
  validate_steps(spec);
  ScanPlan plan;
  plan.pattern = spec.pattern;
  plan.step_x = spec.step_x;
  plan.step_y = spec.pattern == Pattern::Spiral ? spec.step_x : spec.step_y;
  plan.jitter_sigma = spec.jitter_sigma;

  if (spec.pattern == Pattern::Spiral) {
    const double c = spec.step_x / kSpiralSpacingFactor;
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    const double cx = spec.origin_x + spec.extent_x / 2.0;
    const double cy = spec.origin_y + spec.extent_y / 2.0;
    const double r_limit = std::min(spec.extent_x, spec.extent_y) / 2.0;
    for (std::size_t n = 0;; ++n) {
      const double r = c * std::sqrt(static_cast<double>(n) + 0.5);
      if (spec.spiral_points > 0 ? n >= spec.spiral_points : (r > r_limit && n > 0)) break;
      const double theta = static_cast<double>(n) * golden;
      plan.positions.push_back({cx + r * std::cos(theta), cy + r * std::sin(theta)});
    }
  } else {
    const auto nx = static_cast<std::size_t>(std::floor(spec.extent_x / spec.step_x + 1e-9)) + 1;
    const auto ny = static_cast<std::size_t>(std::floor(spec.extent_y / spec.step_y + 1e-9)) + 1;
    plan.positions.reserve(nx * ny);
    for (std::size_t iy = 0; iy < ny; ++iy) {
      for (std::size_t ix = 0; ix < nx; ++ix) {
        plan.positions.push_back({spec.origin_x + static_cast<double>(ix) * spec.step_x,
                                  spec.origin_y + static_cast<double>(iy) * spec.step_y});
      }
    }
  }

  if (spec.jitter_sigma > 0.0) {
    Rng rng = make_rng(derive_stream(seed, "scan-jitter", 0));
    std::normal_distribution<double> jitter(0.0, spec.jitter_sigma);
    for (auto& p : plan.positions) {
      p.x += jitter(rng);
      p.y += jitter(rng);
    }
  }
  return plan;
}

// --- KD-tree -------------------------------------------------------------------

KdTree::KdTree(std::vector<Position> points) : points_(std::move(points)) {
  std::vector<std::size_t> order(points_.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  nodes_.reserve(points_.size());
  root_ = build(order, 0, order.size(), 0);
}

std::int32_t KdTree::build(std::vector<std::size_t>& order, std::size_t lo, std::size_t hi,
                           int depth) {
  if (lo >= hi) return -1;
  const auto axis = static_cast<std::uint8_t>(depth % 2);
  const std::size_t mid = lo + (hi - lo) / 2;
  auto key = [&](std::size_t i) { return axis == 0 ? points_[i].x : points_[i].y; };
  std::nth_element(order.begin() + static_cast<long>(lo), order.begin() + static_cast<long>(mid),
                   order.begin() + static_cast<long>(hi),
                   [&](std::size_t a, std::size_t b) { return key(a) < key(b) || (key(a) == key(b) && a < b); });
  const auto id = static_cast<std::int32_t>(nodes_.size());
  nodes_.push_back({order[mid], -1, -1, axis});
  const std::int32_t left = build(order, lo, mid, depth + 1);
  const std::int32_t right = build(order, mid + 1, hi, depth + 1);
  nodes_[static_cast<std::size_t>(id)].left = left;
  nodes_[static_cast<std::size_t>(id)].right = right;
  return id;
}

void KdTree::search(std::int32_t node_id, Position q, double r2,
                    std::vector<std::size_t>& out) const {
  if (node_id < 0) return;
  const Node& node = nodes_[static_cast<std::size_t>(node_id)];
  const Position& p = points_[node.point];
  const double dx = p.x - q.x, dy = p.y - q.y;
  if (dx * dx + dy * dy <= r2) out.push_back(node.point);
  const double diff = node.axis == 0 ? q.x - p.x : q.y - p.y;
  const std::int32_t near = diff <= 0.0 ? node.left : node.right;
  const std::int32_t far = diff <= 0.0 ? node.right : node.left;
  search(near, q, r2, out);
  if (diff * diff <= r2) search(far, q, r2, out);
}

std::vector<std::size_t> KdTree::radius_search(Position query, double radius) const {
  std::vector<std::size_t> out;
  search(root_, query, radius * radius, out);
  std::sort(out.begin(), out.end());
  return out;
}

// --- grouping ------------------------------------------------------------------

GroupingParams default_grouping(const ScanPlan& plan) {
  const double mean_step = 0.5 * (plan.step_x + plan.step_y);
  GroupingParams params;
  params.d_min = 0.3 * mean_step;
  params.d_max = 1.8 * mean_step;
  return params;
}

namespace {

struct ReferenceGroups {
  std::vector<std::array<std::int64_t, kChannels>> groups;
  std::vector<std::uint8_t> fallback;
  bool skipped = false;
};

ReferenceGroups group_reference(const ScanPlan& plan, const KdTree& tree, std::size_t ref,
                                const GroupingParams& params, RandomSeed seed) {
  const Position origin = plan.positions[ref];
  struct Candidate {
    double distance;
    std::size_t index;
  };
  std::vector<Candidate> candidates;
  for (std::size_t idx : tree.radius_search(origin, params.d_max)) {
    if (idx == ref) continue;
    const double d = std::hypot(plan.positions[idx].x - origin.x, plan.positions[idx].y - origin.y);
    if (d >= params.d_min && d <= params.d_max) candidates.push_back({d, idx});
  }
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    return a.distance < b.distance || (a.distance == b.distance && a.index < b.index);
  });
  if (candidates.size() > params.top_n) candidates.resize(params.top_n);

  std::array<std::vector<std::size_t>, kChannels> buckets;
  for (const auto& cand : candidates) {
    const Position& p = plan.positions[cand.index];
    buckets[quadrant_of(p.x - origin.x, p.y - origin.y)].push_back(cand.index);
  }
  const auto empty_count = static_cast<std::size_t>(
      std::count_if(buckets.begin(), buckets.end(), [](const auto& b) { return b.empty(); }));

  ReferenceGroups result;
  // One empty quadrant can be filled by the reference itself; more than that
  // needs borrowed candidates.
  const std::size_t borrowed = empty_count > 0 ? empty_count - 1 : 0;
  if (empty_count == kChannels ||
      (borrowed > 0 && (params.policy == EmptyQuadrantPolicy::Skip ||
                        candidates.size() < kChannels - empty_count + borrowed))) {
    result.skipped = true;
    return result;
  }

  Rng rng = make_rng(derive_stream(seed, "group", ref));
  for (std::size_t round = 0; round < params.groups_per_reference; ++round) {
    std::array<std::int64_t, kChannels> group{};
    std::vector<std::size_t> used;
    std::uint8_t fallback = 0;
    bool self_used = false;
    std::vector<std::size_t> empties;
    for (std::size_t q = 0; q < kChannels; ++q) {
      if (buckets[q].empty()) {
        empties.push_back(q);
        continue;
      }
      std::uniform_int_distribution<std::size_t> pick(0, buckets[q].size() - 1);
      const std::size_t member = buckets[q][pick(rng)];
      group[q] = static_cast<std::int64_t>(member);
      used.push_back(member);
    }
    for (std::size_t q : empties) {
      if (!self_used) {
        group[q] = static_cast<std::int64_t>(ref);
        self_used = true;
        continue;
      }
      std::vector<std::size_t> pool;
      for (const auto& cand : candidates) {
        if (std::find(used.begin(), used.end(), cand.index) == used.end()) pool.push_back(cand.index);
      }
      std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
      const std::size_t member = pool[pick(rng)];
      group[q] = static_cast<std::int64_t>(member);
      used.push_back(member);
      fallback = static_cast<std::uint8_t>(fallback | (1U << q));
    }
    result.groups.push_back(group);
    result.fallback.push_back(fallback);
  }
  return result;
}

}  // namespace

GroupSet group_quadrants(const ScanPlan& plan, const GroupingParams& params, RandomSeed seed) {
  if (plan.size() < 2) throw ValidationError("grouping requires at least 2 scan positions");
  plan.validate();
  if (!(std::isfinite(params.d_min) && std::isfinite(params.d_max) && params.d_min >= 0.0 &&
        params.d_min < params.d_max)) {
    throw ValidationError("grouping requires 0 <= d_min < d_max");
  }
  if (params.top_n < kChannels) throw ValidationError("grouping top_n must be >= 4");
  if (params.groups_per_reference < 1) throw ValidationError("grouping rounds must be >= 1");

  const KdTree tree(plan.positions);
  std::vector<ReferenceGroups> per_ref(plan.size());
  const auto n = static_cast<long>(plan.size());
#pragma omp parallel for schedule(static)
  for (long i = 0; i < n; ++i) {
    per_ref[static_cast<std::size_t>(i)] =
        group_reference(plan, tree, static_cast<std::size_t>(i), params, seed);
  }

  GroupSet out;
  out.params = params;
  for (std::size_t i = 0; i < per_ref.size(); ++i) {
    if (per_ref[i].skipped) {
      out.skipped.push_back(static_cast<std::int64_t>(i));
      continue;
    }
    for (std::size_t g = 0; g < per_ref[i].groups.size(); ++g) {
      out.reference_indices.push_back(static_cast<std::int64_t>(i));
      out.channels.push_back(per_ref[i].groups[g]);
      out.fallback_mask.push_back(per_ref[i].fallback[g]);
    }
  }
  return out;
}

GroupSet regroup(const ScanPlan& plan, const GroupSet& existing, RandomSeed seed) {
  return group_quadrants(plan, existing.params, seed);
}

}  // namespace ptychoforge::scan
