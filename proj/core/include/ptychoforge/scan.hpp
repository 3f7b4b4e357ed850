#pragma once

#include <array>
#include <cstdint>
#include <string_view>
#include <vector>

#include "ptychoforge/random.hpp"

namespace ptychoforge::scan {

struct Position {
  double x = 0.0;  // column coordinate, pixels
  double y = 0.0;  // row coordinate, pixels

  bool operator==(const Position&) const = default;
};

enum class Pattern { Isotropic, Rectangular, Spiral };

std::string_view pattern_name(Pattern pattern) noexcept;
Pattern parse_pattern(std::string_view name);

struct ScanPlan {
  std::vector<Position> positions;  // acquisition order
  Pattern pattern = Pattern::Isotropic;
  double step_x = 0.0;
  double step_y = 0.0;
  double jitter_sigma = 0.0;

  [[nodiscard]] std::size_t size() const noexcept { return positions.size(); }
  void validate() const;
  bool operator==(const ScanPlan&) const = default;
};

struct ScanSpec {
  Pattern pattern = Pattern::Isotropic;
  double extent_x = 0.0;  // pixels spanned by the raster or spiral
  double extent_y = 0.0;
  double step_x = 1.0;
  double step_y = 1.0;  // ignored for spirals
  double jitter_sigma = 0.0;
  double origin_x = 0.0;  // coordinate of the first raster column / row
  double origin_y = 0.0;
  std::size_t spiral_points = 0;  // 0 fills the disk inscribed in the extent
};

/// Raster grids (row-major, Gaussian jitter per axis) or Fermat spirals whose
/// mean nearest-neighbour spacing approximates step_x.
ScanPlan make_scan(const ScanSpec& spec, RandomSeed seed);

// --- quadrant grouping ---------------------------------------------------------

inline constexpr std::size_t kChannels = 4;

/// Channel of a neighbour at offset (dx, dy) from its reference:
/// 0: (x<0, y>0), 1: (x>0, y>0), 2: (x<0, y<0), 3: (x>0, y<0).
/// A zero component counts as positive.
constexpr std::size_t quadrant_of(double dx, double dy) noexcept {
  const bool x_neg = dx < 0.0;
  const bool y_neg = dy < 0.0;
  if (!y_neg) return x_neg ? 0 : 1;
  return x_neg ? 2 : 3;
}

enum class EmptyQuadrantPolicy {
  Skip,      // reference goes to the skip list when a quadrant stays empty after self-use
  Fallback,  // borrow unused candidates from other quadrants and flag the group
};

struct GroupingParams {
  double d_min = 0.0;
  double d_max = 0.0;
  std::size_t groups_per_reference = 1;
  std::size_t top_n = 12;
  EmptyQuadrantPolicy policy = EmptyQuadrantPolicy::Skip;

  bool operator==(const GroupingParams&) const = default;
};

/// d_min/d_max at the default [0.3, 1.8] x mean step of the plan.
GroupingParams default_grouping(const ScanPlan& plan);

struct GroupSet {
  std::vector<std::int64_t> reference_indices;
  std::vector<std::array<std::int64_t, kChannels>> channels;
  std::vector<std::uint8_t> fallback_mask;  // per group, bit c set when channel c was borrowed
  std::vector<std::int64_t> skipped;        // references that could not form a group
  GroupingParams params;

  [[nodiscard]] std::size_t size() const noexcept { return reference_indices.size(); }
  bool operator==(const GroupSet&) const = default;
};

GroupSet group_quadrants(const ScanPlan& plan, const GroupingParams& params, RandomSeed seed);

/// Re-samples groups with a new seed under the parameters recorded in existing.
GroupSet regroup(const ScanPlan& plan, const GroupSet& existing, RandomSeed seed);

/// Static 2D KD-tree over scan positions.
class KdTree {
 public:
  explicit KdTree(std::vector<Position> points);

  /// Indices of points within distance radius of the query (inclusive).
  [[nodiscard]] std::vector<std::size_t> radius_search(Position query, double radius) const;

 private:
  struct Node {
    std::size_t point = 0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    std::uint8_t axis = 0;
  };

  std::int32_t build(std::vector<std::size_t>& order, std::size_t lo, std::size_t hi, int depth);
  void search(std::int32_t node, Position q, double r2, std::vector<std::size_t>& out) const;

  std::vector<Position> points_;
  std::vector<Node> nodes_;
  std::int32_t root_ = -1;
};

}  // namespace ptychoforge::scan
