#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "bronchograph/volume.hpp"

namespace bronchograph {

struct SkelParams {
  double gamma = 6.0;            // medialness sharpness of the step cost
  double coverage_factor = 2.0;  // coverage radius as a multiple of the local EDT
};

struct SkeletonNode {
  std::size_t voxel = 0;  // linear index in the source grid
  Index3 ijk{};
  Vec3 mm{};
  double radius = 0.0;  // EDT at the voxel, mm
  int parent = -1;
};

/// Rooted voxel-path tree. Parents always precede their children in `nodes`.
struct SkeletonTree {
  Dims dims;
  Vec3 spacing{1.0, 1.0, 1.0};
  std::vector<SkeletonNode> nodes;
  int root = 0;
  std::vector<int> leaves;
  std::size_t other_components = 0;  // foreground components not skeletonized

  std::vector<std::vector<int>> children() const;
  std::vector<std::pair<int, int>> edges() const;
};

/// 26-connected component of the foreground containing `seed`, as a 0/1 mask.
std::vector<std::uint8_t> connected_component(const Volume& mask, std::size_t seed);

/// Number of 26-connected foreground components.
std::size_t count_components(const Volume& mask);

/// Returns the hint if given (must be foreground), otherwise the foreground
/// voxel of maximal EDT within the top 10% (by z) of slices that contain
/// foreground. Ties go to the highest slice, then the smallest linear index.
std::size_t select_root(const Volume& mask, const DistanceField& edt, std::optional<Index3> hint = std::nullopt);

/// Minimum path-cost tree skeleton of the component containing `root`.
///
/// A Dijkstra tree is grown from the root with step cost
/// `length_mm * exp(-gamma * EDT(target) / EDT_max)`. Starting from the root
/// alone, the uncovered voxel with maximal cost-to-skeleton is promoted to a
/// leaf and its Dijkstra path is traced back into the skeleton, until every
/// voxel lies within `max(coverage_factor * r, 1 voxel)` of its nearest
/// skeleton node (r = that node's radius). The new leaf is first moved up the
/// EDT along its own path; paths that then add less than
/// `max(2 * EDT(leaf), 3 voxels)` are rejected as spurs.
SkeletonTree extract_skeleton(const Volume& mask, const DistanceField& edt, std::size_t root,
                              const SkelParams& params = {});

}  // namespace bronchograph
