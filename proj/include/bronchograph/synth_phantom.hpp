#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "bronchograph/label_taxonomy.hpp"
#include "bronchograph/volume.hpp"

namespace bronchograph {

struct PhantomBranch {
  std::string name;
  int parent = -1;
  std::vector<Vec3> points;    // polyline in mm, proximal to distal; a child starts at its parent's last point
  std::vector<double> radii;   // mm, one per point, linearly interpolated in between
  std::string label;           // class name from the canonical codebook, empty for unlabeled
};

struct PhantomSpec {
  std::string name;
  Vec3 spacing{1.0, 1.0, 1.0};
  Dims dims{};  // zero extent: fitted around the branches with `margin_mm`
  double margin_mm = 4.0;
  std::uint64_t seed = 0;
  std::vector<PhantomBranch> branches;
};

struct Phantom {
  Volume mask;
  Volume labels;
  LabeledGraph truth;
};

/// Foreground = voxels strictly closer to some branch polyline than the
/// interpolated radius, plus a ball of the largest incident radius at every
/// junction. Ω of the truth graph is the nearest branch of each voxel.
Phantom render_phantom(const PhantomSpec& spec);

/// Throws SpecOverlap when two branches that are neither parent/child nor
/// siblings come closer than the sum of their radii.
void check_overlap(const PhantomSpec& spec);

std::vector<std::string> phantom_names();
/// Library fixture by name at the given spacing (InvalidArgument if unknown).
PhantomSpec phantom_spec(const std::string& name, Vec3 spacing = {1.0, 1.0, 1.0});

/// Random branching tree with `2 <= branches <= max_branches` tubes (a single
/// child is a kinked continuation), radii of at least two voxels, no overlaps.
PhantomSpec random_tree_spec(std::uint64_t seed, int max_branches = 30);

/// Graph-only labeled tree: node i has parent nodes[i].first (-1 for the root,
/// parents precede children) and class name nodes[i].second ("" = Trunk).
LabeledGraph labeled_tree(const std::vector<std::pair<int, std::string>>& nodes);

}  // namespace bronchograph
