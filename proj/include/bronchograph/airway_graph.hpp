#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "bronchograph/mpc_skel.hpp"
#include "bronchograph/volume.hpp"

namespace bronchograph {

struct BranchNode {
  int id = 0;
  /// Centerline voxels, proximal to distal. Non-root branches start at the
  /// junction voxel they share with their parent.
  std::vector<std::size_t> centerline;
  std::vector<double> radii;          // EDT at each centerline voxel, mm
  std::vector<std::size_t> voxels;    // Ω: mask voxels nearest to this branch
  Vec3 start{}, end{};                // proximal / distal endpoint, mm
  int generation = 1;
  int parent = -1;
  std::vector<int> children;
  double mean_radius = 0.0;
  double length = 0.0;                // sum of spacing-weighted centerline steps, mm

  /// First centerline position not shared with the parent branch.
  std::size_t own_begin() const { return parent < 0 ? 0 : 1; }
};

class AirwayGraph {
 public:
  Dims dims;
  Vec3 spacing{1.0, 1.0, 1.0};
  std::vector<BranchNode> branches;
  int root = 0;
  Vec3 foreground_extent{1.0, 1.0, 1.0};  // physical bounding-box size of the mask, mm

  std::size_t size() const { return branches.size(); }
  bool has_matrices() const { return lca_.size() == size() * size() && !branches.empty(); }
  int lca(int i, int j) const { return lca_[static_cast<std::size_t>(i) * size() + j]; }
  /// Reflexive: every branch is its own descendant.
  bool is_ancestor(int i, int j) const { return descendant_[static_cast<std::size_t>(i) * size() + j] != 0; }
  std::vector<std::pair<int, int>> edges() const;
  std::vector<int> leaves() const;
  Vec3 position(std::size_t voxel) const;

  /// Fills parent/children/generation consistency and the LCA/descendant matrices.
  void compute_lca_and_descendants();

 private:
  std::vector<int> lca_;
  std::vector<std::uint8_t> descendant_;
};

/// Splits the skeleton into maximal junction-free paths (junction = node with
/// two or more children), assigns Ω by nearest centerline voxel, numbers
/// generations from 1 at the root, and fills the LCA/descendant matrices.
/// Internal branches shorter than the EDT radius at their proximal junction
/// are folded into the parent, so near-coincident junctions count as one.
AirwayGraph partition_branches(const SkeletonTree& skel, const Volume& mask, const DistanceField& edt);

/// Recomputes length, endpoints and mean radius from the centerline and radii.
void finalize_branch_geometry(AirwayGraph& g);

struct Betti {
  int beta0 = 0;
  int beta1 = 0;
  friend bool operator==(const Betti&, const Betti&) = default;
};

Betti betti_numbers(std::size_t node_count, const std::vector<std::pair<int, int>>& edges);
Betti betti_numbers(const SkeletonTree& t);

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // population
};
MeanStd mean_branch_count(const std::vector<std::size_t>& counts);
MeanStd mean_branch_count(const std::vector<AirwayGraph>& cohort);

/// Parity detector: skeleton voxels with at least `min_neighbors` skeleton
/// voxels in their 26-neighborhood.
std::size_t voxel_branch_points(const SkeletonTree& t, int min_neighbors = 3);

}  // namespace bronchograph
