#pragma once

#include <array>
#include <ostream>
#include <string>
#include <vector>

#include "bronchograph/label_taxonomy.hpp"

namespace bronchograph {

inline constexpr int kNumComponents = kNumLobes + kNumSegments;  // 23
inline constexpr int kNumDescriptors = 6;

/// Row r < 5 is lobe r, otherwise segment r - 5.
std::string component_name(int row);
const std::array<std::string_view, kNumDescriptors>& descriptor_names();  // S, E, T, D, L, C

struct SignatureMatrix {
  std::array<std::array<double, kNumDescriptors>, kNumComponents> values{};
  bool present(int row) const { return values[row][0] != -1.0; }
};

struct SignatureParams {
  int pad_size = 64;
};

/// Branches of a component: lobe == K for rows 0..4, segment == K otherwise.
std::vector<int> component_branches(const LabeledGraph& lg, int row);

// Per-branch ratios use the branch's centerline radii without junction
// voxels (falling back to the whole centerline when nothing else is left).
double branch_stenosis(const BranchNode& b);
double branch_ectasia(const BranchNode& b);

/// 1 - alpha/pi, with S and E the extreme centerline points along the first
/// principal axis and P the centerline point farthest from segment SE.
double branch_tortuosity(const AirwayGraph& g, const BranchNode& b);
double tortuosity_of_points(const std::vector<Vec3>& pts);

/// Branches of the component with no child in the same component.
std::vector<int> terminal_branches(const LabeledGraph& lg, int row);

double geodesic_length(const LabeledGraph& lg, int row);

struct Cone {
  Vec3 axis{};
  double half_angle = 0.0;  // radians
};
/// Smallest cone around unit-normalized directions; throws DegenerateApex on a zero vector.
Cone minimal_enclosing_cone(const std::vector<Vec3>& directions);
double divergence(const LabeledGraph& lg, int row);

/// Box-counting slope for a voxel set cropped to its bounding box and padded to
/// `pad_size` (raised to the next power of two when the box is larger). Box
/// sizes 2, 4, ..., pad/2. Empty input gives -1.
double box_counting_dimension(const std::vector<Index3>& voxels, int pad_size = 64);
double complexity(const LabeledGraph& lg, int row, int pad_size = 64);

SignatureMatrix signature_matrix(const LabeledGraph& lg, const SignatureParams& params = {});

void write_signature_csv(std::ostream& os, const SignatureMatrix& m);

}  // namespace bronchograph
