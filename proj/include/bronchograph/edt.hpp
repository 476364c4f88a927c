#pragma once

#include <cstdint>
#include <vector>

#include "bronchograph/volume.hpp"

namespace bronchograph {

/// Exact Euclidean distance transform of a binary mask under anisotropic spacing.
///
/// Each foreground voxel receives the distance (mm) from its center to the
/// nearest background voxel center. The grid exterior counts as background: a
/// virtual layer of background voxels sits one voxel outside every face, so
/// masks touching the border get finite, boundary-limited radii. Background
/// voxels are exactly 0.
DistanceField distance_transform(const Volume& mask);

/// Nearest-site transform without the virtual border. `sites[i] != 0` marks a
/// site. Voxels with no site anywhere get +inf and nearest = -1.
struct FeatureTransform {
  std::vector<double> sq_distance;  // squared mm
  std::vector<std::int64_t> nearest;  // linear index of a nearest site
};
FeatureTransform feature_transform(const Dims& dims, const Vec3& spacing, const std::vector<std::uint8_t>& sites);

}  // namespace bronchograph
