#pragma once

#include <array>
#include <ostream>
#include <vector>

#include "bronchograph/airway_graph.hpp"

namespace bronchograph {

struct FeatureVector {
  int id = 0;
  int G = 1;
  Vec3 RP{};     // centroid offset from the trachea branch, per unit of foreground extent
  Vec3 theta{};  // degrees between E - S and each positive axis
  double L = 0;  // centerline arc length, mm
  Vec3 PL{};     // |v . axis|, mm

  static constexpr std::array<const char*, 11> kColumns = {"G",      "RPx",    "RPy", "RPz", "theta_x", "theta_y",
                                                           "theta_z", "L", "PLx", "PLy", "PLz"};
  std::array<double, 11> values() const;
};

/// Centroid of the branch in mm: of Ω when present, otherwise of its centerline.
Vec3 branch_centroid(const AirwayGraph& g, int id);

/// `strict` raises ZeroLengthBranch for a branch whose endpoints coincide;
/// otherwise such a branch gets theta = 90 on every axis and zero lengths.
FeatureVector branch_features(const AirwayGraph& g, int id, bool strict = false);
std::vector<FeatureVector> all_features(const AirwayGraph& g);

void write_features_csv(std::ostream& os, const std::vector<FeatureVector>& f);

}  // namespace bronchograph
