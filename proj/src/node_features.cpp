#include "bronchograph/node_features.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <numbers>

namespace bronchograph {

std::array<double, 11> FeatureVector::values() const {
  return {static_cast<double>(G), RP[0], RP[1], RP[2], theta[0], theta[1], theta[2], L, PL[0], PL[1], PL[2]};
}

Vec3 branch_centroid(const AirwayGraph& g, int id) {
  const auto& b = g.branches.at(id);
  const auto& src = b.voxels.empty() ? b.centerline : b.voxels;
  Vec3 c{};
  for (auto v : src) c = c + g.position(v);
  return src.empty() ? c : (1.0 / static_cast<double>(src.size())) * c;
}

FeatureVector branch_features(const AirwayGraph& g, int id, bool strict) {
  if (id < 0 || static_cast<std::size_t>(id) >= g.size()) throw Error(ErrorCode::OutOfBounds, "no such branch");
  const auto& b = g.branches[id];
  FeatureVector f;
  f.id = id;
  f.G = b.generation;
  const Vec3 rel = branch_centroid(g, id) - branch_centroid(g, g.root);
  for (int a = 0; a < 3; ++a) f.RP[a] = rel[a] / g.foreground_extent[a];

  const Vec3 v = b.end - b.start;
  const double len = norm(v);
  if (len <= 0.0) {
    if (strict) throw Error(ErrorCode::ZeroLengthBranch, "branch " + std::to_string(id) + " has coincident endpoints");
    f.theta = {90.0, 90.0, 90.0};
    return f;
  }
  f.L = b.length;
  for (int a = 0; a < 3; ++a) {
    const double c = std::clamp(v[a] / len, -1.0, 1.0);
    f.theta[a] = std::acos(c) * 180.0 / std::numbers::pi;
    f.PL[a] = std::abs(v[a]);
  }
  return f;
}

std::vector<FeatureVector> all_features(const AirwayGraph& g) {
  std::vector<FeatureVector> out;
  out.reserve(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) out.push_back(branch_features(g, static_cast<int>(i)));
  return out;
}

void write_features_csv(std::ostream& os, const std::vector<FeatureVector>& f) {
  os << "branch_id";
  for (auto c : FeatureVector::kColumns) os << ',' << c;
  os << '\n';
  char buf[64];
  for (const auto& r : f) {
    os << r.id;
    for (double v : r.values()) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      os << ',' << buf;
    }
    os << '\n';
  }
}

}  // namespace bronchograph
