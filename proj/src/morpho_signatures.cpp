#include "bronchograph/morpho_signatures.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <numeric>
#include <set>

#include <Eigen/Dense>

namespace bronchograph {

namespace {

constexpr std::array<std::string_view, kNumDescriptors> kDescriptors = {"Stenosis", "Ectasia", "Tortuosity",
                                                                        "Divergence", "Length", "Complexity"};

bool in_component(const BranchLabel& l, int row) {
  return row < kNumLobes ? l.lobe == row : l.segment == row - kNumLobes;
}

std::vector<double> parsed_radii(const BranchNode& b) {
  if (b.radii.size() != b.centerline.size()) return b.radii;
  const std::size_t lo = b.own_begin();
  const std::size_t hi = b.children.empty() || b.radii.empty() ? b.radii.size() : b.radii.size() - 1;
  if (lo >= hi) return b.radii;
  return {b.radii.begin() + lo, b.radii.begin() + hi};
}

double mean_of(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); }

int lca_of(const AirwayGraph& g, const std::vector<int>& nodes) {
  int a = nodes.front();
  for (int n : nodes) a = g.lca(a, n);
  return a;
}

}  // namespace

std::string component_name(int row) {
  return row < kNumLobes ? std::string(lobe_names().at(row)) : std::string(segment_names().at(row - kNumLobes));
}

const std::array<std::string_view, kNumDescriptors>& descriptor_names() { return kDescriptors; }

std::vector<int> component_branches(const LabeledGraph& lg, int row) {
  std::vector<int> out;
  for (std::size_t i = 0; i < lg.labels.size(); ++i)
    if (in_component(lg.labels[i], row)) out.push_back(static_cast<int>(i));
  return out;
}

double branch_stenosis(const BranchNode& b) {
  const auto r = parsed_radii(b);
  if (r.empty() || std::adjacent_find(r.begin(), r.end(), std::not_equal_to<>()) == r.end()) return 0.0;
  const double mean = mean_of(r);
  // Rounding in the mean can push a constant profile just past the bound.
  return mean > 0 ? std::clamp(1.0 - *std::min_element(r.begin(), r.end()) / mean, 0.0, 1.0) : 0.0;
}

double branch_ectasia(const BranchNode& b) {
  const auto r = parsed_radii(b);
  if (r.empty() || std::adjacent_find(r.begin(), r.end(), std::not_equal_to<>()) == r.end()) return 1.0;
  const double mean = mean_of(r);
  return mean > 0 ? std::max(1.0, *std::max_element(r.begin(), r.end()) / mean) : 1.0;
}

double tortuosity_of_points(const std::vector<Vec3>& pts) {
  if (pts.size() < 3) return 0.0;
  Eigen::MatrixXd m(pts.size(), 3);
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (int a = 0; a < 3; ++a) m(i, a) = pts[i][a];
  const Eigen::RowVector3d centroid = m.colwise().mean();
  m.rowwise() -= centroid;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(m.transpose() * m);
  const Eigen::Vector3d axis = es.eigenvectors().col(2);
  const Eigen::VectorXd proj = m * axis;
  Eigen::Index smin = 0, smax = 0;
  proj.minCoeff(&smin);
  proj.maxCoeff(&smax);
  const Vec3 S = pts[smin], E = pts[smax];
  const Vec3 se = E - S;
  const double se2 = dot(se, se);
  if (se2 <= 0.0) return 0.0;

  double best = -1.0;
  std::size_t p = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double t = std::clamp(dot(pts[i] - S, se) / se2, 0.0, 1.0);
    const double d = norm(pts[i] - (S + t * se));
    if (d > best) {
      best = d;
      p = i;
    }
  }
  if (best <= 1e-9) return 0.0;  // collinear: alpha = pi
  const Vec3 ps = S - pts[p], pe = E - pts[p];
  const double c = std::clamp(dot(ps, pe) / (norm(ps) * norm(pe)), -1.0, 1.0);
  return 1.0 - std::acos(c) / std::numbers::pi;
}

double branch_tortuosity(const AirwayGraph& g, const BranchNode& b) {
  std::vector<Vec3> pts;
  for (auto v : b.centerline) pts.push_back(g.position(v));
  return tortuosity_of_points(pts);
}

std::vector<int> terminal_branches(const LabeledGraph& lg, int row) {
  std::vector<int> out;
  for (int b : component_branches(lg, row)) {
    const auto& kids = lg.graph.branches[b].children;
    if (std::none_of(kids.begin(), kids.end(), [&](int c) { return in_component(lg.labels[c], row); }))
      out.push_back(b);
  }
  return out;
}

double geodesic_length(const LabeledGraph& lg, int row) {
  const auto leaves = terminal_branches(lg, row);
  if (leaves.empty()) return -1.0;
  const auto& g = lg.graph;
  const int top = lca_of(g, leaves);
  const bool top_in = in_component(lg.labels[top], row);
  double total = 0.0;
  for (int leaf : leaves) {
    std::vector<int> path;  // leaf up to top, inclusive
    for (int n = leaf;; n = g.branches[n].parent) {
      path.push_back(n);
      if (n == top) break;
    }
    std::reverse(path.begin(), path.end());
    std::size_t start = 0;
    if (!top_in) {
      while (start < path.size() && !in_component(lg.labels[path[start]], row)) ++start;
    }
    for (std::size_t k = start; k < path.size(); ++k) total += g.branches[path[k]].length;
  }
  return total / leaves.size();
}

Cone minimal_enclosing_cone(const std::vector<Vec3>& directions) {
  if (directions.empty()) throw Error(ErrorCode::InvalidArgument, "no directions");
  std::vector<Vec3> v;
  for (const auto& d : directions) {
    const double n = norm(d);
    if (n <= 1e-12) throw Error(ErrorCode::DegenerateApex, "apex coincides with a leaf position");
    v.push_back((1.0 / n) * d);
  }
  auto score = [&](const Vec3& u) {
    double m = 1.0;
    for (const auto& x : v) m = std::min(m, dot(u, x));
    return m;
  };
  Cone best{v.front(), 0.0};
  double best_score = -2.0;
  auto consider = [&](Vec3 u) {
    const double n = norm(u);
    if (n <= 1e-12) return;
    u = (1.0 / n) * u;
    const double s = score(u);
    if (s > best_score + 1e-15) {
      best_score = s;
      best.axis = u;
    }
  };
  const std::size_t n = v.size();
  if (n <= 64) {
    // The optimum is determined by one, two or three active directions.
    for (std::size_t i = 0; i < n; ++i) {
      consider(v[i]);
      for (std::size_t j = i + 1; j < n; ++j) {
        consider(v[i] + v[j]);
        for (std::size_t k = j + 1; k < n; ++k) {
          const Vec3 c = cross(v[j] - v[i], v[k] - v[i]);
          consider(c);
          consider(-1.0 * c);
        }
      }
    }
  } else {
    Vec3 u{};
    for (const auto& x : v) u = u + x;
    consider(norm(u) > 1e-12 ? u : v.front());
    double step = 0.5;
    for (int it = 0; it < 20000 && step > 1e-12; ++it) {
      std::size_t worst = 0;
      double m = 2.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double s = dot(best.axis, v[i]);
        if (s < m) {
          m = s;
          worst = i;
        }
      }
      const double before = best_score;
      consider(best.axis + step * v[worst]);
      if (best_score <= before) step *= 0.5;
    }
  }
  best.half_angle = std::acos(std::clamp(best_score, -1.0, 1.0));
  return best;
}

double divergence(const LabeledGraph& lg, int row) {
  const auto leaves = terminal_branches(lg, row);
  if (leaves.empty()) return -1.0;
  if (leaves.size() == 1) return 0.0;
  const auto& g = lg.graph;
  const Vec3 apex = g.branches[lca_of(g, leaves)].end;
  std::vector<Vec3> dirs;
  for (int l : leaves) {
    const Vec3 d = g.branches[l].end - apex;
    if (norm(d) > 1e-12) dirs.push_back(d);
  }
  if (dirs.empty()) return 0.0;
  const auto cone = minimal_enclosing_cone(dirs);
  return std::min(2.0 * cone.half_angle / std::numbers::pi, 1.0);
}

double box_counting_dimension(const std::vector<Index3>& voxels, int pad_size) {
  if (voxels.empty()) return -1.0;
  Index3 lo = voxels.front(), hi = voxels.front();
  for (const auto& p : voxels)
    for (int a = 0; a < 3; ++a) {
      lo[a] = std::min(lo[a], p[a]);
      hi[a] = std::max(hi[a], p[a]);
    }
  int pad = std::max(pad_size, 4);
  const int extent = std::max({hi[0] - lo[0], hi[1] - lo[1], hi[2] - lo[2]}) + 1;
  while (pad < extent) pad *= 2;

  std::vector<double> xs, ys;
  for (int s = 2; s <= pad / 2; s *= 2) {
    std::set<std::array<int, 3>> boxes;
    for (const auto& p : voxels) boxes.insert({(p[0] - lo[0]) / s, (p[1] - lo[1]) / s, (p[2] - lo[2]) / s});
    xs.push_back(std::log(1.0 / s));
    ys.push_back(std::log(static_cast<double>(boxes.size())));
  }
  const double mx = mean_of(xs), my = mean_of(ys);
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  return sxx > 0 ? sxy / sxx : 0.0;
}

double complexity(const LabeledGraph& lg, int row, int pad_size) {
  std::set<std::size_t> vox;
  for (int b : component_branches(lg, row)) {
    const auto& cl = lg.graph.branches[b].centerline;
    vox.insert(cl.begin(), cl.end());
  }
  std::vector<Index3> pts;
  for (auto v : vox) pts.push_back(lg.graph.dims.coords(v));
  return box_counting_dimension(pts, pad_size);
}

SignatureMatrix signature_matrix(const LabeledGraph& lg, const SignatureParams& params) {
  SignatureMatrix m;
  for (int row = 0; row < kNumComponents; ++row) {
    auto& out = m.values[row];
    const auto members = component_branches(lg, row);
    if (members.empty()) {
      out.fill(-1.0);
      continue;
    }
    double s = 0, e = 0, t = 0;
    for (int b : members) {
      const auto& br = lg.graph.branches[b];
      s += branch_stenosis(br);
      e += branch_ectasia(br);
      t += branch_tortuosity(lg.graph, br);
    }
    const double n = static_cast<double>(members.size());
    out = {s / n, e / n, t / n, divergence(lg, row), geodesic_length(lg, row), complexity(lg, row, params.pad_size)};
  }
  return m;
}

void write_signature_csv(std::ostream& os, const SignatureMatrix& m) {
  os << "component";
  for (auto d : kDescriptors) os << ',' << d;
  os << '\n';
  char buf[64];
  for (int r = 0; r < kNumComponents; ++r) {
    os << component_name(r);
    for (double v : m.values[r]) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      os << ',' << buf;
    }
    os << '\n';
  }
}

}  // namespace bronchograph
