#include "bronchograph/synth_phantom.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <random>

namespace bronchograph {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Closest {
  double dist;
  double radius;
};

// Distance from p to segment ab and the radius interpolated at the foot point.
Closest to_segment(const Vec3& p, const Vec3& a, const Vec3& b, double ra, double rb) {
  const Vec3 ab = b - a;
  const double len2 = dot(ab, ab);
  const double t = len2 > 0 ? std::clamp(dot(p - a, ab) / len2, 0.0, 1.0) : 0.0;
  return {norm(p - (a + t * ab)), ra + (rb - ra) * t};
}

double polyline_length(const std::vector<Vec3>& pts) {
  double l = 0;
  for (std::size_t k = 1; k < pts.size(); ++k) l += norm(pts[k] - pts[k - 1]);
  return l;
}

void validate(const PhantomSpec& spec) {
  check_spacing(spec.spacing);
  if (spec.branches.empty()) throw Error(ErrorCode::InvalidArgument, "phantom has no branches");
  for (std::size_t i = 0; i < spec.branches.size(); ++i) {
    const auto& b = spec.branches[i];
    if (b.points.size() < 2 || b.radii.size() != b.points.size())
      throw Error(ErrorCode::InvalidArgument, "branch " + b.name + " needs >= 2 points with one radius each");
    if ((i == 0) != (b.parent < 0) || b.parent >= static_cast<int>(i))
      throw Error(ErrorCode::InvalidArgument, "branch " + b.name + ": parents must precede children, single root");
    if (b.parent >= 0 && norm(b.points.front() - spec.branches[b.parent].points.back()) > 1e-9)
      throw Error(ErrorCode::InvalidArgument, "branch " + b.name + " does not start at its parent's end");
    for (double r : b.radii)
      if (!(r > 0)) throw Error(ErrorCode::InvalidArgument, "branch " + b.name + " has a non-positive radius");
  }
}

Dims fitted_dims(const PhantomSpec& spec) {
  if (spec.dims.nx > 0) return spec.dims;
  Vec3 hi{0, 0, 0};
  for (const auto& b : spec.branches)
    for (std::size_t k = 0; k < b.points.size(); ++k)
      for (int a = 0; a < 3; ++a) hi[a] = std::max(hi[a], b.points[k][a] + b.radii[k]);
  Dims d;
  d.nx = static_cast<int>(std::ceil((hi[0] + spec.margin_mm) / spec.spacing[0])) + 1;
  d.ny = static_cast<int>(std::ceil((hi[1] + spec.margin_mm) / spec.spacing[1])) + 1;
  d.nz = static_cast<int>(std::ceil((hi[2] + spec.margin_mm) / spec.spacing[2])) + 1;
  return d;
}

std::vector<std::size_t> rasterize(const std::vector<Vec3>& pts, const Dims& d, const Vec3& s) {
  std::vector<std::size_t> out;
  const double step = 0.25 * std::min({s[0], s[1], s[2]});
  auto push = [&](const Vec3& p) {
    const int x = static_cast<int>(std::lround(p[0] / s[0]));
    const int y = static_cast<int>(std::lround(p[1] / s[1]));
    const int z = static_cast<int>(std::lround(p[2] / s[2]));
    if (!d.contains(x, y, z)) throw Error(ErrorCode::OutOfBounds, "phantom centerline leaves the volume");
    const auto idx = d.index(x, y, z);
    if (out.empty() || out.back() != idx) out.push_back(idx);
  };
  for (std::size_t k = 1; k < pts.size(); ++k) {
    const Vec3 ab = pts[k] - pts[k - 1];
    const int n = std::max(1, static_cast<int>(std::ceil(norm(ab) / step)));
    for (int i = (k == 1 ? 0 : 1); i <= n; ++i) push(pts[k - 1] + (static_cast<double>(i) / n) * ab);
  }
  return out;
}

}  // namespace

void check_overlap(const PhantomSpec& spec) {
  const auto& br = spec.branches;
  const double clearance = 2.0 * std::max({spec.spacing[0], spec.spacing[1], spec.spacing[2]});
  for (std::size_t i = 0; i < br.size(); ++i) {
    for (std::size_t j = i + 1; j < br.size(); ++j) {
      const bool related = br[j].parent == static_cast<int>(i) || br[i].parent == static_cast<int>(j) ||
                           (br[i].parent >= 0 && br[i].parent == br[j].parent);
      if (related) continue;
      for (std::size_t a = 1; a < br[i].points.size(); ++a) {
        const Vec3 p0 = br[i].points[a - 1], seg = br[i].points[a] - p0;
        const int n = std::max(2, static_cast<int>(std::ceil(norm(seg) / 0.5)));
        for (int t = 0; t <= n; ++t) {
          const double f = static_cast<double>(t) / n;
          const Vec3 p = p0 + f * seg;
          const double rp = br[i].radii[a - 1] + (br[i].radii[a] - br[i].radii[a - 1]) * f;
          for (std::size_t b = 1; b < br[j].points.size(); ++b) {
            const auto c = to_segment(p, br[j].points[b - 1], br[j].points[b], br[j].radii[b - 1], br[j].radii[b]);
            if (c.dist < rp + c.radius + clearance)
              throw Error(ErrorCode::SpecOverlap, "branches " + br[i].name + " and " + br[j].name + " overlap");
          }
        }
      }
    }
  }
}

Phantom render_phantom(const PhantomSpec& spec) {
  validate(spec);
  check_overlap(spec);
  const Dims d = fitted_dims(spec);
  const Vec3 s = spec.spacing;
  for (const auto& b : spec.branches)
    for (std::size_t k = 0; k < b.points.size(); ++k)
      for (int a = 0; a < 3; ++a)
        if (b.points[k][a] - b.radii[k] < 0 || b.points[k][a] + b.radii[k] > (d.extent(a) - 1) * s[a])
          throw Error(ErrorCode::OutOfBounds, "branch " + b.name + " does not fit in the volume");

  const auto codebook = Codebook::canonical();
  std::vector<int> label_id(spec.branches.size(), 0);
  for (std::size_t i = 0; i < spec.branches.size(); ++i) {
    const auto& name = spec.branches[i].label;
    if (name.empty()) continue;
    const auto c = parse_class_name(name);
    if (!c) throw Error(ErrorCode::UnknownLabelId, "unknown phantom label " + name);
    label_id[i] = *codebook.id_of(*c);
  }

  Phantom out{Volume(d, s, VolumeKind::Binary), Volume(d, s, VolumeKind::Labels), {}};
  std::vector<double> best(d.count(), kInf);
  std::vector<int> owner(d.count(), -1);

  auto box_loop = [&](Vec3 lo, Vec3 hi, auto&& fn) {
    Index3 a, b;
    for (int k = 0; k < 3; ++k) {
      a[k] = std::max(0, static_cast<int>(std::floor(lo[k] / s[k])));
      b[k] = std::min(d.extent(k) - 1, static_cast<int>(std::ceil(hi[k] / s[k])));
    }
    for (int z = a[2]; z <= b[2]; ++z)
      for (int y = a[1]; y <= b[1]; ++y)
        for (int x = a[0]; x <= b[0]; ++x) fn(d.index(x, y, z), Vec3{x * s[0], y * s[1], z * s[2]});
  };

  for (std::size_t i = 0; i < spec.branches.size(); ++i) {
    const auto& b = spec.branches[i];
    for (std::size_t k = 1; k < b.points.size(); ++k) {
      const Vec3 p0 = b.points[k - 1], p1 = b.points[k];
      const double r = std::max(b.radii[k - 1], b.radii[k]);
      Vec3 lo, hi;
      for (int a = 0; a < 3; ++a) {
        lo[a] = std::min(p0[a], p1[a]) - r;
        hi[a] = std::max(p0[a], p1[a]) + r;
      }
      box_loop(lo, hi, [&](std::size_t idx, const Vec3& p) {
        const auto c = to_segment(p, p0, p1, b.radii[k - 1], b.radii[k]);
        if (c.dist < c.radius) out.mask[idx] = 1;
        if (c.dist < best[idx]) {
          best[idx] = c.dist;
          owner[idx] = static_cast<int>(i);
        }
      });
    }
  }
  // Junction balls of the largest incident radius.
  std::map<int, double> junction_r;
  for (const auto& b : spec.branches) {
    if (b.parent < 0) continue;
    auto& r = junction_r[b.parent];
    r = std::max({r, spec.branches[b.parent].radii.back(), b.radii.front()});
  }
  for (const auto& [parent, r] : junction_r) {
    const Vec3 c = spec.branches[parent].points.back();
    box_loop(c - Vec3{r, r, r}, c + Vec3{r, r, r}, [&](std::size_t idx, const Vec3& p) {
      if (norm(p - c) < r) out.mask[idx] = 1;
    });
  }

  auto& g = out.truth.graph;
  g.dims = d;
  g.spacing = s;
  for (std::size_t i = 0; i < spec.branches.size(); ++i) {
    const auto& sb = spec.branches[i];
    BranchNode b;
    b.id = static_cast<int>(i);
    b.parent = sb.parent;
    b.centerline = rasterize(sb.points, d, s);
    for (auto v : b.centerline) {
      const auto q = d.coords(v);
      const Vec3 p{q[0] * s[0], q[1] * s[1], q[2] * s[2]};
      Closest c{kInf, 0};
      for (std::size_t k = 1; k < sb.points.size(); ++k) {
        const auto cc = to_segment(p, sb.points[k - 1], sb.points[k], sb.radii[k - 1], sb.radii[k]);
        if (cc.dist < c.dist) c = cc;
      }
      b.radii.push_back(c.radius);
    }
    b.start = sb.points.front();
    b.end = sb.points.back();
    b.length = polyline_length(sb.points);
    double rsum = 0;
    for (double r : b.radii) rsum += r;
    b.mean_radius = rsum / b.radii.size();
    g.branches.push_back(std::move(b));
  }
  g.root = 0;
  g.compute_lca_and_descendants();

  Index3 lo{d.nx, d.ny, d.nz}, hi{-1, -1, -1};
  for (std::size_t v = 0; v < d.count(); ++v) {
    if (!out.mask[v]) continue;
    // Junction-ball voxels outside every tube go to the nearest tube.
    const int o = owner[v] >= 0 ? owner[v] : 0;
    g.branches[o].voxels.push_back(v);
    if (label_id[o]) out.labels[v] = static_cast<std::uint16_t>(label_id[o]);
    const auto p = d.coords(v);
    for (int a = 0; a < 3; ++a) {
      lo[a] = std::min(lo[a], p[a]);
      hi[a] = std::max(hi[a], p[a]);
    }
  }
  for (int a = 0; a < 3; ++a) g.foreground_extent[a] = hi[a] >= lo[a] ? (hi[a] - lo[a] + 1) * s[a] : s[a];

  out.truth.labels.assign(g.size(), {});
  for (std::size_t i = 0; i < spec.branches.size(); ++i) {
    if (spec.branches[i].label.empty()) continue;
    const auto c = *parse_class_name(spec.branches[i].label);
    out.truth.labels[i] = {c.lobe, c.segment, c.code};
  }
  return out;
}

namespace {

PhantomBranch tube(std::string name, int parent, std::vector<Vec3> pts, std::vector<double> radii,
                   std::string label = "") {
  return {std::move(name), parent, std::move(pts), std::move(radii), std::move(label)};
}

// Builds a spec from a tree of (parent, direction, length, radius, label) steps
// starting at `origin`, each child continuing from its parent's end.
struct Step {
  int parent;
  Vec3 dir;
  double length;
  double radius;
  std::string label;
};

PhantomSpec from_steps(std::string name, Vec3 origin, const std::vector<Step>& steps) {
  PhantomSpec spec;
  spec.name = std::move(name);
  for (std::size_t i = 0; i < steps.size(); ++i) {
    const auto& st = steps[i];
    const Vec3 start = st.parent < 0 ? origin : spec.branches[st.parent].points.back();
    const Vec3 end = start + (st.length / norm(st.dir)) * st.dir;
    spec.branches.push_back(tube(spec.name + "_" + std::to_string(i), st.parent, {start, end},
                                 {st.radius, st.radius}, st.label));
  }
  return spec;
}

PhantomSpec scaled_spacing(PhantomSpec spec, Vec3 spacing) {
  spec.spacing = spacing;
  return spec;
}

PhantomSpec make_library_spec(const std::string& name) {
  const double pi = std::numbers::pi;
  if (name == "straight_tube") {
    PhantomSpec s;
    s.name = name;
    s.branches.push_back(tube("tube", -1, {{8, 8, 68}, {8, 8, 8}}, {2.0, 2.0}));
    return s;
  }
  if (name == "stenotic_tube" || name == "bulged_tube") {
    const bool waist = name == "stenotic_tube";
    const double base = waist ? 4.0 : 2.0, mid = waist ? 2.0 : 4.0;
    PhantomSpec s;
    s.name = name;
    std::vector<Vec3> pts;
    std::vector<double> r;
    for (double z : {76.0, 56.0, 44.0, 36.0, 24.0, 4.0}) pts.push_back({10, 10, z + 4});
    r = {base, base, mid, mid, base, base};
    s.branches.push_back(tube("tube", -1, pts, r));
    return s;
  }
  if (name == "elbow") {
    PhantomSpec s;
    s.name = name;
    s.branches.push_back(tube("elbow", -1, {{6, 6, 46}, {6, 6, 6}, {46, 6, 6}}, {2.0, 2.0, 2.0}));
    return s;
  }
  if (name == "semicircle") {
    PhantomSpec s;
    s.name = name;
    std::vector<Vec3> pts;
    std::vector<double> r;
    const double R = 24.0;
    // Both ends on x = 6 with the top end first; the arc bulges toward +x.
    for (int k = 0; k <= 48; ++k) {
      const double a = pi * k / 48.0;
      pts.push_back({6.0 + R * std::sin(a), 6.0, 6.0 + R + R * std::cos(a)});
      r.push_back(2.0);
    }
    s.branches.push_back(tube("arc", -1, pts, r));
    return s;
  }
  if (name == "y_tube") {
    return from_steps(name, {30, 14, 70}, {{-1, {0, 0, -1}, 24, 3.0, ""},
                                           {0, {-1, 0, -1}, 30, 2.5, ""},
                                           {0, {1, 0, -1}, 30, 2.5, ""}});
  }
  if (name == "trifurcation") {
    const double c = std::cos(2 * pi / 3), s3 = std::sin(2 * pi / 3);
    return from_steps(name, {30, 30, 70}, {{-1, {0, 0, -1}, 24, 3.0, ""},
                                           {0, {1, 0, -1}, 28, 2.5, ""},
                                           {0, {c, s3, -1}, 28, 2.5, ""},
                                           {0, {c, -s3, -1}, 28, 2.5, ""}});
  }
  if (name == "two_leaf_cone") {
    // Two leaves 90 degrees apart around the apex at the trunk's end.
    return from_steps(name, {30, 14, 70}, {{-1, {0, 0, -1}, 20, 3.0, "RMB"},
                                           {0, {-1, 0, -1}, 30, 2.5, "RB4a+b"},
                                           {0, {1, 0, -1}, 30, 2.5, "RB4a+b"}});
  }
  if (name == "rmb") {
    return from_steps(name, {30, 14, 70}, {{-1, {0, 0, -1}, 20, 3.0, "RMB"},
                                           {0, {-1, 0, -1}, 28, 2.5, "RB4a+b"},
                                           {0, {1, 0, -1}, 28, 2.5, "RB5a+b"}});
  }
  if (name == "llb_b9_10") {
    return from_steps(name, {44, 44, 90},
                      {{-1, {0, 0, -1}, 20, 3.5, "LLB"},
                       {0, {-1, 0, -0.6}, 26, 2.5, "LB6"},
                       {0, {0, -1, -0.6}, 26, 2.5, "LB8"},
                       {0, {0.5, 0.5, -1}, 18, 3.0, "LLB"},
                       {3, {1, 0, -0.6}, 24, 2.2, "LB9"},
                       {3, {0, 1, -0.6}, 24, 2.2, "LB10"}});
  }
  if (name.starts_with("lb12_")) {
    // Upper division trunk -> LB1+2 family, with LB3 alongside.
    const std::string v = name.substr(5);
    std::vector<Step> st = {{-1, {0, 0, -1}, 18, 4.0, "LUB"}, {0, {1, 0, -0.4}, 26, 2.5, "LB3"}};
    auto add = [&](int parent, Vec3 dir, double len, double r, const std::string& label) {
      st.push_back({parent, dir, len, r, label});
      return static_cast<int>(st.size()) - 1;
    };
    const bool one_stem = !v.starts_with("2stem");
    const std::string co = one_stem ? v : v.substr(6);
    int base = 0;
    if (one_stem) base = add(0, {-1, 0, -0.6}, 16, 3.0, "LB1+2-stem");
    const Vec3 da{-1, -1, -1.2}, db{-1, 1, -1.2}, dc{-1.4, 0, -0.2};
    if (co == "tri") {
      add(base, da, 22, 2.0, "LB1+2a");
      add(base, db, 22, 2.0, "LB1+2b");
      add(base, dc, 22, 2.0, "LB1+2c");
    } else {
      const std::string pair = co;  // "ab", "bc", "ac"
      const char lone = pair == "ab" ? 'c' : (pair == "bc" ? 'a' : 'b');
      const std::string cot = std::string(1, pair[0]) + "+" + pair[1];
      // For a two-stem layout without a default subsegment the co-trunk hangs off the lobar trunk.
      // The co-trunk leans away from the lone subsegment so the two separate cleanly.
      const Vec3 ct_dir = lone == 'c' ? Vec3{-0.3, 0, -1} : Vec3{-1, lone == 'a' ? 0.6 : -0.6, -1};
      const Vec3 lone_dir = lone == 'c' ? dc : Vec3{-0.2, lone == 'a' ? -1.0 : 1.0, -0.4};
      const int ct = add(base, ct_dir, 14, 2.5, "LB1+2" + cot);
      auto dir_of = [&](char c) { return c == 'a' ? da : (c == 'b' ? db : dc); };
      add(ct, dir_of(pair[0]), 20, 2.0, std::string("LB1+2") + pair[0]);
      add(ct, dir_of(pair[1]), 20, 2.0, std::string("LB1+2") + pair[1]);
      add(base, lone_dir, 24, 2.0, std::string("LB1+2") + lone);
    }
    return from_steps(name, {60, 40, 80}, st);
  }
  if (name == "lingula_b4a") {
    return from_steps(name, {40, 40, 80},
                      {{-1, {0, 0, -1}, 18, 3.5, "LUB"},
                       {0, {-1, 0, -0.7}, 22, 2.2, "LB4a"},
                       {0, {1, 0, -1}, 16, 3.0, "LUB"},
                       {2, {0, -1, -0.8}, 22, 2.2, "LB4b"},
                       {2, {1, 0.3, -0.8}, 14, 2.6, "LB5-stem"},
                       {4, {0.5, 1, -0.8}, 18, 2.0, "LB5a"},
                       {4, {1, -0.6, -0.8}, 18, 2.0, "LB5b"}});
  }
  throw Error(ErrorCode::InvalidArgument, "unknown phantom " + name);
}

// Moves all points so that the lower corner of every tube sits at (or just past) the margin.
PhantomSpec anchored(PhantomSpec spec) {
  Vec3 lo{kInf, kInf, kInf};
  for (const auto& b : spec.branches)
    for (std::size_t k = 0; k < b.points.size(); ++k)
      for (int a = 0; a < 3; ++a) lo[a] = std::min(lo[a], b.points[k][a] - b.radii[k]);
  // Whole-mm shifts keep integer library coordinates on voxel centers.
  const Vec3 shift{std::ceil(spec.margin_mm - lo[0]), std::ceil(spec.margin_mm - lo[1]), std::ceil(spec.margin_mm - lo[2])};
  for (auto& b : spec.branches)
    for (auto& p : b.points) p = p + shift;
  return spec;
}

}  // namespace

std::vector<std::string> phantom_names() {
  return {"straight_tube", "stenotic_tube", "bulged_tube", "elbow",      "semicircle",   "y_tube",
          "trifurcation",  "two_leaf_cone", "rmb",         "llb_b9_10",  "lb12_ab",      "lb12_bc",
          "lb12_ac",       "lb12_tri",      "lb12_2stem_ab", "lb12_2stem_bc", "lb12_2stem_ac", "lingula_b4a"};
}

PhantomSpec phantom_spec(const std::string& name, Vec3 spacing) {
  return scaled_spacing(anchored(make_library_spec(name)), spacing);
}

PhantomSpec random_tree_spec(std::uint64_t seed, int max_branches) {
  std::mt19937_64 rng(seed);
  auto uni = [&](double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); };
  const double pi = std::numbers::pi;
  const int target = std::uniform_int_distribution<int>(2, std::max(2, max_branches))(rng);

  PhantomSpec spec;
  spec.name = "random_" + std::to_string(seed);
  spec.seed = seed;
  spec.margin_mm = 4.0;
  const double r0 = uni(3.5, 5.0);
  spec.branches.push_back(tube("b0", -1, {{0, 0, 0}, {0, 0, -uni(5, 7) * r0}}, {r0, r0}));

  auto unit = [](Vec3 v) { return (1.0 / norm(v)) * v; };
  std::vector<int> open{0};
  while (static_cast<int>(spec.branches.size()) < target && !open.empty()) {
    const auto pick = std::uniform_int_distribution<std::size_t>(0, open.size() - 1)(rng);
    const int leaf = open[pick];
    open.erase(open.begin() + static_cast<std::ptrdiff_t>(pick));
    const auto& pb = spec.branches[leaf];
    const Vec3 axis = unit(pb.points.back() - pb.points.front());
    Vec3 helper = std::abs(axis[0]) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
    const Vec3 e1 = unit(cross(axis, helper)), e2 = cross(axis, e1);
    const int remaining = target - static_cast<int>(spec.branches.size());
    // One remaining slot becomes a kinked continuation rather than a split.
    const int k = remaining == 1 ? 1 : (remaining >= 3 && uni(0, 1) < 0.3 ? 3 : 2);
    const double r = std::max(2.0, pb.radii.back() * uni(0.75, 0.9));
    bool placed = false;
    for (int attempt = 0; attempt < 12 && !placed; ++attempt) {
      PhantomSpec trial = spec;
      const double phase = uni(0, 2 * pi);
      for (int c = 0; c < k; ++c) {
        const double tilt = uni(30, 55) * pi / 180.0;
        const double az = phase + 2 * pi * c / k + uni(-0.3, 0.3);
        const Vec3 dir = std::cos(tilt) * axis + std::sin(tilt) * (std::cos(az) * e1 + std::sin(az) * e2);
        const Vec3 start = pb.points.back();
        trial.branches.push_back(tube("b" + std::to_string(trial.branches.size()), leaf,
                                      {start, start + uni(5, 7) * r * dir}, {r, r}));
      }
      try {
        check_overlap(trial);
        spec = std::move(trial);
        placed = true;
      } catch (const Error&) {
      }
    }
    if (placed)
      for (int c = 0; c < k; ++c) open.push_back(static_cast<int>(spec.branches.size()) - k + c);
  }
  return anchored(spec);
}

LabeledGraph labeled_tree(const std::vector<std::pair<int, std::string>>& nodes) {
  LabeledGraph lg;
  auto& g = lg.graph;
  g.dims = {1, 1, 1};
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    BranchNode b;
    b.id = static_cast<int>(i);
    b.parent = nodes[i].first;
    if (b.parent >= static_cast<int>(i)) throw Error(ErrorCode::InvalidArgument, "parents must precede children");
    b.length = 10.0;
    b.start = b.parent >= 0 ? g.branches[b.parent].end : Vec3{0, 0, 0};
    b.end = b.start + Vec3{0, 0, -10.0};
    g.branches.push_back(std::move(b));
    BranchLabel l;
    if (!nodes[i].second.empty() && nodes[i].second != "Trunk") {
      const auto c = parse_class_name(nodes[i].second);
      if (!c) throw Error(ErrorCode::UnknownLabelId, "unknown class " + nodes[i].second);
      l = {c->lobe, c->segment, c->code};
    }
    lg.labels.push_back(l);
  }
  g.compute_lca_and_descendants();
  return lg;
}

}  // namespace bronchograph
