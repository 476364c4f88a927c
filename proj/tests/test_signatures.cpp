#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "bronchograph/morpho_signatures.hpp"
#include "bronchograph/serialize.hpp"
#include "oracles.hpp"

using namespace bronchograph;

namespace {

const double kPi = std::numbers::pi;

// z range of a branch's centerline
std::pair<int, int> z_span(const AirwayGraph& g, const BranchNode& b) {
  int lo = g.dims.nz, hi = -1;
  for (auto v : b.centerline) {
    lo = std::min(lo, g.dims.coords(v)[2]);
    hi = std::max(hi, g.dims.coords(v)[2]);
  }
  return {lo, hi};
}

Vec3 rotate(const Vec3& p, double ax, double ay) {
  const Vec3 a{p[0], std::cos(ax) * p[1] - std::sin(ax) * p[2], std::sin(ax) * p[1] + std::cos(ax) * p[2]};
  return {std::cos(ay) * a[0] + std::sin(ay) * a[2], a[1], -std::sin(ay) * a[0] + std::cos(ay) * a[2]};
}

LabeledGraph with_lengths(const std::vector<std::pair<int, std::string>>& nodes, const std::vector<double>& len) {
  auto lg = labeled_tree(nodes);
  for (std::size_t i = 0; i < len.size(); ++i) lg.graph.branches[i].length = len[i];
  return lg;
}

}  // namespace

TEST_CASE("straight tube has no stenosis, ectasia or tortuosity") {
  const auto e = oracle::extract(phantom_spec("straight_tube"));
  REQUIRE(e.lg.graph.size() == 1);
  const auto& b = e.lg.graph.branches[0];
  CHECK(branch_stenosis(b) <= 0.05);
  CHECK(branch_ectasia(b) <= 1.05);
  CHECK(branch_tortuosity(e.lg.graph, b) <= 0.05);
}

TEST_CASE("waist and bulge match the phantom EDT profile") {
  for (const char* name : {"stenotic_tube", "bulged_tube"}) {
    CAPTURE(name);
    const auto spec = phantom_spec(name);
    const auto e = oracle::extract(spec);
    REQUIRE(e.lg.graph.size() == 1);
    const auto& b = e.lg.graph.branches[0];
    const auto axis = spec.branches[0].points.front();
    const auto [z0, z1] = z_span(e.lg.graph, b);
    const int x = static_cast<int>(std::lround(axis[0])), y = static_cast<int>(std::lround(axis[1]));
    if (std::string(name) == "stenotic_tube") {
      const double want = oracle::column_stenosis(e.edt, x, y, z0, z1);
      CHECK(std::abs(branch_stenosis(b) - want) <= 0.05);
      CHECK(want > 0.3);
    } else {
      const double want = oracle::column_ectasia(e.edt, x, y, z0, z1);
      CHECK(std::abs(branch_ectasia(b) - want) <= 0.05);
      CHECK(want > 1.3);
    }
  }
}

TEST_CASE("stenosis and ectasia are invariant under uniform scaling, length scales") {
  for (const char* name : {"stenotic_tube", "y_tube"}) {
    CAPTURE(name);
    auto ph = render_phantom(phantom_spec(name));
    const auto a = oracle::extract(ph);
    ph.mask.set_spacing({2.0, 2.0, 2.0});
    ph.labels.set_spacing({2.0, 2.0, 2.0});
    const auto b = oracle::extract(ph);
    REQUIRE(a.lg.graph.size() == b.lg.graph.size());
    for (std::size_t i = 0; i < a.lg.graph.size(); ++i) {
      const auto& x = a.lg.graph.branches[i];
      const auto& y = b.lg.graph.branches[i];
      CHECK(branch_stenosis(x) == doctest::Approx(branch_stenosis(y)).epsilon(1e-12));
      CHECK(branch_ectasia(x) == doctest::Approx(branch_ectasia(y)).epsilon(1e-12));
      CHECK(branch_tortuosity(a.lg.graph, x) == doctest::Approx(branch_tortuosity(b.lg.graph, y)).epsilon(1e-12));
      CHECK(2.0 * x.length == doctest::Approx(y.length).epsilon(1e-12));
    }
  }
}

TEST_CASE("tortuosity of bent phantoms") {
  for (const char* name : {"elbow", "semicircle"}) {
    CAPTURE(name);
    const auto e = oracle::extract(phantom_spec(name));
    REQUIRE(e.lg.graph.size() == 1);
    CHECK(std::abs(branch_tortuosity(e.lg.graph, e.lg.graph.branches[0]) - 0.5) <= 0.05);
  }
}

TEST_CASE("tortuosity of point sets") {
  CHECK(tortuosity_of_points({{0, 0, 0}, {1, 0, 0}}) == 0.0);
  CHECK(tortuosity_of_points({{0, 0, 0}, {1, 1, 1}, {2, 2, 2}, {3, 3, 3}}) == 0.0);

  // Right angle with equal legs: the corner is the farthest point from SE.
  std::vector<Vec3> elbow;
  for (int i = 20; i >= 0; --i) elbow.push_back({0, 0, double(i)});
  for (int i = 1; i <= 20; ++i) elbow.push_back({double(i), 0, 0});
  CHECK(tortuosity_of_points(elbow) == doctest::Approx(0.5).epsilon(1e-12));

  // Inscribed angle on a half circle is a right angle.
  std::vector<Vec3> arc;
  for (int k = 0; k <= 180; ++k) arc.push_back({std::sin(kPi * k / 180), 0, std::cos(kPi * k / 180)});
  CHECK(tortuosity_of_points(arc) == doctest::Approx(0.5).epsilon(1e-9));

  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> ang(0, 2 * kPi);
  for (int t = 0; t < 20; ++t) {
    const double ax = ang(rng), ay = ang(rng);
    std::vector<Vec3> r;
    for (const auto& p : elbow) r.push_back(rotate(p, ax, ay));
    CHECK(tortuosity_of_points(r) == doctest::Approx(0.5).epsilon(1e-9));
  }
}

TEST_CASE("tortuosity is rotation invariant on a rendered V") {
  // Same V rendered in two orientations; voxelization limits agreement.
  auto v_spec = [](double ax, double ay) {
    PhantomSpec s;
    s.name = "v";
    std::vector<Vec3> pts;
    for (const Vec3 p : {Vec3{0, 0, 30}, Vec3{0, 0, 0}, Vec3{20, 0, -20}}) pts.push_back(rotate(p, ax, ay) + Vec3{40, 40, 40});
    s.branches.push_back({"v", -1, pts, {2.5, 2.5, 2.5}, ""});
    return s;
  };
  const auto a = oracle::extract(v_spec(0, 0));
  const auto b = oracle::extract(v_spec(0.4, 0.9));
  REQUIRE(a.lg.graph.size() == 1);
  REQUIRE(b.lg.graph.size() == 1);
  CHECK(std::abs(branch_tortuosity(a.lg.graph, a.lg.graph.branches[0]) -
                 branch_tortuosity(b.lg.graph, b.lg.graph.branches[0])) <= 0.02);
}

TEST_CASE("two-leaf cone divergence") {
  const auto e = oracle::extract(phantom_spec("two_leaf_cone"));
  const int rmb = oracle::component_row("RB4");
  REQUIRE(rmb >= 0);
  CHECK(std::abs(divergence(e.lg, rmb) - 0.5) <= 0.02);
  CHECK(divergence(e.phantom.truth, rmb) == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(divergence(e.lg, oracle::component_row("RMB")) == doctest::Approx(divergence(e.lg, rmb)).epsilon(1e-12));
}

TEST_CASE("minimal enclosing cone") {
  SUBCASE("closed forms") {
    CHECK(minimal_enclosing_cone({{0, 0, 3}}).half_angle == doctest::Approx(0.0));
    const auto c = minimal_enclosing_cone({{1, 0, 0}, {0, 1, 0}});
    CHECK(c.half_angle == doctest::Approx(kPi / 4).epsilon(1e-12));
    CHECK(c.axis[0] == doctest::Approx(std::sqrt(0.5)));
    CHECK(c.axis[1] == doctest::Approx(std::sqrt(0.5)));
    CHECK(minimal_enclosing_cone({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}).half_angle ==
          doctest::Approx(std::acos(1 / std::sqrt(3.0))).epsilon(1e-12));
  }
  SUBCASE("zero direction") {
    try {
      minimal_enclosing_cone({{1, 0, 0}, {0, 0, 0}});
      FAIL("expected DegenerateApex");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::DegenerateApex);
    }
  }
  SUBCASE("grid oracle") {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> nd;
    std::uniform_int_distribution<int> count(1, 6);
    for (int t = 0; t < 25; ++t) {
      std::vector<Vec3> dirs;
      const Vec3 bias{nd(rng), nd(rng), nd(rng)};
      const int n = count(rng);
      for (int i = 0; i < n; ++i) dirs.push_back(bias + Vec3{nd(rng), nd(rng), nd(rng)});
      CHECK(std::abs(minimal_enclosing_cone(dirs).half_angle - oracle::grid_cone_half_angle(dirs)) <= 1e-3);
    }
  }
  SUBCASE("rotation invariance") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> nd;
    for (int t = 0; t < 10; ++t) {
      std::vector<Vec3> dirs, rot;
      for (int i = 0; i < 5; ++i) dirs.push_back(Vec3{0, 0, 2} + Vec3{nd(rng), nd(rng), nd(rng)});
      for (const auto& d : dirs) rot.push_back(rotate(d, 0.7 * t, 1.3));
      CHECK(minimal_enclosing_cone(dirs).half_angle ==
            doctest::Approx(minimal_enclosing_cone(rot).half_angle).epsilon(1e-9));
    }
  }
  SUBCASE("many directions use the iterative solver") {
    std::mt19937_64 rng(17);
    std::normal_distribution<double> nd(0, 0.3);
    std::vector<Vec3> dirs;
    for (int i = 0; i < 100; ++i) dirs.push_back(Vec3{0, 0, 1} + Vec3{nd(rng), nd(rng), nd(rng)});
    const auto c = minimal_enclosing_cone(dirs);
    CHECK(std::abs(c.half_angle - oracle::grid_cone_half_angle(dirs)) <= 1e-3);
    for (const auto& d : dirs) CHECK(dot(c.axis, (1.0 / norm(d)) * d) >= std::cos(c.half_angle) - 1e-9);
  }
}

TEST_CASE("geodesic length") {
  // 0 Trunk, then class nodes; lengths in mm
  SUBCASE("single path") {
    const auto lg = with_lengths({{-1, ""}, {0, "RB4"}}, {5, 40});
    CHECK(geodesic_length(lg, oracle::component_row("RB4")) == doctest::Approx(40));
  }
  SUBCASE("two leaves below a labeled LCA") {
    const auto lg = with_lengths({{-1, ""}, {0, "RB4"}, {1, "RB4a"}, {1, "RB4b"}}, {5, 10, 20, 40});
    CHECK(geodesic_length(lg, oracle::component_row("RB4")) == doctest::Approx(40));
  }
  SUBCASE("trunk LCA re-roots each path") {
    // Paths: 0 -> 1 -> 2 (K) and 0 -> 3 -> 4 (K); the Trunk prefix is dropped.
    const auto lg = with_lengths({{-1, ""}, {0, ""}, {1, "RB4"}, {0, ""}, {3, "RB4"}}, {5, 10, 20, 10, 30});
    CHECK(geodesic_length(lg, oracle::component_row("RB4")) == doctest::Approx(25));
  }
  SUBCASE("absent") {
    const auto lg = with_lengths({{-1, ""}, {0, "RB4"}}, {5, 40});
    CHECK(geodesic_length(lg, oracle::component_row("RB5")) == -1.0);
  }
}

TEST_CASE("box-counting slopes") {
  std::vector<Index3> line, plane, cube;
  for (int i = 0; i < 64; ++i) line.push_back({i, 0, 0});
  for (int i = 0; i < 64; ++i)
    for (int j = 0; j < 64; ++j) plane.push_back({i, j, 0});
  for (int i = 0; i < 64; ++i)
    for (int j = 0; j < 64; ++j)
      for (int k = 0; k < 64; ++k) cube.push_back({i, j, k});
  CHECK(box_counting_dimension(line) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(box_counting_dimension(plane) - 2.0) <= 0.2);
  CHECK(std::abs(box_counting_dimension(cube) - 3.0) <= 0.05);
  CHECK(box_counting_dimension({{3, 4, 5}}) == 0.0);
  CHECK(box_counting_dimension({}) == -1.0);

  // Analytic counts through the oracle.
  for (int s : {2, 4, 8, 16, 32}) {
    CHECK(oracle::box_count(line, s) == std::size_t(64 / s));
    CHECK(oracle::box_count(cube, s) == std::size_t((64 / s) * (64 / s) * (64 / s)));
  }

  // A 128-voxel line does not fit the default pad; the pad doubles to 128.
  std::vector<Index3> longline;
  for (int i = 0; i < 128; ++i) longline.push_back({0, 0, i});
  CHECK(box_counting_dimension(longline, 64) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("complexity is exactly axis-permutation invariant") {
  std::mt19937_64 rng(9);
  std::uniform_int_distribution<int> c(0, 40);
  for (int t = 0; t < 10; ++t) {
    std::vector<Index3> v, p;
    for (int i = 0; i < 300; ++i) v.push_back({c(rng), c(rng) / 2, c(rng) / 3});
    for (const auto& x : v) p.push_back({x[2], x[0], x[1]});
    CHECK(box_counting_dimension(v) == box_counting_dimension(p));
  }
}

TEST_CASE("signature matrix sentinels, bounds and determinism") {
  for (const auto& name : phantom_names()) {
    CAPTURE(name);
    const auto ph = render_phantom(phantom_spec(name));
    const auto m = signature_matrix(ph.truth);
    CHECK(m.values == signature_matrix(ph.truth).values);
    for (int r = 0; r < kNumComponents; ++r) {
      CAPTURE(component_name(r));
      const auto& v = m.values[r];
      int absent = 0;
      for (double x : v) absent += x == -1.0;
      CHECK((absent == 0 || absent == kNumDescriptors));
      if (absent) continue;
      for (double x : v) CHECK(std::isfinite(x));
      CHECK(v[0] >= 0.0);
      CHECK(v[0] <= 1.0);
      CHECK(v[1] >= 1.0);
      CHECK(v[2] >= 0.0);
      CHECK(v[2] <= 1.0);
      CHECK(v[3] >= 0.0);
      CHECK(v[3] <= 1.0);
      CHECK(v[4] >= 0.0);
      CHECK(v[5] >= 0.0);
    }
  }
}

TEST_CASE("phantom with only RMB populated") {
  auto lg = labeled_tree({{-1, ""}, {0, "RMB"}, {1, "RMB"}});
  const auto m = signature_matrix(lg);
  const int rmb = oracle::component_row("RMB");
  for (int r = 0; r < kNumComponents; ++r) {
    CAPTURE(component_name(r));
    CHECK(m.present(r) == (r == rmb));
    if (r != rmb)
      for (double x : m.values[r]) CHECK(x == -1.0);
  }
}

TEST_CASE("signature CSV round trip") {
  const auto ph = render_phantom(phantom_spec("lingula_b4a"));
  const auto m = signature_matrix(ph.truth);
  std::stringstream ss;
  write_signature_csv(ss, m);
  const auto text = ss.str();
  CHECK(text.rfind("component,Stenosis,Ectasia,Tortuosity,Divergence,Length,Complexity\n", 0) == 0);
  const auto back = read_signature_csv(ss);
  CHECK(back.values == m.values);
}
