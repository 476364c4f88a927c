#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "bronchograph/edt.hpp"
#include "bronchograph/eval_metrics.hpp"
#include "bronchograph/synth_phantom.hpp"

using namespace bronchograph;

namespace {

Volume row(int n, std::initializer_list<int> on) {
  Volume v({n, 1, 1}, {1, 1, 1}, VolumeKind::Binary);
  for (int i : on) v[i] = 1;
  return v;
}

Volume row_range(int n, int lo, int hi) {
  Volume v({n, 1, 1}, {1, 1, 1}, VolumeKind::Binary);
  for (int i = lo; i < hi; ++i) v[i] = 1;
  return v;
}

// Root 0..5 and a child 5..10 along x.
AirwayGraph two_branch_row() {
  AirwayGraph g;
  g.dims = {12, 1, 1};
  BranchNode a, b;
  a.id = 0;
  for (int i = 0; i <= 5; ++i) a.centerline.push_back(i);
  b.id = 1;
  b.parent = 0;
  for (int i = 5; i <= 10; ++i) b.centerline.push_back(i);
  a.radii.assign(6, 1);
  b.radii.assign(6, 1);
  g.branches = {a, b};
  finalize_branch_geometry(g);
  g.compute_lca_and_descendants();
  return g;
}

ScalarField as_field(const Volume& v) {
  ScalarField f{v.dims(), v.spacing(), {}};
  for (std::size_t i = 0; i < v.size(); ++i) f.data.push_back(v[i]);
  return f;
}

}  // namespace

TEST_CASE("overlap metrics on hand-countable sets") {
  const auto g = row(8, {0, 1, 2, 3});
  const auto same = overlap_metrics(g, g);
  CHECK(same.dsc == 1.0);
  CHECK(same.sensitivity == 1.0);
  CHECK(same.precision == 1.0);
  const auto disjoint = overlap_metrics(row(8, {5, 6}), g);
  CHECK(disjoint.dsc == 0.0);
  CHECK(disjoint.sensitivity == 0.0);
  CHECK(disjoint.precision == 0.0);
  const auto half = overlap_metrics(row(8, {0, 1}), g);
  CHECK(half.dsc == doctest::Approx(2.0 * 2 / 6));
  CHECK(half.sensitivity == 0.5);
  CHECK(half.precision == 1.0);
  CHECK(overlap_metrics(g, row(8, {0, 1})).dsc == half.dsc);
}

TEST_CASE("overlap empty-set conventions") {
  const auto empty = row(4, {});
  const auto both = overlap_metrics(empty, empty);
  CHECK(both.dsc == 1.0);
  CHECK(both.sensitivity == 1.0);
  CHECK(both.precision == 1.0);
  const auto miss = overlap_metrics(empty, row(4, {1}));
  CHECK(miss.dsc == 0.0);
  CHECK(miss.sensitivity == 0.0);
  CHECK(miss.precision == 0.0);
  CHECK_THROWS_AS(overlap_metrics(row(4, {}), row(5, {})), Error);
}

TEST_CASE("clDice fixtures") {
  const auto gt = row_range(10, 0, 10), pred = row_range(10, 0, 5);
  std::vector<std::size_t> sg(10), sp(5);
  std::iota(sg.begin(), sg.end(), 0);
  std::iota(sp.begin(), sp.end(), 0);
  CHECK(cl_dice(pred, gt, sp, sg) == doctest::Approx(2.0 * 1.0 * 0.5 / 1.5));
  CHECK(cl_dice(gt, gt, sg, sg) == 1.0);
  CHECK(cl_dice(row_range(10, 8, 10), row_range(10, 0, 3), std::vector<std::size_t>{8, 9}, std::vector<std::size_t>{0, 1, 2}) == 0.0);
}

TEST_CASE("detection rates") {
  const auto g = two_branch_row();
  const auto full = detection_rates(row_range(12, 0, 12), g);
  CHECK(full.tld == 100.0);
  CHECK(full.bnd == 100.0);
  CHECK(full.t_ref == doctest::Approx(10.0));
  CHECK(full.b_ref == 2);
  const auto half = detection_rates(row_range(12, 0, 6), g);
  CHECK(half.tld == doctest::Approx(50.0));
  CHECK(half.bnd == doctest::Approx(50.0));
  const auto none = detection_rates(row_range(12, 0, 0), g);
  CHECK(none.tld == 0.0);
  CHECK(none.bnd == 0.0);
  // 5 of 6 voxels is above 0.8 but not above 0.9.
  CHECK(detection_rates(row_range(12, 0, 10), g, 0.8).b_det == 2);
  CHECK(detection_rates(row_range(12, 0, 10), g, 0.9).b_det == 1);
}

TEST_CASE("TLD and BND never drop while voxels are added back") {
  const auto ph = render_phantom(phantom_spec("llb_b9_10"));
  const auto& gt = ph.truth.graph;
  std::mt19937_64 rng(8);
  std::vector<std::size_t> fg;
  for (std::size_t i = 0; i < ph.mask.size(); ++i)
    if (ph.mask[i]) fg.push_back(i);
  for (int seq = 0; seq < 3; ++seq) {
    std::shuffle(fg.begin(), fg.end(), rng);
    Volume pred = ph.mask;
    double last_tld = 101, last_bnd = 101;
    for (std::size_t k = 0; k <= fg.size(); k += fg.size() / 25 + 1) {
      for (std::size_t j = (k == 0 ? 0 : k - (fg.size() / 25 + 1)); j < k; ++j) pred[fg[j]] = 0;
      const auto r = detection_rates(pred, gt);
      CHECK(r.tld <= last_tld);
      CHECK(r.bnd <= last_bnd);
      last_tld = r.tld;
      last_bnd = r.bnd;
    }
  }
}

TEST_CASE("label metrics identities and perturbations") {
  const auto gt = labeled_tree({{-1, ""}, {0, "RMB"}, {1, "RB4a"}, {1, "RB5"}, {0, "LB3"}, {4, "LB3"}, {4, "LB1+2"}});
  const auto same = label_metrics(gt, gt);
  CHECK(same.accuracy == 1.0);
  CHECK(same.tree_cons == 100.0);
  CHECK(same.topo_dist == 0.0);
  CHECK(same.macro_precision == 1.0);
  CHECK(same.macro_sensitivity == 1.0);

  // Leaf 5 predicted as its parent's class: one hop.
  auto pred = gt;
  pred.labels[6] = pred.labels[4];
  const auto r = label_metrics(pred, gt);
  CHECK(r.topo_dist == doctest::Approx(1.0 / 7));
  CHECK(r.accuracy == doctest::Approx(6.0 / 7));

  // A class absent from gt costs diameter + 1 (diameter here is 4).
  auto far = gt;
  far.labels[2] = labeled_tree({{-1, "RB10"}}).labels[0];
  CHECK(label_metrics(far, gt).topo_dist == doctest::Approx(5.0 / 7));
}

TEST_CASE("TreeCons counts connected gt pieces with one predicted class") {
  const auto gt = labeled_tree({{-1, ""}, {0, "LB3"}, {1, "LB3"}, {1, "LB3"}, {0, "RB4"}});
  auto split = gt;
  split.labels[3] = split.labels[4];
  const auto r = label_metrics(split, gt);
  CHECK(r.n_s == 2);
  CHECK(r.n_cs == 1);
  CHECK(r.tree_cons == 50.0);
  // Disconnected gt class: two LB3 pieces separated by Trunk are two subtrees.
  const auto gapped = labeled_tree({{-1, ""}, {0, "LB3"}, {1, ""}, {2, "LB3"}});
  CHECK(label_metrics(gapped, gapped).n_s == 2);
  CHECK(label_metrics(gapped, gapped).tree_cons == 100.0);
  const auto longer = labeled_tree({{-1, ""}, {0, "LB3"}, {1, ""}, {2, "LB3"}, {3, "LB3"}});
  auto half = longer;
  half.labels[4] = labeled_tree({{-1, "RB4"}}).labels[0];
  CHECK(label_metrics(half, longer).tree_cons == 50.0);
}

TEST_CASE("label metrics are invariant under class permutation") {
  const auto gt = labeled_tree({{-1, ""}, {0, "RMB"}, {1, "RB4"}, {1, "RB5"}, {0, "LUB"}, {4, "LB3"}, {4, "LB1+2"}});
  auto pred = gt;
  pred.labels[2] = gt.labels[3];
  pred.labels[5] = gt.labels[4];
  auto permute = [](LabeledGraph lg) {
    for (auto& l : lg.labels) {
      if (l.segment == kTrunk) continue;
      l.segment = kNumSegments - 1 - l.segment;
    }
    return lg;
  };
  const auto a = label_metrics(pred, gt), b = label_metrics(permute(pred), permute(gt));
  CHECK(a.accuracy == b.accuracy);
  CHECK(a.tree_cons == b.tree_cons);
  CHECK(a.topo_dist == b.topo_dist);
  CHECK(a.macro_precision == b.macro_precision);
  CHECK(a.macro_sensitivity == b.macro_sensitivity);
}

TEST_CASE("label metrics reject different graphs") {
  const auto a = labeled_tree({{-1, ""}, {0, "LB3"}});
  const auto b = labeled_tree({{-1, ""}, {0, "LB3"}, {0, "LB4"}});
  CHECK_THROWS_AS(label_metrics(a, b), Error);
  const auto c = labeled_tree({{-1, ""}, {0, "LB3"}, {1, "LB4"}});
  CHECK_THROWS_AS(label_metrics(b, c), Error);
}

TEST_CASE("levels use the right class keys") {
  const auto gt = labeled_tree({{-1, ""}, {0, "LB3a"}, {0, "LB3b"}});
  auto pred = gt;
  pred.labels[2] = gt.labels[1];
  CHECK(label_metrics(pred, gt, LabelLevel::Segmental).accuracy == 1.0);
  CHECK(label_metrics(pred, gt, LabelLevel::Lobar).accuracy == 1.0);
  CHECK(label_metrics(pred, gt, LabelLevel::Subsegmental).accuracy == doctest::Approx(2.0 / 3));
}

namespace {

struct Plug {
  std::vector<double> p, g, c;
};

Plug random_plug(std::mt19937_64& rng, std::size_t n) {
  Plug x;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    x.p.push_back(u(rng));
    x.g.push_back(u(rng) < 0.4 ? 1.0 : 0.0);
    x.c.push_back(x.g.back() * u(rng));
  }
  return x;
}

}  // namespace

TEST_CASE("loss evaluators against direct formulas") {
  std::mt19937_64 rng(12);
  const auto x = random_plug(rng, 60);
  Volume gt({60, 1, 1}, {1, 1, 1}, VolumeKind::Binary);
  ScalarField p{gt.dims(), gt.spacing(), x.p}, c{gt.dims(), gt.spacing(), x.c};
  for (int i = 0; i < 60; ++i) gt[i] = x.g[i] > 0;
  const double n = 60;
  double pg = 0, ps = 0, gs = 0, focal = 0, ce = 0, gu_num = 0, gu_den = 0, bs_num = 0, bs_den = 0;
  for (int i = 0; i < 60; ++i) {
    const double pi = x.p[i], gi = x.g[i];
    pg += pi * gi;
    ps += pi;
    gs += gi;
    focal += -gi * (1 - pi) * (1 - pi) * std::log(pi) - (1 - gi) * pi * pi * std::log(1 - pi);
    ce += -gi * std::log(pi) - (1 - gi) * std::log(1 - pi);
    gu_num += std::pow(pi, 0.7) * gi;
    gu_den += 0.2 * pi + 0.7 * gi;
    bs_num += pi * x.c[i];
    bs_den += x.c[i];
  }
  CHECK(std::abs(loss_value(LossKind::DiceFocal, p, gt) - (-2 * pg / (ps + gs) + focal / n)) < 1e-9);
  CHECK(std::abs(loss_value(LossKind::CAL, p, gt) - (1 - pg / (0.1 * ps + 0.9 * gs) + ce)) < 1e-9);
  CHECK(std::abs(loss_value(LossKind::GU, p, gt) - (1 - gu_num / gu_den)) < 1e-9);
  LossAux aux;
  aux.centerline = &c;
  CHECK(std::abs(loss_value(LossKind::BS, p, gt, aux) - (1 - bs_num / (bs_den + 1e-7))) < 1e-9);
}

TEST_CASE("crisp predictions equal to the truth") {
  const auto ph = render_phantom(phantom_spec("y_tube"));
  const auto p = as_field(ph.mask);
  ScalarField c = p;
  for (auto& v : c.data) v = 0;
  for (const auto& b : ph.truth.graph.branches)
    for (auto v : b.centerline) c.data[v] = 1;
  LossAux aux;
  aux.centerline = &c;
  const double N = static_cast<double>(ph.mask.foreground_count());
  CHECK(std::abs(loss_value(LossKind::DiceFocal, p, ph.mask) - (-1.0)) < 1e-9);
  CHECK(std::abs(loss_value(LossKind::GU, p, ph.mask) - (1.0 - N / (N * 0.9))) < 1e-9);
  double sc = 0;
  for (double v : c.data) sc += v;
  CHECK(std::abs(loss_value(LossKind::BS, p, ph.mask, aux) - (1.0 - sc / (sc + 1e-7))) < 1e-9);
  CHECK(loss_value(LossKind::BS, p, ph.mask, aux) < 1e-8);
  // The distance term of CAL_LSD vanishes when prediction and truth coincide.
  CHECK(loss_value(LossKind::CAL_LSD, p, ph.mask) == doctest::Approx(loss_value(LossKind::CAL, p, ph.mask)));
}

TEST_CASE("CAL_LSD adds the normalized L2 distance-map gap") {
  const auto gt = row_range(9, 2, 7);
  ScalarField p{gt.dims(), gt.spacing(), std::vector<double>(9, 0.0)};
  for (int i = 3; i < 6; ++i) p.data[i] = 0.9;
  Volume pb = row_range(9, 3, 6);
  const auto dg = distance_transform(gt), dp = distance_transform(pb);
  double sq = 0;
  for (int i = 0; i < 9; ++i) sq += std::pow(dg[i] - dp[i], 2);
  CHECK(loss_value(LossKind::CAL_LSD, p, gt) - loss_value(LossKind::CAL, p, gt) == doctest::Approx(std::sqrt(sq) / 9));
}

TEST_CASE("loss input checks") {
  const auto gt = row_range(4, 0, 2);
  ScalarField bad{gt.dims(), gt.spacing(), {0.1, 1.2, 0.0, 0.0}};
  try {
    loss_value(LossKind::GU, bad, gt);
    FAIL("expected ProbOutOfRange");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ProbOutOfRange);
  }
  ScalarField ok{gt.dims(), gt.spacing(), {0.1, 0.2, 0.0, 0.0}};
  CHECK_THROWS_AS(loss_value(LossKind::BS, ok, gt), Error);
  ScalarField small{{3, 1, 1}, gt.spacing(), {0, 0, 0}};
  CHECK_THROWS_AS(loss_value(LossKind::CAL, small, gt), Error);
}
