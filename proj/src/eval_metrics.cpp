#include "bronchograph/eval_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <set>

#include "bronchograph/edt.hpp"

namespace bronchograph {

namespace {

double ratio_or(double num, double den, bool other_empty) {
  if (den > 0) return num / den;
  return other_empty ? 1.0 : 0.0;
}

}  // namespace

Overlap overlap_metrics(const Volume& pred, const Volume& gt) {
  require_same_dims(pred.dims(), gt.dims(), "overlap_metrics");
  std::size_t p = 0, g = 0, both = 0;
  for (std::size_t i = 0; i < pred.dims().count(); ++i) {
    const bool a = pred[i] != 0, b = gt[i] != 0;
    p += a;
    g += b;
    both += a && b;
  }
  Overlap o;
  o.dsc = (p + g) == 0 ? 1.0 : 2.0 * both / static_cast<double>(p + g);
  o.sensitivity = ratio_or(static_cast<double>(both), static_cast<double>(g), p == 0);
  o.precision = ratio_or(static_cast<double>(both), static_cast<double>(p), g == 0);
  return o;
}

double cl_dice(const Volume& pred, const Volume& gt, const std::vector<std::size_t>& skel_pred,
               const std::vector<std::size_t>& skel_gt) {
  require_same_dims(pred.dims(), gt.dims(), "cl_dice");
  std::size_t in_gt = 0, in_pred = 0;
  for (auto v : skel_pred) in_gt += gt[v] != 0;
  for (auto v : skel_gt) in_pred += pred[v] != 0;
  const double tprec = ratio_or(static_cast<double>(in_gt), static_cast<double>(skel_pred.size()), skel_gt.empty());
  const double tsens = ratio_or(static_cast<double>(in_pred), static_cast<double>(skel_gt.size()), skel_pred.empty());
  if (tprec + tsens == 0.0) return 0.0;
  return 2.0 * tprec * tsens / (tprec + tsens);
}

double cl_dice(const Volume& pred, const Volume& gt, const SkeletonTree& skel_pred, const SkeletonTree& skel_gt) {
  std::vector<std::size_t> a, b;
  for (const auto& n : skel_pred.nodes) a.push_back(n.voxel);
  for (const auto& n : skel_gt.nodes) b.push_back(n.voxel);
  return cl_dice(pred, gt, a, b);
}

SegMetricsReport detection_rates(const Volume& pred, const AirwayGraph& gt_graph, double coverage_threshold) {
  require_same_dims(pred.dims(), gt_graph.dims, "detection_rates");
  SegMetricsReport r;
  r.b_ref = gt_graph.size();
  for (const auto& b : gt_graph.branches) {
    std::size_t inside = 0;
    for (std::size_t k = 0; k < b.centerline.size(); ++k) {
      const bool in = pred[b.centerline[k]] != 0;
      inside += in;
      if (k == 0) continue;
      const double step = norm(gt_graph.position(b.centerline[k]) - gt_graph.position(b.centerline[k - 1]));
      r.t_ref += step;
      if (in && pred[b.centerline[k - 1]] != 0) r.t_det += step;
    }
    if (!b.centerline.empty() && static_cast<double>(inside) > coverage_threshold * b.centerline.size()) ++r.b_det;
  }
  r.tld = r.t_ref > 0 ? 100.0 * r.t_det / r.t_ref : 100.0;
  r.bnd = r.b_ref > 0 ? 100.0 * static_cast<double>(r.b_det) / r.b_ref : 100.0;
  return r;
}

int class_key(const BranchLabel& l, LabelLevel level) {
  switch (level) {
    case LabelLevel::Lobar: return l.lobe;
    case LabelLevel::Segmental: return l.segment;
    case LabelLevel::Subsegmental:
      return (l.segment == kTrunk || l.code == kTrunk) ? kTrunk : l.segment * kNumCodes + l.code;
  }
  return kTrunk;
}

std::vector<std::vector<int>> hop_distances(const AirwayGraph& g) {
  const std::size_t n = g.size();
  std::vector<std::vector<int>> adj(n);
  for (const auto& [a, b] : g.edges()) {
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  std::vector<std::vector<int>> d(n, std::vector<int>(n, -1));
  for (std::size_t s = 0; s < n; ++s) {
    std::deque<int> q{static_cast<int>(s)};
    d[s][s] = 0;
    while (!q.empty()) {
      const int u = q.front();
      q.pop_front();
      for (int v : adj[u]) {
        if (d[s][v] < 0) {
          d[s][v] = d[s][u] + 1;
          q.push_back(v);
        }
      }
    }
  }
  return d;
}

LabelMetricsReport label_metrics(const LabeledGraph& pred, const LabeledGraph& gt, LabelLevel level) {
  const std::size_t n = gt.graph.size();
  if (pred.graph.size() != n || pred.labels.size() != n || gt.labels.size() != n)
    throw Error(ErrorCode::GraphMismatch, "predicted and reference graphs differ in size");
  for (std::size_t i = 0; i < n; ++i) {
    if (pred.graph.branches[i].parent != gt.graph.branches[i].parent)
      throw Error(ErrorCode::GraphMismatch, "predicted and reference graphs differ in structure");
  }
  LabelMetricsReport r;
  r.level = level;
  if (n == 0) return r;
  std::vector<int> y(n), yh(n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = class_key(gt.labels[i], level);
    yh[i] = class_key(pred.labels[i], level);
  }
  std::set<int> gt_classes(y.begin(), y.end()), all(y.begin(), y.end());
  all.insert(yh.begin(), yh.end());
  r.classes.assign(all.begin(), all.end());

  std::size_t correct = 0;
  for (std::size_t i = 0; i < n; ++i) {
    ++r.confusion[{y[i], yh[i]}];
    correct += y[i] == yh[i];
  }
  r.accuracy = static_cast<double>(correct) / n;

  double psum = 0, ssum = 0;
  for (int c : gt_classes) {
    std::size_t tp = 0, npred = 0, ngt = 0;
    for (std::size_t i = 0; i < n; ++i) {
      tp += y[i] == c && yh[i] == c;
      npred += yh[i] == c;
      ngt += y[i] == c;
    }
    psum += npred ? static_cast<double>(tp) / npred : 0.0;
    ssum += static_cast<double>(tp) / ngt;
  }
  r.macro_precision = psum / gt_classes.size();
  r.macro_sensitivity = ssum / gt_classes.size();

  // TreeCons: each connected piece of a non-Trunk gt class is one subtree.
  const auto& g = gt.graph;
  auto top = [&](int i) {
    while (g.branches[i].parent >= 0 && y[g.branches[i].parent] == y[i]) i = g.branches[i].parent;
    return i;
  };
  std::map<int, std::set<int>> predicted;
  for (std::size_t i = 0; i < n; ++i)
    if (y[i] != kTrunk) predicted[top(static_cast<int>(i))].insert(yh[i]);
  for (const auto& [root, classes] : predicted) {
    ++r.n_s;
    if (classes.size() == 1) ++r.n_cs;
  }
  r.tree_cons = r.n_s ? 100.0 * static_cast<double>(r.n_cs) / r.n_s : 100.0;

  const auto d = hop_distances(g);
  int diameter = 0;
  for (const auto& row : d)
    for (int v : row) diameter = std::max(diameter, v);
  double total = 0;
  for (std::size_t i = 0; i < n; ++i) {
    int best = diameter + 1;
    for (std::size_t j = 0; j < n; ++j)
      if (y[j] == yh[i]) best = std::min(best, d[i][j]);
    total += best;
  }
  r.topo_dist = total / n;
  return r;
}

namespace {

double weight_at(const ScalarField* f, std::size_t i) { return f ? f->data[i] : 1.0; }

void check_inputs(const ScalarField& p, const Volume& gt, const LossAux& aux) {
  require_same_dims(p.dims, gt.dims(), "loss_value");
  for (const auto* f : {aux.centerline, aux.weight, aux.alpha_map})
    if (f) require_same_dims(p.dims, f->dims, "loss_value");
  for (double v : p.data)
    if (!(v >= 0.0 && v <= 1.0)) throw Error(ErrorCode::ProbOutOfRange, "probabilities must lie in [0, 1]");
}

double safe_log(double v) { return std::log(std::max(v, 1e-7)); }

double cross_entropy(double p, double g) { return -(g * safe_log(p) + (1.0 - g) * safe_log(1.0 - p)); }

}  // namespace

double loss_value(LossKind kind, const ScalarField& p, const Volume& gt, const LossAux& aux) {
  check_inputs(p, gt, aux);
  const std::size_t n = p.data.size();
  auto g = [&](std::size_t i) { return gt[i] ? 1.0 : 0.0; };
  switch (kind) {
    case LossKind::DiceFocal: {
      double pg = 0, sum = 0, focal = 0;
      for (std::size_t i = 0; i < n; ++i) {
        const double pi = p.data[i], gi = g(i);
        pg += pi * gi;
        sum += pi + gi;
        focal += gi * std::pow(1.0 - pi, aux.focal_gamma) * safe_log(pi) +
                 (1.0 - gi) * std::pow(pi, aux.focal_gamma) * safe_log(1.0 - pi);
      }
      const double dice = sum > 0 ? 2.0 * pg / sum : 1.0;
      return -dice - focal / static_cast<double>(n);
    }
    case LossKind::CAL:
    case LossKind::CAL_LSD: {
      double pg = 0, ps = 0, gs = 0, ce = 0;
      for (std::size_t i = 0; i < n; ++i) {
        const double pi = p.data[i], gi = g(i);
        pg += pi * gi;
        ps += pi;
        gs += gi;
        ce += weight_at(aux.alpha_map, i) * cross_entropy(pi, gi);
      }
      const double den = aux.alpha_t * ps + aux.beta_t * gs;
      double loss = (den > 0 ? 1.0 - pg / den : 0.0) + ce;
      if (kind == LossKind::CAL_LSD) {
        Volume bin(p.dims, p.spacing, VolumeKind::Binary);
        for (std::size_t i = 0; i < n; ++i) bin[i] = p.data[i] >= 0.5 ? 1 : 0;
        Volume gbin(p.dims, p.spacing, VolumeKind::Binary);
        for (std::size_t i = 0; i < n; ++i) gbin[i] = gt[i] ? 1 : 0;
        const auto dg = distance_transform(gbin), dp = distance_transform(bin);
        double sq = 0;
        for (std::size_t i = 0; i < n; ++i) sq += (dg.data[i] - dp.data[i]) * (dg.data[i] - dp.data[i]);
        loss += std::sqrt(sq) / static_cast<double>(n);
      }
      return loss;
    }
    case LossKind::GU: {
      double num = 0, den = 0;
      for (std::size_t i = 0; i < n; ++i) {
        const double pi = p.data[i], gi = g(i);
        num += weight_at(aux.weight, i) * std::pow(pi, aux.gu_r) * gi;
        den += weight_at(aux.alpha_map, i) * (aux.gu_alpha * pi + aux.gu_beta * gi);
      }
      return den > 0 ? 1.0 - num / den : 0.0;
    }
    case LossKind::BS: {
      if (!aux.centerline) throw Error(ErrorCode::InvalidArgument, "BS loss needs a centerline map");
      double num = 0, den = 0;
      for (std::size_t i = 0; i < n; ++i) {
        num += p.data[i] * aux.centerline->data[i];
        den += aux.centerline->data[i];
      }
      return 1.0 - num / (den + aux.eps);
    }
  }
  return 0.0;
}

}  // namespace bronchograph
