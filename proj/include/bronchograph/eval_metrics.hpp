#pragma once

#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "bronchograph/airway_graph.hpp"
#include "bronchograph/label_taxonomy.hpp"
#include "bronchograph/mpc_skel.hpp"
#include "bronchograph/volume.hpp"

namespace bronchograph {

struct Overlap {
  double dsc = 0, sensitivity = 0, precision = 0;
};

struct SegMetricsReport {
  double dsc = 0, cl_dice = 0, sensitivity = 0, precision = 0;
  double tld = 0, bnd = 0;        // percent
  double t_det = 0, t_ref = 0;    // mm
  std::size_t b_det = 0, b_ref = 0;
};

enum class LabelLevel { Lobar, Segmental, Subsegmental };

struct LabelMetricsReport {
  LabelLevel level = LabelLevel::Segmental;
  double tree_cons = 100.0;  // percent
  double topo_dist = 0.0;    // graph hops
  double accuracy = 0, macro_precision = 0, macro_sensitivity = 0;
  std::size_t n_s = 0, n_cs = 0;
  std::vector<int> classes;                         // sorted class keys, -1 = Trunk
  std::map<std::pair<int, int>, std::size_t> confusion;  // (gt, pred) -> count
};

/// Both volumes binary. Empty denominators give 1 when the other side is also
/// empty, 0 otherwise; DSC of two empty masks is 1.
Overlap overlap_metrics(const Volume& pred, const Volume& gt);

double cl_dice(const Volume& pred, const Volume& gt, const std::vector<std::size_t>& skel_pred,
               const std::vector<std::size_t>& skel_gt);
double cl_dice(const Volume& pred, const Volume& gt, const SkeletonTree& skel_pred, const SkeletonTree& skel_gt);

/// A centerline step counts toward T_det when both its voxels lie in pred; a
/// branch is detected when more than `coverage_threshold` of its centerline
/// voxels lie in pred.
SegMetricsReport detection_rates(const Volume& pred, const AirwayGraph& gt_graph, double coverage_threshold = 0.8);

/// Class key of a label at a level; -1 is Trunk (nothing at that level).
int class_key(const BranchLabel& l, LabelLevel level);

LabelMetricsReport label_metrics(const LabeledGraph& pred, const LabeledGraph& gt,
                                 LabelLevel level = LabelLevel::Segmental);

/// Hop distances between all branch pairs of a tree.
std::vector<std::vector<int>> hop_distances(const AirwayGraph& g);

enum class LossKind { DiceFocal, CAL, CAL_LSD, GU, BS };

struct LossAux {
  const ScalarField* centerline = nullptr;  // c, required for BS
  const ScalarField* weight = nullptr;      // w_x (GU), default 1
  const ScalarField* alpha_map = nullptr;   // α_x (CAL, GU), default 1
  double focal_gamma = 2.0;
  double alpha_t = 0.1, beta_t = 0.9;
  double gu_r = 0.7, gu_alpha = 0.2, gu_beta = 0.7;
  double eps = 1e-7;
};

double loss_value(LossKind kind, const ScalarField& pred_prob, const Volume& gt, const LossAux& aux = {});

}  // namespace bronchograph
