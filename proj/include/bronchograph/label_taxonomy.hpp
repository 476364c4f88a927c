#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bronchograph/airway_graph.hpp"
#include "bronchograph/volume.hpp"

namespace bronchograph {

inline constexpr int kNumLobes = 5;
inline constexpr int kNumSegments = 18;
inline constexpr int kNumCodes = 7;
inline constexpr int kTrunk = -1;  // lobe/segment/code value meaning "not at this level"

enum Lobe : int { LUB = 0, LLB = 1, RUB = 2, RMB = 3, RLB = 4 };

const std::array<std::string_view, kNumLobes>& lobe_names();
const std::array<std::string_view, kNumSegments>& segment_names();
int lobe_of_segment(int segment);
std::vector<int> lobar_segments(int lobe);
/// 3 for LB1+2, LB3, LB6, LB10, RB6, RB10; 2 otherwise.
int subsegment_count(int segment);
/// "", "a", "b", "c", "a+b", "b+c", "a+c" for codes 0..6.
std::string_view code_suffix(int code);
/// Subsegment name with the side prefix dropped, e.g. "B1+2a" or "B4a+b".
std::string short_name(int segment, int code);
std::string short_segment_name(int segment);

struct ClassInfo {
  int lobe = kTrunk;
  int segment = kTrunk;
  int code = kTrunk;  // 0..6 for subsegmental classes
  friend bool operator==(const ClassInfo&, const ClassInfo&) = default;
};

/// Class name for a (lobe, segment, code) triple: "Trunk", "LUB", "LB3",
/// "LB3-stem", "LB3a", "LB3a+b", ...
std::string class_name(const ClassInfo& c);
/// Inverse of class_name. Also accepts "<seg>a+b+c" as an alias of "<seg>-stem".
std::optional<ClassInfo> parse_class_name(std::string_view name);

class Codebook {
 public:
  /// Ids 1..126 = 1 + 7*segment + code, 127 = Trunk, 128..132 lobar-only,
  /// 133..150 segment-only. 0 is background.
  static Codebook canonical();
  /// JSON object {"<id>": "<class name>", ...}.
  static Codebook from_json(std::string_view text);
  std::string to_json() const;

  void add(int id, const ClassInfo& c);
  const ClassInfo& at(int id) const;  // throws UnknownLabelId
  bool contains(int id) const { return by_id_.count(id) != 0; }
  /// Smallest id carrying exactly this class, if any.
  std::optional<int> id_of(const ClassInfo& c) const;
  const std::map<int, ClassInfo>& entries() const { return by_id_; }

 private:
  std::map<int, ClassInfo> by_id_;
};

struct BranchLabel {
  int lobe = kTrunk;
  int segment = kTrunk;
  int code = kTrunk;
  bool is_trunk() const { return segment == kTrunk; }
  friend bool operator==(const BranchLabel&, const BranchLabel&) = default;
};

struct LabeledGraph {
  AirwayGraph graph;
  std::vector<BranchLabel> labels;
};

/// Level-wise strict-majority vote over each branch's own centerline voxels
/// (the junction voxel shared with the parent is excluded). A subsegment
/// majority fixes segment and lobe, otherwise a segment majority fixes the
/// lobe, otherwise a lobe majority; anything else is Trunk.
LabeledGraph assign_labels(const AirwayGraph& g, const Volume& labels, const Codebook& codebook);

/// Paints each branch's own centerline voxels with its most specific class id.
Volume render_labels(const LabeledGraph& lg, const Codebook& codebook);

struct HierarchyViolation {
  int branch = 0;
  std::string message;
};
std::vector<HierarchyViolation> check_hierarchy(const LabeledGraph& lg);

}  // namespace bronchograph
