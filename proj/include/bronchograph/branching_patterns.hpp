#pragma once

#include <array>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "bronchograph/label_taxonomy.hpp"

namespace bronchograph {

/// Furcation name for a cluster count: Mono, Bi, Tri, Quadri, Quint.
std::string furcation_name(std::size_t clusters);

struct LobePattern {
  int lobe = 0;
  std::vector<std::vector<int>> clusters;  // segment indices, each sorted; clusters ordered by first member
  std::string configuration;               // e.g. "B1+2+3,B4+5"
  std::string furcation;
};

enum class CotrunkType { Mono, AB, BC, AC, Trifurcation };
std::string_view to_string(CotrunkType t);

struct SubsegmentPattern {
  int segment = 0;
  bool valid = false;
  int stem_number = 0;  // 1 or 2 when valid
  CotrunkType cotrunk = CotrunkType::Mono;
  std::string configuration;  // e.g. "B1+2a+b,B1+2c"
  std::string furcation;
};

/// Subsegment class key: segment * 7 + code.
using SubKey = int;
inline SubKey sub_key(int segment, int code) { return segment * kNumCodes + code; }

struct BlockPattern {
  std::string block;
  std::vector<int> segments;
  std::vector<std::vector<SubKey>> raw_clusters;  // union-find output before uniform clustering
  std::vector<std::vector<SubKey>> clusters;      // after uniform clustering
  std::string configuration;                      // e.g. "B4a,B4b+B5"
  std::string furcation;
};

struct PatternReport {
  std::vector<LobePattern> lobes;
  std::vector<int> skipped_lobes;
  std::array<SubsegmentPattern, kNumSegments> segments{};
  std::vector<BlockPattern> blocks;
  std::vector<std::string> skipped_blocks;
};

struct InterBlock {
  std::string name;
  std::vector<int> segments;
};
const std::vector<InterBlock>& inter_subsegment_blocks();

/// Minimum-generation node per segment (ties by smaller id), -1 when absent.
std::array<int, kNumSegments> segment_representatives(const LabeledGraph& lg);

/// Pairwise segment merge test: the LCA of the two representatives is a
/// Trunk branch and every branch below it is labeled i, j or Trunk.
bool segments_cotrunk(const LabeledGraph& lg, const std::array<int, kNumSegments>& reps, int i, int j);

/// Per-lobe union-find over segments_cotrunk, except that pairs whose LCA is
/// the lobe's common ancestor are never merged.
std::vector<LobePattern> intra_segment_patterns(const LabeledGraph& lg, std::vector<int>* skipped = nullptr);
std::array<SubsegmentPattern, kNumSegments> intra_subsegment_patterns(const LabeledGraph& lg);

/// Merge relation between present non-stem subsegment classes (pairs i < j).
std::vector<std::pair<SubKey, SubKey>> inter_subsegment_relation(const LabeledGraph& lg);
std::vector<BlockPattern> inter_subsegment_patterns(const LabeledGraph& lg,
                                                    const std::array<SubsegmentPattern, kNumSegments>& intra,
                                                    std::vector<std::string>* skipped = nullptr);

PatternReport analyze_patterns(const LabeledGraph& lg);

struct PatternFrequency {
  std::string level;  // "segment", "subsegment", "inter-subsegment"
  std::string group;  // lobe, segment or block name
  std::string stem;   // "1-stem"/"2-stem" for subsegment rows, empty otherwise
  std::string configuration;
  std::string furcation;
  std::size_t count = 0;
  std::size_t valid_cases = 0;  // denominator for the group
  double percent = 0.0;
};

std::vector<PatternFrequency> aggregate_pattern_stats(const std::vector<PatternReport>& reports);

}  // namespace bronchograph
