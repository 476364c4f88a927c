#include "bronchograph/branching_patterns.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <tuple>

namespace bronchograph {

namespace {

class UnionFind {
 public:
  explicit UnionFind(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }
  int find(int x) {
    while (parent_[x] != x) x = parent_[x] = parent_[parent_[x]];
    return x;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent_[std::max(a, b)] = std::min(a, b);
  }

 private:
  std::vector<int> parent_;
};

template <typename T>
std::vector<std::vector<T>> clusters_of(const std::vector<T>& members, UnionFind& uf) {
  std::map<int, std::vector<T>> by_root;
  for (std::size_t k = 0; k < members.size(); ++k) by_root[uf.find(static_cast<int>(k))].push_back(members[k]);
  std::vector<std::vector<T>> out;
  for (auto& [r, c] : by_root) {
    std::sort(c.begin(), c.end());
    out.push_back(std::move(c));
  }
  std::sort(out.begin(), out.end());
  return out;
}

template <typename T>
std::string join(const std::vector<T>& parts, const char* sep) {
  std::string s;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    if (k) s += sep;
    s += parts[k];
  }
  return s;
}

bool is_main_bronchus(const BranchLabel& l) { return l.segment == kTrunk; }

int sub_of(const BranchLabel& l) { return (l.segment == kTrunk || l.code == kTrunk) ? -1 : sub_key(l.segment, l.code); }

constexpr std::array<std::array<int, 2>, 3> kCotrunkParts = {{{1, 2}, {2, 3}, {1, 3}}};  // codes 4, 5, 6

}  // namespace

std::string furcation_name(std::size_t clusters) {
  static const std::array<const char*, 6> names = {"None", "Mono", "Bi", "Tri", "Quadri", "Quint"};
  return clusters < names.size() ? names[clusters] : std::to_string(clusters) + "-furcation";
}

std::string_view to_string(CotrunkType t) {
  switch (t) {
    case CotrunkType::Mono: return "mono";
    case CotrunkType::AB: return "a+b";
    case CotrunkType::BC: return "b+c";
    case CotrunkType::AC: return "a+c";
    case CotrunkType::Trifurcation: return "trifurcation";
  }
  return "";
}

const std::vector<InterBlock>& inter_subsegment_blocks() {
  static const std::vector<InterBlock> blocks = {
      {"LB1+2,LB3", {0, 1}},       {"Lingula", {2, 3}},          {"RUB", {8, 9, 10}},
      {"RMB", {11, 12}},           {"LLB", {4, 5, 6, 7}},        {"RLB", {13, 14, 15, 16, 17}},
  };
  return blocks;
}

std::array<int, kNumSegments> segment_representatives(const LabeledGraph& lg) {
  std::array<int, kNumSegments> reps;
  reps.fill(-1);
  for (const auto& b : lg.graph.branches) {
    const int s = lg.labels[b.id].segment;
    if (s == kTrunk) continue;
    const int r = reps[s];
    if (r < 0 || b.generation < lg.graph.branches[r].generation ||
        (b.generation == lg.graph.branches[r].generation && b.id < r))
      reps[s] = b.id;
  }
  return reps;
}

bool segments_cotrunk(const LabeledGraph& lg, const std::array<int, kNumSegments>& reps, int i, int j) {
  if (reps[i] < 0 || reps[j] < 0) return false;
  const auto& g = lg.graph;
  const int a = g.lca(reps[i], reps[j]);
  if (!is_main_bronchus(lg.labels[a])) return false;
  for (std::size_t n = 0; n < g.size(); ++n) {
    if (!g.is_ancestor(a, static_cast<int>(n))) continue;
    const int s = lg.labels[n].segment;
    if (s != kTrunk && s != i && s != j) return false;
  }
  return true;
}

std::vector<LobePattern> intra_segment_patterns(const LabeledGraph& lg, std::vector<int>* skipped) {
  const auto reps = segment_representatives(lg);
  std::vector<LobePattern> out;
  for (int lobe = 0; lobe < kNumLobes; ++lobe) {
    const auto segs = lobar_segments(lobe);
    if (std::any_of(segs.begin(), segs.end(), [&](int s) { return reps[s] < 0; })) {
      if (skipped) skipped->push_back(lobe);
      continue;
    }
    // The lobar bronchus itself is never a shared trunk: without this a
    // two-segment lobe (RMB) would always collapse into one cluster.
    int lobe_root = reps[segs.front()];
    for (int s : segs) lobe_root = lg.graph.lca(lobe_root, reps[s]);
    UnionFind uf(segs.size());
    for (std::size_t a = 0; a < segs.size(); ++a)
      for (std::size_t b = a + 1; b < segs.size(); ++b)
        if (lg.graph.lca(reps[segs[a]], reps[segs[b]]) != lobe_root && segments_cotrunk(lg, reps, segs[a], segs[b]))
          uf.unite(static_cast<int>(a), static_cast<int>(b));
    LobePattern p;
    p.lobe = lobe;
    p.clusters = clusters_of(segs, uf);
    std::vector<std::string> parts;
    for (const auto& c : p.clusters) {
      std::vector<std::string> names;
      for (int s : c) names.push_back(short_segment_name(s).substr(1));
      parts.push_back("B" + join(names, "+"));
    }
    p.configuration = join(parts, ",");
    p.furcation = furcation_name(p.clusters.size());
    out.push_back(std::move(p));
  }
  return out;
}

std::array<SubsegmentPattern, kNumSegments> intra_subsegment_patterns(const LabeledGraph& lg) {
  std::array<std::array<bool, kNumCodes>, kNumSegments> present{};
  for (const auto& l : lg.labels)
    if (l.segment != kTrunk && l.code != kTrunk) present[l.segment][l.code] = true;

  std::array<SubsegmentPattern, kNumSegments> out;
  for (int s = 0; s < kNumSegments; ++s) {
    auto& r = out[s];
    r.segment = s;
    const auto& has = present[s];
    const int stem = has[0] ? 1 : 2;
    auto name = [&](int code) { return short_name(s, code); };
    if (subsegment_count(s) == 2) {
      if (!(has[1] && has[2])) continue;
      r.valid = true;
      r.stem_number = stem;
      r.cotrunk = CotrunkType::Mono;
      r.configuration = stem == 1 ? name(4) : name(1) + "," + name(2);
      r.furcation = furcation_name(stem == 1 ? 1 : 2);
      continue;
    }
    if (!(has[1] && has[2] && has[3])) continue;
    const int cotrunks = has[4] + has[5] + has[6];
    if (cotrunks > 1) continue;
    r.valid = true;
    r.stem_number = stem;
    if (has[4]) {
      r.cotrunk = CotrunkType::AB;
      r.configuration = name(4) + "," + name(3);
    } else if (has[5]) {
      r.cotrunk = CotrunkType::BC;
      r.configuration = name(1) + "," + name(5);
    } else if (has[6]) {
      r.cotrunk = CotrunkType::AC;
      r.configuration = stem == 1 ? name(6) + "," + name(2) : name(2) + "," + name(6);
    } else {
      r.cotrunk = CotrunkType::Trifurcation;
      r.configuration = name(1) + "," + name(2) + "," + name(3);
    }
    r.furcation = furcation_name(r.cotrunk == CotrunkType::Trifurcation ? 3 : 2);
  }
  return out;
}

std::vector<std::pair<SubKey, SubKey>> inter_subsegment_relation(const LabeledGraph& lg) {
  const auto& g = lg.graph;
  // Representatives of present non-stem subsegment classes and of segments.
  std::map<SubKey, int> rep;
  for (const auto& b : g.branches) {
    const auto& l = lg.labels[b.id];
    if (l.segment == kTrunk || l.code == kTrunk || l.code == 0) continue;
    const SubKey k = sub_key(l.segment, l.code);
    auto it = rep.find(k);
    if (it == rep.end() || b.generation < g.branches[it->second].generation ||
        (b.generation == g.branches[it->second].generation && b.id < it->second))
      rep[k] = b.id;
  }
  const auto seg_rep = segment_representatives(lg);
  std::set<std::pair<SubKey, SubKey>> marks;
  auto mark = [&](SubKey a, SubKey b) {
    if (a != b) marks.insert({std::min(a, b), std::max(a, b)});
  };
  auto below_all = [&](int a, auto&& ok) {
    for (std::size_t n = 0; n < g.size(); ++n)
      if (g.is_ancestor(a, static_cast<int>(n)) && !ok(lg.labels[n])) return false;
    return true;
  };

  for (const auto& [i, ri] : rep) {
    const int si = i / kNumCodes, ci = i % kNumCodes;
    for (const auto& [j, rj] : rep) {
      if (j >= i) break;
      const int sj = j / kNumCodes, cj = j % kNumCodes;
      if (si == sj) {
        bool rule = false;
        for (int c = 4; c <= 6; ++c) {
          const auto& parts = kCotrunkParts[c - 4];
          const bool i_part = ci == parts[0] || ci == parts[1];
          const bool j_part = cj == parts[0] || cj == parts[1];
          if ((ci == c && j_part) || (cj == c && i_part)) rule = true;
          if (i_part && j_part && ci != cj && rep.count(sub_key(si, c))) rule = true;
        }
        if (rule) mark(i, j);
      }
      const int a = g.lca(ri, rj);
      if (is_main_bronchus(lg.labels[a]) && below_all(a, [&](const BranchLabel& l) {
            const int s = sub_of(l);
            return is_main_bronchus(l) || s == i || s == j;
          }))
        mark(i, j);
    }
    for (int k = 0; k < kNumSegments; ++k) {
      if (k == si || seg_rep[k] < 0) continue;
      const int a = g.lca(ri, seg_rep[k]);
      if (below_all(a, [&](const BranchLabel& l) { return l.segment == k || is_main_bronchus(l) || sub_of(l) == i; })) {
        for (const auto& [s, rs] : rep)
          if (s / kNumCodes == k) mark(i, s);
      }
    }
  }
  return {marks.begin(), marks.end()};
}

std::vector<BlockPattern> inter_subsegment_patterns(const LabeledGraph& lg,
                                                    const std::array<SubsegmentPattern, kNumSegments>& intra,
                                                    std::vector<std::string>* skipped) {
  const auto relation = inter_subsegment_relation(lg);
  std::set<SubKey> present;
  for (const auto& l : lg.labels)
    if (l.segment != kTrunk && l.code != kTrunk && l.code != 0) present.insert(sub_key(l.segment, l.code));

  std::vector<BlockPattern> out;
  for (const auto& blk : inter_subsegment_blocks()) {
    if (std::any_of(blk.segments.begin(), blk.segments.end(), [&](int s) { return !intra[s].valid; })) {
      if (skipped) skipped->push_back(blk.name);
      continue;
    }
    std::vector<SubKey> members;
    for (SubKey k : present)
      if (std::find(blk.segments.begin(), blk.segments.end(), k / kNumCodes) != blk.segments.end())
        members.push_back(k);
    UnionFind uf(members.size());
    auto pos = [&](SubKey k) {
      return static_cast<int>(std::lower_bound(members.begin(), members.end(), k) - members.begin());
    };
    for (const auto& [a, b] : relation) {
      if (std::binary_search(members.begin(), members.end(), a) && std::binary_search(members.begin(), members.end(), b))
        uf.unite(pos(a), pos(b));
    }
    BlockPattern p;
    p.block = blk.name;
    p.segments = blk.segments;
    p.raw_clusters = clusters_of(members, uf);

    // Uniform clustering: clusters drawn from a single segment collapse into one.
    std::map<int, std::vector<SubKey>> single;
    for (const auto& c : p.raw_clusters) {
      const int s = c.front() / kNumCodes;
      if (std::all_of(c.begin(), c.end(), [&](SubKey k) { return k / kNumCodes == s; })) {
        single[s].insert(single[s].end(), c.begin(), c.end());
      } else {
        p.clusters.push_back(c);
      }
    }
    for (auto& [s, c] : single) {
      std::sort(c.begin(), c.end());
      p.clusters.push_back(std::move(c));
    }
    std::sort(p.clusters.begin(), p.clusters.end());

    std::vector<std::string> parts;
    for (const auto& c : p.clusters) {
      std::vector<std::string> tokens;
      for (int s : blk.segments) {
        std::vector<SubKey> mine, all;
        for (SubKey k : c)
          if (k / kNumCodes == s) mine.push_back(k);
        for (SubKey k : members)
          if (k / kNumCodes == s) all.push_back(k);
        if (mine.empty()) continue;
        if (mine == all) {
          tokens.push_back(short_segment_name(s));
        } else {
          for (SubKey k : mine) tokens.push_back(short_name(s, k % kNumCodes));
        }
      }
      parts.push_back(join(tokens, "+"));
    }
    p.configuration = join(parts, ",");
    p.furcation = furcation_name(p.clusters.size());
    out.push_back(std::move(p));
  }
  return out;
}

PatternReport analyze_patterns(const LabeledGraph& lg) {
  if (!lg.graph.has_matrices()) throw Error(ErrorCode::InvalidArgument, "graph has no LCA/descendant matrices");
  PatternReport r;
  r.lobes = intra_segment_patterns(lg, &r.skipped_lobes);
  r.segments = intra_subsegment_patterns(lg);
  r.blocks = inter_subsegment_patterns(lg, r.segments, &r.skipped_blocks);
  return r;
}

std::vector<PatternFrequency> aggregate_pattern_stats(const std::vector<PatternReport>& reports) {
  if (reports.empty()) throw Error(ErrorCode::InvalidArgument, "no pattern reports to aggregate");
  using Key = std::tuple<std::string, std::string, std::string, std::string, std::string>;
  std::map<Key, std::size_t> counts;
  std::map<std::pair<std::string, std::string>, std::size_t> valid;
  auto add = [&](const std::string& level, const std::string& group, const std::string& stem,
                 const std::string& config, const std::string& furcation) {
    ++counts[{level, group, stem, config, furcation}];
    ++valid[{level, group}];
  };
  for (const auto& r : reports) {
    for (const auto& l : r.lobes) add("segment", std::string(lobe_names()[l.lobe]), "", l.configuration, l.furcation);
    for (const auto& s : r.segments) {
      if (!s.valid) continue;
      add("subsegment", std::string(segment_names()[s.segment]), std::to_string(s.stem_number) + "-stem",
          s.configuration, s.furcation);
    }
    for (const auto& b : r.blocks) add("inter-subsegment", b.block, "", b.configuration, b.furcation);
  }
  std::vector<PatternFrequency> out;
  for (const auto& [k, n] : counts) {
    PatternFrequency f;
    std::tie(f.level, f.group, f.stem, f.configuration, f.furcation) = k;
    f.count = n;
    f.valid_cases = valid[{f.level, f.group}];
    f.percent = 100.0 * static_cast<double>(n) / f.valid_cases;
    out.push_back(std::move(f));
  }
  return out;
}

}  // namespace bronchograph
