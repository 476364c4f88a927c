#include "bronchograph/label_taxonomy.hpp"

#include <algorithm>
#include <charconv>
#include <unordered_map>

#include <json.hpp>

namespace bronchograph {

namespace {

constexpr std::array<std::string_view, kNumLobes> kLobes = {"LUB", "LLB", "RUB", "RMB", "RLB"};
constexpr std::array<std::string_view, kNumSegments> kSegments = {
    "LB1+2", "LB3", "LB4", "LB5", "LB6", "LB8", "LB9", "LB10", "RB1",
    "RB2",   "RB3", "RB4", "RB5", "RB6", "RB7", "RB8", "RB9",  "RB10"};
constexpr std::array<int, kNumSegments> kSegmentLobe = {LUB, LUB, LUB, LUB, LLB, LLB, LLB, LLB, RUB,
                                                        RUB, RUB, RMB, RMB, RLB, RLB, RLB, RLB, RLB};
constexpr std::array<std::string_view, kNumCodes> kSuffix = {"", "a", "b", "c", "a+b", "b+c", "a+c"};

}  // namespace

const std::array<std::string_view, kNumLobes>& lobe_names() { return kLobes; }
const std::array<std::string_view, kNumSegments>& segment_names() { return kSegments; }

int lobe_of_segment(int segment) {
  if (segment < 0 || segment >= kNumSegments) return kTrunk;
  return kSegmentLobe[segment];
}

std::vector<int> lobar_segments(int lobe) {
  std::vector<int> out;
  for (int s = 0; s < kNumSegments; ++s)
    if (kSegmentLobe[s] == lobe) out.push_back(s);
  return out;
}

int subsegment_count(int segment) {
  switch (segment) {
    case 0: case 1: case 4: case 7: case 13: case 17: return 3;
    default: return 2;
  }
}

std::string_view code_suffix(int code) { return kSuffix.at(code); }

std::string short_segment_name(int segment) { return std::string(kSegments.at(segment).substr(1)); }

std::string short_name(int segment, int code) {
  return short_segment_name(segment) + std::string(code_suffix(code));
}

std::string class_name(const ClassInfo& c) {
  if (c.segment == kTrunk) return c.lobe == kTrunk ? "Trunk" : std::string(kLobes.at(c.lobe));
  std::string s(kSegments.at(c.segment));
  if (c.code == kTrunk) return s;
  if (c.code == 0) return s + "-stem";
  return s + std::string(kSuffix.at(c.code));
}

std::optional<ClassInfo> parse_class_name(std::string_view name) {
  if (name == "Trunk") return ClassInfo{};
  for (int l = 0; l < kNumLobes; ++l)
    if (name == kLobes[l]) return ClassInfo{l, kTrunk, kTrunk};
  int best = -1;
  for (int s = 0; s < kNumSegments; ++s) {
    if (name.starts_with(kSegments[s]) && (best < 0 || kSegments[s].size() > kSegments[best].size())) best = s;
  }
  if (best < 0) return std::nullopt;
  const auto rest = name.substr(kSegments[best].size());
  ClassInfo c{kSegmentLobe[best], best, kTrunk};
  if (rest.empty()) return c;
  if (rest == "-stem" || rest == "a+b+c") {
    c.code = 0;
    return c;
  }
  for (int k = 1; k < kNumCodes; ++k) {
    if (rest == kSuffix[k]) {
      c.code = k;
      return c;
    }
  }
  return std::nullopt;
}

Codebook Codebook::canonical() {
  Codebook cb;
  for (int s = 0; s < kNumSegments; ++s)
    for (int k = 0; k < kNumCodes; ++k) cb.add(1 + kNumCodes * s + k, {kSegmentLobe[s], s, k});
  cb.add(127, {});
  for (int l = 0; l < kNumLobes; ++l) cb.add(128 + l, {l, kTrunk, kTrunk});
  for (int s = 0; s < kNumSegments; ++s) cb.add(133 + s, {kSegmentLobe[s], s, kTrunk});
  return cb;
}

Codebook Codebook::from_json(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedHeader, std::string("codebook: ") + e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::MalformedHeader, "codebook must be a JSON object");
  Codebook cb;
  for (const auto& [key, val] : j.items()) {
    int id = 0;
    const auto r = std::from_chars(key.data(), key.data() + key.size(), id);
    if (r.ec != std::errc{} || r.ptr != key.data() + key.size() || id <= 0 || id > 65535)
      throw Error(ErrorCode::MalformedHeader, "codebook key is not a label id: " + key);
    if (!val.is_string()) throw Error(ErrorCode::MalformedHeader, "codebook value must be a class name");
    const auto c = parse_class_name(val.get<std::string>());
    if (!c) throw Error(ErrorCode::MalformedHeader, "unknown class name: " + val.get<std::string>());
    cb.add(id, *c);
  }
  return cb;
}

std::string Codebook::to_json() const {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& [id, c] : by_id_) j[std::to_string(id)] = class_name(c);
  return j.dump(2);
}

void Codebook::add(int id, const ClassInfo& c) { by_id_[id] = c; }

const ClassInfo& Codebook::at(int id) const {
  const auto it = by_id_.find(id);
  if (it == by_id_.end()) throw Error(ErrorCode::UnknownLabelId, "label id " + std::to_string(id) + " not in codebook");
  return it->second;
}

std::optional<int> Codebook::id_of(const ClassInfo& c) const {
  for (const auto& [id, info] : by_id_)
    if (info == c) return id;
  return std::nullopt;
}

namespace {

template <typename Key>
std::optional<Key> strict_majority(const std::vector<Key>& votes, std::size_t total) {
  std::map<Key, std::size_t> counts;
  for (const auto& v : votes) ++counts[v];
  for (const auto& [k, n] : counts)
    if (2 * n > total) return k;
  return std::nullopt;
}

}  // namespace

LabeledGraph assign_labels(const AirwayGraph& g, const Volume& labels, const Codebook& codebook) {
  require_same_dims(g.dims, labels.dims(), "assign_labels");
  LabeledGraph lg{g, std::vector<BranchLabel>(g.size())};
  for (const auto& b : g.branches) {
    std::size_t first = b.own_begin();
    if (first >= b.centerline.size()) first = 0;
    const std::size_t total = b.centerline.size() - first;
    std::vector<std::pair<int, int>> sub;
    std::vector<int> seg, lobe;
    for (std::size_t k = first; k < b.centerline.size(); ++k) {
      const int id = labels[b.centerline[k]];
      if (id == 0) continue;
      const auto& c = codebook.at(id);
      if (c.code != kTrunk) sub.emplace_back(c.segment, c.code);
      if (c.segment != kTrunk) seg.push_back(c.segment);
      if (c.lobe != kTrunk) lobe.push_back(c.lobe);
    }
    auto& out = lg.labels[b.id];
    if (const auto s = strict_majority(sub, total)) {
      out = {lobe_of_segment(s->first), s->first, s->second};
    } else if (const auto s2 = strict_majority(seg, total)) {
      out = {lobe_of_segment(*s2), *s2, kTrunk};
    } else if (const auto l = strict_majority(lobe, total)) {
      out = {*l, kTrunk, kTrunk};
    }
  }
  return lg;
}

Volume render_labels(const LabeledGraph& lg, const Codebook& codebook) {
  const auto& g = lg.graph;
  Volume v(g.dims, g.spacing, VolumeKind::Labels);
  for (const auto& b : g.branches) {
    const auto& l = lg.labels.at(b.id);
    const auto id = codebook.id_of({l.lobe, l.segment, l.code});
    if (!id) {
      if (l.lobe == kTrunk) continue;  // background already reads as Trunk
      throw Error(ErrorCode::UnknownLabelId, "codebook has no id for " + class_name({l.lobe, l.segment, l.code}));
    }
    std::size_t first = b.own_begin();
    if (first >= b.centerline.size()) first = 0;
    for (std::size_t k = first; k < b.centerline.size(); ++k) v[b.centerline[k]] = static_cast<std::uint16_t>(*id);
  }
  return v;
}

std::vector<HierarchyViolation> check_hierarchy(const LabeledGraph& lg) {
  std::vector<HierarchyViolation> out;
  for (std::size_t i = 0; i < lg.labels.size(); ++i) {
    const auto& l = lg.labels[i];
    const int b = static_cast<int>(i);
    if (l.code != kTrunk && l.segment == kTrunk) {
      out.push_back({b, "subsegment code without a segment label"});
    } else if (l.segment != kTrunk && l.lobe != lobe_of_segment(l.segment)) {
      out.push_back({b, std::string(kSegments.at(l.segment)) + " is not in lobe " +
                            (l.lobe == kTrunk ? std::string("Trunk") : std::string(kLobes.at(l.lobe)))});
    }
  }
  return out;
}

}  // namespace bronchograph
