#include "bronchograph/serialize.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace bronchograph {

namespace {

Json vec(const Vec3& v) { return Json::array({v[0], v[1], v[2]}); }
Json ijk(const Index3& v) { return Json::array({v[0], v[1], v[2]}); }

// JSON has no infinities; they are written as strings.
Json number(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

}  // namespace

std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

Json schema_header(const std::string& kind) {
  Json j;
  j["schema"] = "bronchograph." + kind;
  j["version"] = kSchemaVersion;
  return j;
}

Json to_json(const SkeletonTree& t) {
  Json j = schema_header("skeleton");
  const auto b = betti_numbers(t);
  j["dims"] = Json::array({t.dims.nx, t.dims.ny, t.dims.nz});
  j["spacing"] = vec(t.spacing);
  j["root"] = t.root;
  j["beta0"] = b.beta0;
  j["beta1"] = b.beta1;
  j["other_components"] = t.other_components;
  j["leaves"] = t.leaves;
  Json nodes = Json::array();
  for (std::size_t i = 0; i < t.nodes.size(); ++i) {
    const auto& n = t.nodes[i];
    Json o;
    o["id"] = i;
    o["xyz_voxel"] = ijk(n.ijk);
    o["xyz_mm"] = vec(n.mm);
    o["radius_mm"] = n.radius;
    o["parent"] = n.parent < 0 ? Json(nullptr) : Json(n.parent);
    nodes.push_back(std::move(o));
  }
  j["nodes"] = std::move(nodes);
  return j;
}

Json to_json(const BranchLabel& l) {
  Json j;
  j["class"] = class_name({l.lobe, l.segment, l.code});
  j["lobe"] = l.lobe == kTrunk ? Json("Trunk") : Json(std::string(lobe_names()[l.lobe]));
  j["segment"] = l.segment == kTrunk ? Json("Trunk") : Json(std::string(segment_names()[l.segment]));
  j["code"] = l.code == kTrunk ? Json(nullptr) : Json(l.code);
  return j;
}

Json to_json(const AirwayGraph& g, const std::vector<BranchLabel>* labels) {
  Json j = schema_header("graph");
  const auto b = betti_numbers(g.size(), g.edges());
  j["metadata"] = {{"beta0", b.beta0}, {"beta1", b.beta1}, {"branch_count", g.size()}};
  j["dims"] = Json::array({g.dims.nx, g.dims.ny, g.dims.nz});
  j["spacing"] = vec(g.spacing);
  j["root"] = g.root;
  Json arr = Json::array();
  for (const auto& br : g.branches) {
    Json o;
    o["id"] = br.id;
    o["parent"] = br.parent < 0 ? Json(nullptr) : Json(br.parent);
    o["children"] = br.children;
    o["generation"] = br.generation;
    o["length_mm"] = br.length;
    o["mean_radius_mm"] = br.mean_radius;
    o["start_mm"] = vec(br.start);
    o["end_mm"] = vec(br.end);
    Json cl = Json::array();
    for (auto v : br.centerline) cl.push_back(ijk(g.dims.coords(v)));
    o["centerline"] = std::move(cl);
    o["radii_mm"] = br.radii;
    o["voxel_count"] = br.voxels.size();
    if (labels) o["label"] = to_json(labels->at(br.id));
    arr.push_back(std::move(o));
  }
  j["branches"] = std::move(arr);
  return j;
}

Json to_json(const std::vector<FeatureVector>& f) {
  Json j = schema_header("features");
  j["columns"] = FeatureVector::kColumns;
  Json rows = Json::array();
  for (const auto& r : f) {
    Json o;
    o["branch_id"] = r.id;
    const auto v = r.values();
    for (std::size_t k = 0; k < v.size(); ++k) o[FeatureVector::kColumns[k]] = v[k];
    rows.push_back(std::move(o));
  }
  j["branches"] = std::move(rows);
  return j;
}

Json to_json(const Overlap& o) { return {{"dsc", o.dsc}, {"sensitivity", o.sensitivity}, {"precision", o.precision}}; }

Json to_json(const SegMetricsReport& r) {
  Json j = schema_header("segmentation_metrics");
  j["dsc"] = r.dsc;
  j["cl_dice"] = r.cl_dice;
  j["sensitivity"] = r.sensitivity;
  j["precision"] = r.precision;
  j["tld"] = r.tld;
  j["bnd"] = r.bnd;
  j["t_det_mm"] = r.t_det;
  j["t_ref_mm"] = r.t_ref;
  j["b_det"] = r.b_det;
  j["b_ref"] = r.b_ref;
  return j;
}

std::string level_name(LabelLevel level) {
  switch (level) {
    case LabelLevel::Lobar: return "lobar";
    case LabelLevel::Segmental: return "segmental";
    case LabelLevel::Subsegmental: return "subsegmental";
  }
  return "";
}

LabelLevel parse_level(const std::string& s) {
  if (s == "lobar") return LabelLevel::Lobar;
  if (s == "segmental") return LabelLevel::Segmental;
  if (s == "subsegmental") return LabelLevel::Subsegmental;
  throw Error(ErrorCode::InvalidArgument, "unknown label level " + s);
}

namespace {

std::string key_name(int key, LabelLevel level) {
  if (key == kTrunk) return "Trunk";
  switch (level) {
    case LabelLevel::Lobar: return std::string(lobe_names()[key]);
    case LabelLevel::Segmental: return std::string(segment_names()[key]);
    case LabelLevel::Subsegmental: {
      const int s = key / kNumCodes;
      return class_name({lobe_of_segment(s), s, key % kNumCodes});
    }
  }
  return "";
}

}  // namespace

Json to_json(const LabelMetricsReport& r) {
  Json j = schema_header("label_metrics");
  j["level"] = level_name(r.level);
  j["tree_cons"] = r.tree_cons;
  j["topo_dist"] = r.topo_dist;
  j["accuracy"] = r.accuracy;
  j["macro_precision"] = r.macro_precision;
  j["macro_sensitivity"] = r.macro_sensitivity;
  j["n_s"] = r.n_s;
  j["n_cs"] = r.n_cs;
  Json names = Json::array();
  for (int c : r.classes) names.push_back(key_name(c, r.level));
  j["classes"] = names;
  Json conf = Json::array();
  for (int g : r.classes) {
    Json row = Json::array();
    for (int p : r.classes) {
      const auto it = r.confusion.find({g, p});
      row.push_back(it == r.confusion.end() ? 0 : it->second);
    }
    conf.push_back(std::move(row));
  }
  j["confusion"] = std::move(conf);
  return j;
}

Json to_json(const PatternReport& r) {
  Json j = schema_header("patterns");
  Json lobes = Json::object();
  for (const auto& l : r.lobes) {
    Json clusters = Json::array();
    for (const auto& c : l.clusters) {
      Json names = Json::array();
      for (int s : c) names.push_back(std::string(segment_names()[s]));
      clusters.push_back(std::move(names));
    }
    lobes[std::string(lobe_names()[l.lobe])] = {
        {"configuration", l.configuration}, {"furcation", l.furcation}, {"clusters", std::move(clusters)}};
  }
  j["intra_segment"] = std::move(lobes);
  Json skipped = Json::array();
  for (int l : r.skipped_lobes) skipped.push_back(std::string(lobe_names()[l]));
  j["skipped_lobes"] = std::move(skipped);

  Json segs = Json::object();
  for (const auto& s : r.segments) {
    Json o;
    o["valid"] = s.valid;
    if (s.valid) {
      o["stem_number"] = s.stem_number;
      o["cotrunk_type"] = std::string(to_string(s.cotrunk));
      o["configuration"] = s.configuration;
      o["furcation"] = s.furcation;
    }
    segs[std::string(segment_names()[s.segment])] = std::move(o);
  }
  j["intra_subsegment"] = std::move(segs);

  Json blocks = Json::object();
  for (const auto& b : r.blocks) {
    Json clusters = Json::array();
    for (const auto& c : b.clusters) {
      Json names = Json::array();
      for (SubKey k : c) names.push_back(class_name({lobe_of_segment(k / kNumCodes), k / kNumCodes, k % kNumCodes}));
      clusters.push_back(std::move(names));
    }
    blocks[b.block] = {{"configuration", b.configuration}, {"furcation", b.furcation}, {"clusters", std::move(clusters)}};
  }
  j["inter_subsegment"] = std::move(blocks);
  j["skipped_blocks"] = r.skipped_blocks;
  return j;
}

Json to_json(const std::vector<PatternFrequency>& rows) {
  Json j = schema_header("pattern_frequencies");
  Json arr = Json::array();
  for (const auto& f : rows) {
    arr.push_back({{"level", f.level},
                   {"group", f.group},
                   {"stem", f.stem},
                   {"configuration", f.configuration},
                   {"furcation", f.furcation},
                   {"count", f.count},
                   {"valid_cases", f.valid_cases},
                   {"percent", f.percent}});
  }
  j["rows"] = std::move(arr);
  return j;
}

void write_pattern_csv(std::ostream& os, const std::vector<PatternFrequency>& rows) {
  os << "level,group,stem,configuration,furcation,count,valid_cases,percent\n";
  for (const auto& f : rows) {
    os << f.level << ',' << f.group << ',' << f.stem << ",\"" << f.configuration << "\"," << f.furcation << ','
       << f.count << ',' << f.valid_cases << ',' << format_number(f.percent) << '\n';
  }
}

Json to_json(const SignatureMatrix& m) {
  Json j = schema_header("signatures");
  j["columns"] = descriptor_names();
  Json rows = Json::object();
  for (int r = 0; r < kNumComponents; ++r) {
    Json row = Json::array();
    for (double v : m.values[r]) row.push_back(number(v));
    rows[component_name(r)] = std::move(row);
  }
  j["components"] = std::move(rows);
  return j;
}

Json to_json(const ReferenceTable& ref) {
  Json j = schema_header("reference");
  j["columns"] = descriptor_names();
  Json rows = Json::object();
  for (int r = 0; r < kNumComponents; ++r) {
    Json row = Json::array();
    for (int d = 0; d < kNumDescriptors; ++d) {
      row.push_back({{"mean", number(ref.mean[r][d])},
                     {"std", ref.defined(r, d) ? number(ref.std[r][d]) : Json(nullptr)},
                     {"n", ref.count[r][d]}});
    }
    rows[component_name(r)] = std::move(row);
  }
  j["components"] = std::move(rows);
  return j;
}

SignatureMatrix read_signature_csv(std::istream& is) {
  SignatureMatrix m;
  for (auto& row : m.values) row.fill(-1.0);
  std::string line;
  if (!std::getline(is, line)) throw Error(ErrorCode::MalformedHeader, "signature CSV is empty");
  std::vector<bool> seen(kNumComponents, false);
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string name, cell;
    std::getline(ss, name, ',');
    int row = -1;
    for (int r = 0; r < kNumComponents; ++r)
      if (component_name(r) == name) row = r;
    if (row < 0) throw Error(ErrorCode::MalformedHeader, "unknown signature component " + name);
    for (int d = 0; d < kNumDescriptors; ++d) {
      if (!std::getline(ss, cell, ',')) throw Error(ErrorCode::MalformedHeader, "short signature row " + name);
      try {
        std::size_t used = 0;
        m.values[row][d] = std::stod(cell, &used);
        if (used != cell.size()) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw Error(ErrorCode::MalformedHeader, "bad number '" + cell + "' in row " + name);
      }
    }
    seen[row] = true;
  }
  for (int r = 0; r < kNumComponents; ++r)
    if (!seen[r]) throw Error(ErrorCode::MalformedHeader, "signature CSV lacks row " + component_name(r));
  return m;
}

}  // namespace bronchograph
