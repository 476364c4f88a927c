#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "bronchograph/airway_graph.hpp"
#include "bronchograph/branching_patterns.hpp"
#include "bronchograph/cohort_stats.hpp"
#include "bronchograph/edt.hpp"
#include "bronchograph/eval_metrics.hpp"
#include "bronchograph/label_taxonomy.hpp"
#include "bronchograph/morpho_signatures.hpp"
#include "bronchograph/mpc_skel.hpp"
#include "bronchograph/node_features.hpp"
#include "bronchograph/serialize.hpp"
#include "bronchograph/synth_phantom.hpp"
#include "bronchograph/volume_io.hpp"

namespace fs = std::filesystem;
using namespace bronchograph;

namespace {

// ---- logging

enum class LogLevel { Error = 0, Warn = 1, Info = 2, Debug = 3 };
LogLevel g_log_level = LogLevel::Warn;
std::mutex g_log_mutex;

LogLevel log_level_from_env() {
  const char* v = std::getenv("BRONCHOGRAPH_LOG");
  if (!v) return LogLevel::Warn;
  const std::string s(v);
  if (s == "error" || s == "0" || s == "quiet") return LogLevel::Error;
  if (s == "info" || s == "2") return LogLevel::Info;
  if (s == "debug" || s == "3") return LogLevel::Debug;
  return LogLevel::Warn;
}

void log(LogLevel level, const std::string& msg) {
  if (level > g_log_level) return;
  static const char* tags[] = {"error", "warning", "info", "debug"};
  std::lock_guard lock(g_log_mutex);
  std::cerr << "bronchograph: " << tags[static_cast<int>(level)] << ": " << msg << '\n';
}

std::string one_line(std::string s) {
  std::replace(s.begin(), s.end(), '\n', ' ');
  while (!s.empty() && s.back() == ' ') s.pop_back();
  return s;
}

// ---- options

struct Options {
  std::vector<std::string> inputs;
  std::string out;
  std::string spacing_override;
  std::string root;
  double gamma = 6.0;
  double coverage_factor = 2.0;
  double coverage_threshold = 0.8;
  int pad_size = 64;
  unsigned workers = 1;
  std::string codebook;
  bool json = false;

  std::string labels;
  std::string pred, gt, pred_labels, gt_labels;
  std::string level = "segmental";
  std::string manifest;
  std::size_t top_k = 20;
  std::string name;
  std::uint64_t seed = 0;
  std::string spacing = "1,1,1";
};

Vec3 parse_vec3(const std::string& s, const char* what) {
  Vec3 v{};
  char c1 = 0, c2 = 0;
  std::istringstream is(s);
  if (!(is >> v[0] >> c1 >> v[1] >> c2 >> v[2]) || c1 != ',' || c2 != ',' || !(is >> std::ws).eof())
    throw Error(ErrorCode::InvalidArgument, std::string(what) + " must look like a,b,c: '" + s + "'");
  return v;
}

SkelParams skel_params(const Options& o) { return {o.gamma, o.coverage_factor}; }

Codebook load_codebook(const Options& o) {
  if (o.codebook.empty()) return Codebook::canonical();
  std::ifstream in(o.codebook);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot read codebook " + o.codebook);
  std::stringstream ss;
  ss << in.rdbuf();
  return Codebook::from_json(ss.str());
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

// ---- cases

struct CaseInput {
  std::string id;
  fs::path mask;
  fs::path labels;  // empty when not available
};

std::string stem_of(const fs::path& p) {
  std::string name = p.filename().string();
  for (const char* ext : {".nrrd", ".nhdr", ".json"}) {
    const std::string e(ext);
    if (name.size() > e.size() && name.compare(name.size() - e.size(), e.size(), e) == 0)
      return name.substr(0, name.size() - e.size());
  }
  return p.stem().string();
}

std::optional<fs::path> find_volume(const fs::path& dir, const std::string& base) {
  for (const char* ext : {".nrrd", ".nhdr", ".json"}) {
    const auto p = dir / (base + ext);
    if (fs::is_regular_file(p)) return p;
  }
  return std::nullopt;
}

// A positional input is either a mask volume or a case directory with mask.* and labels.*.
std::vector<CaseInput> resolve_cases(const Options& o, bool need_labels) {
  if (o.inputs.empty()) throw Error(ErrorCode::InvalidArgument, "no input given");
  if (!o.labels.empty() && o.inputs.size() != 1)
    throw Error(ErrorCode::InvalidArgument, "--labels applies to a single input");
  std::vector<CaseInput> cases;
  for (const auto& in : o.inputs) {
    const fs::path p(in);
    CaseInput c;
    if (fs::is_directory(p)) {
      const auto m = find_volume(p, "mask");
      if (!m) throw Error(ErrorCode::IoFailure, "case directory " + in + " has no mask volume");
      c.mask = *m;
      if (const auto l = find_volume(p, "labels")) c.labels = *l;
      c.id = fs::absolute(p).lexically_normal().filename().string();
      if (c.id.empty()) c.id = fs::absolute(p).lexically_normal().parent_path().filename().string();
    } else {
      c.mask = p;
      c.id = stem_of(p);
    }
    if (!o.labels.empty()) c.labels = o.labels;
    if (need_labels && c.labels.empty()) throw Error(ErrorCode::InvalidArgument, "no label volume for case " + c.id);
    cases.push_back(std::move(c));
  }
  std::map<std::string, int> seen;
  for (const auto& c : cases)
    if (++seen[c.id] > 1) throw Error(ErrorCode::InvalidArgument, "duplicate case id " + c.id);
  return cases;
}

Volume load_mask(const fs::path& path, const Options& o) {
  Volume v = load_volume(path);
  if (v.kind() != VolumeKind::Binary) {
    std::vector<std::uint16_t> bin(v.data().size());
    for (std::size_t i = 0; i < bin.size(); ++i) bin[i] = v.data()[i] != 0;
    v = Volume(v.dims(), v.spacing(), VolumeKind::Binary, std::move(bin));
  }
  if (!o.spacing_override.empty()) v.set_spacing(parse_vec3(o.spacing_override, "--spacing-override"));
  return v;
}

Volume load_labels(const fs::path& path, const Options& o) {
  Volume v = load_volume(path);
  if (!o.spacing_override.empty()) v.set_spacing(parse_vec3(o.spacing_override, "--spacing-override"));
  return v;
}

struct Pipeline {
  Volume mask;
  DistanceField edt;
  SkeletonTree skel;
  AirwayGraph graph;
};

Pipeline run_pipeline(Volume mask, const Options& o, bool with_graph = true) {
  Pipeline p;
  p.mask = std::move(mask);
  p.edt = distance_transform(p.mask);
  std::optional<Index3> hint;
  if (!o.root.empty()) {
    const auto v = parse_vec3(o.root, "--root");
    hint = Index3{static_cast<int>(v[0]), static_cast<int>(v[1]), static_cast<int>(v[2])};
  }
  p.skel = extract_skeleton(p.mask, p.edt, select_root(p.mask, p.edt, hint), skel_params(o));
  if (p.skel.other_components > 0)
    log(LogLevel::Warn, std::to_string(p.skel.other_components) + " foreground component(s) not connected to the root were ignored");
  if (with_graph) p.graph = partition_branches(p.skel, p.mask, p.edt);
  return p;
}

LabeledGraph labeled_case(const CaseInput& c, const Options& o, const Codebook& cb) {
  auto p = run_pipeline(load_mask(c.mask, o), o);
  return assign_labels(p.graph, load_labels(c.labels, o), cb);
}

// What a case contributes to stdout: a JSON document and its plain rendering.
struct CaseOutput {
  Json json;
  std::string text;
};

struct CaseResult {
  bool ok = false;
  std::string error;
  CaseOutput out;
};

template <class Fn>
void parallel_for(std::size_t n, unsigned workers, Fn&& fn) {
  const unsigned w = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(n)));
  std::atomic<std::size_t> next{0};
  auto body = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < n;) fn(i);
  };
  std::vector<std::thread> threads;
  for (unsigned t = 1; t < w; ++t) threads.emplace_back(body);
  body();
  for (auto& t : threads) t.join();
}

// Runs `fn` per case, then prints results in case order. Returns the exit code.
int run_batch(const std::string& command, const std::vector<CaseInput>& cases, const Options& o,
              const std::function<CaseOutput(const CaseInput&)>& fn) {
  if (!o.out.empty()) fs::create_directories(o.out);
  std::vector<CaseResult> results(cases.size());
  parallel_for(cases.size(), o.workers, [&](std::size_t i) {
    try {
      log(LogLevel::Info, command + " " + cases[i].id);
      results[i].out = fn(cases[i]);
      results[i].ok = true;
    } catch (const std::exception& e) {
      results[i].error = one_line(e.what());
    }
  });

  const bool single = cases.size() == 1;
  if (single && !results[0].ok) {
    log(LogLevel::Error, cases[0].id + ": " + results[0].error);
    return 1;
  }
  std::size_t skipped = 0;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    if (results[i].ok) continue;
    ++skipped;
    log(LogLevel::Warn, "skipped " + cases[i].id + ": " + results[i].error);
  }

  if (single) {
    std::cout << (o.json ? dump(results[0].out.json) : results[0].out.text);
  } else if (o.json) {
    Json j = schema_header("batch");
    j["command"] = command;
    Json done = Json::array(), failed = Json::array();
    for (std::size_t i = 0; i < cases.size(); ++i) {
      if (results[i].ok)
        done.push_back({{"case", cases[i].id}, {"result", results[i].out.json}});
      else
        failed.push_back({{"case", cases[i].id}, {"error", results[i].error}});
    }
    j["cases"] = std::move(done);
    j["skipped"] = std::move(failed);
    std::cout << dump(j);
  } else {
    for (std::size_t i = 0; i < cases.size(); ++i) {
      if (!results[i].ok) continue;
      std::cout << "# case " << cases[i].id << '\n' << results[i].out.text;
    }
  }
  return skipped ? 2 : 0;
}

fs::path out_file(const Options& o, const std::string& id, const std::string& suffix) {
  return fs::path(o.out) / (id + suffix);
}

// ---- subcommands

int cmd_edt(const Options& o) {
  const auto cases = resolve_cases(o, false);
  return run_batch("edt", cases, o, [&](const CaseInput& c) {
    const auto mask = load_mask(c.mask, o);
    const auto edt = distance_transform(mask);
    double mx = 0.0;
    for (double v : edt.data) mx = std::max(mx, v);
    CaseOutput r;
    r.json = schema_header("edt");
    r.json["dims"] = Json::array({edt.dims.nx, edt.dims.ny, edt.dims.nz});
    r.json["foreground"] = mask.foreground_count();
    r.json["max_mm"] = mx;
    if (!o.out.empty()) {
      const auto path = out_file(o, c.id, ".edt.nrrd");
      save_field_nrrd(edt, path);
      r.json["file"] = path.filename().string();
    }
    r.text = "foreground " + std::to_string(mask.foreground_count()) + " voxels, max EDT " + format_number(mx) + " mm\n";
    return r;
  });
}

int cmd_skeletonize(const Options& o) {
  const auto cases = resolve_cases(o, false);
  return run_batch("skeletonize", cases, o, [&](const CaseInput& c) {
    const auto p = run_pipeline(load_mask(c.mask, o), o, false);
    CaseOutput r;
    r.json = to_json(p.skel);
    if (!o.out.empty()) write_text(out_file(o, c.id, ".skeleton.json"), dump(r.json));
    r.text = dump(r.json);
    return r;
  });
}

int cmd_graph(const Options& o) {
  const auto cases = resolve_cases(o, false);
  return run_batch("graph", cases, o, [&](const CaseInput& c) {
    const auto p = run_pipeline(load_mask(c.mask, o), o);
    CaseOutput r;
    r.json = to_json(p.graph);
    if (!o.out.empty()) write_text(out_file(o, c.id, ".graph.json"), dump(r.json));
    r.text = dump(r.json);
    return r;
  });
}

int cmd_features(const Options& o) {
  const auto cases = resolve_cases(o, false);
  return run_batch("features", cases, o, [&](const CaseInput& c) {
    const auto p = run_pipeline(load_mask(c.mask, o), o);
    const auto f = all_features(p.graph);
    std::ostringstream csv;
    write_features_csv(csv, f);
    CaseOutput r;
    r.json = to_json(f);
    r.text = csv.str();
    if (!o.out.empty()) write_text(out_file(o, c.id, ".features.csv"), r.text);
    return r;
  });
}

int cmd_labels(const Options& o) {
  const auto cases = resolve_cases(o, true);
  const auto cb = load_codebook(o);
  return run_batch("labels", cases, o, [&](const CaseInput& c) {
    const auto lg = labeled_case(c, o, cb);
    CaseOutput r;
    r.json = to_json(lg.graph, &lg.labels);
    r.json["schema"] = "bronchograph.labeled_graph";
    Json viol = Json::array();
    for (const auto& v : check_hierarchy(lg)) viol.push_back({{"branch", v.branch}, {"message", v.message}});
    r.json["hierarchy_violations"] = std::move(viol);
    if (!o.out.empty()) {
      write_text(out_file(o, c.id, ".labeled_graph.json"), dump(r.json));
      save_volume(render_labels(lg, cb), out_file(o, c.id, ".centerline_labels.nrrd"));
    }
    std::ostringstream t;
    t << "branch,parent,generation,label\n";
    for (const auto& b : lg.graph.branches) t << b.id << ',' << b.parent << ',' << b.generation << ',' << class_name({lg.labels[b.id].lobe, lg.labels[b.id].segment, lg.labels[b.id].code}) << '\n';
    r.text = t.str();
    return r;
  });
}

// Rows are reference classes, columns predicted classes.
std::string confusion_csv(const LabelMetricsReport& r) {
  const Json j = to_json(r);
  const auto& classes = j.at("classes");
  const auto& conf = j.at("confusion");
  std::ostringstream os;
  os << "gt\\pred";
  for (const auto& c : classes) os << ',' << c.get<std::string>();
  os << '\n';
  for (std::size_t a = 0; a < classes.size(); ++a) {
    os << classes[a].get<std::string>();
    for (const auto& n : conf[a]) os << ',' << n.get<std::size_t>();
    os << '\n';
  }
  return os.str();
}

int cmd_metrics(const Options& o) {
  if (o.pred.empty() || o.gt.empty()) throw Error(ErrorCode::InvalidArgument, "metrics needs --pred and --gt");
  if (o.pred_labels.empty() != o.gt_labels.empty())
    throw Error(ErrorCode::InvalidArgument, "--pred-labels and --gt-labels go together");
  const auto pred = load_mask(o.pred, o);
  const auto gt = load_mask(o.gt, o);
  if (!(pred.dims() == gt.dims())) throw Error(ErrorCode::DimsMismatch, "prediction and reference grids differ");

  const auto ref = run_pipeline(gt, o);
  std::vector<std::size_t> pred_skel;
  if (pred.foreground_count() > 0) {
    const auto p = run_pipeline(pred, o, false);
    for (const auto& n : p.skel.nodes) pred_skel.push_back(n.voxel);
  }
  std::vector<std::size_t> gt_skel;
  for (const auto& n : ref.skel.nodes) gt_skel.push_back(n.voxel);

  auto seg = detection_rates(pred, ref.graph, o.coverage_threshold);
  const auto ov = overlap_metrics(pred, gt);
  seg.dsc = ov.dsc;
  seg.sensitivity = ov.sensitivity;
  seg.precision = ov.precision;
  seg.cl_dice = cl_dice(pred, gt, pred_skel, gt_skel);

  Json j = schema_header("metrics");
  j["segmentation"] = to_json(seg);
  std::string confusion;
  if (!o.pred_labels.empty()) {
    const auto cb = load_codebook(o);
    const auto gl = assign_labels(ref.graph, load_labels(o.gt_labels, o), cb);
    const auto pl = assign_labels(ref.graph, load_labels(o.pred_labels, o), cb);
    const auto lr = label_metrics(pl, gl, parse_level(o.level));
    j["labels"] = to_json(lr);
    confusion = confusion_csv(lr);
  }
  if (!o.out.empty()) {
    fs::create_directories(o.out);
    write_text(fs::path(o.out) / "metrics.json", dump(j));
    if (!confusion.empty()) write_text(fs::path(o.out) / "confusion.csv", confusion);
  }
  if (o.json) {
    std::cout << dump(j);
  } else {
    std::cout << "DSC " << format_number(seg.dsc) << "\nclDice " << format_number(seg.cl_dice) << "\nsensitivity "
              << format_number(seg.sensitivity) << "\nprecision " << format_number(seg.precision) << "\nTLD "
              << format_number(seg.tld) << "\nBND " << format_number(seg.bnd) << '\n';
    if (j.contains("labels")) {
      const auto& l = j["labels"];
      std::cout << "TreeCons " << format_number(l["tree_cons"].get<double>()) << "\nTopoDist "
                << format_number(l["topo_dist"].get<double>()) << "\naccuracy "
                << format_number(l["accuracy"].get<double>()) << '\n';
    }
  }
  return 0;
}

int cmd_patterns(const Options& o) {
  const auto cases = resolve_cases(o, true);
  const auto cb = load_codebook(o);
  std::vector<PatternReport> reports(cases.size());
  std::vector<char> ok(cases.size(), 0);
  const int code = run_batch("patterns", cases, o, [&](const CaseInput& c) {
    const auto lg = labeled_case(c, o, cb);
    const auto rep = analyze_patterns(lg);
    const std::size_t i = static_cast<std::size_t>(&c - cases.data());
    reports[i] = rep;
    ok[i] = 1;
    CaseOutput r;
    r.json = to_json(rep);
    if (!o.out.empty()) write_text(out_file(o, c.id, ".patterns.json"), dump(r.json));
    std::ostringstream t;
    for (const auto& l : rep.lobes) t << lobe_names()[l.lobe] << ' ' << l.configuration << ' ' << l.furcation << '\n';
    for (const auto& s : rep.segments)
      if (s.valid)
        t << segment_names()[s.segment] << ' ' << s.stem_number << "-stem " << s.configuration << ' ' << s.furcation << '\n';
    for (const auto& b : rep.blocks) t << b.block << ' ' << b.configuration << ' ' << b.furcation << '\n';
    r.text = t.str();
    return r;
  });
  if (code == 1) return code;
  std::vector<PatternReport> valid;
  for (std::size_t i = 0; i < cases.size(); ++i)
    if (ok[i]) valid.push_back(reports[i]);
  const auto freq = aggregate_pattern_stats(valid);
  if (!o.out.empty()) {
    std::ostringstream csv;
    write_pattern_csv(csv, freq);
    write_text(fs::path(o.out) / "pattern_frequencies.csv", csv.str());
    write_text(fs::path(o.out) / "pattern_frequencies.json", dump(to_json(freq)));
  }
  return code;
}

int cmd_signatures(const Options& o) {
  const auto cases = resolve_cases(o, true);
  const auto cb = load_codebook(o);
  SignatureParams sp;
  sp.pad_size = o.pad_size;
  return run_batch("signatures", cases, o, [&](const CaseInput& c) {
    const auto m = signature_matrix(labeled_case(c, o, cb), sp);
    std::ostringstream csv;
    write_signature_csv(csv, m);
    CaseOutput r;
    r.json = to_json(m);
    r.text = csv.str();
    if (!o.out.empty()) write_text(out_file(o, c.id, ".signatures.csv"), r.text);
    return r;
  });
}

std::string csv_escape(const std::string& s) { return s.find(',') == std::string::npos ? s : "\"" + s + "\""; }

int cmd_cohort(const Options& o) {
  if (o.manifest.empty()) throw Error(ErrorCode::InvalidArgument, "cohort needs --manifest");
  if (o.inputs.empty()) throw Error(ErrorCode::InvalidArgument, "cohort needs signature CSVs or a directory of them");
  std::ifstream mf(o.manifest);
  if (!mf) throw Error(ErrorCode::IoFailure, "cannot read manifest " + o.manifest);
  Json manifest;
  try {
    manifest = Json::parse(mf);
  } catch (const std::exception& e) {
    throw Error(ErrorCode::MalformedHeader, "manifest is not valid JSON: " + one_line(e.what()));
  }
  if (!manifest.is_object()) throw Error(ErrorCode::MalformedHeader, "manifest must map case ids to groups");

  // Signature files by case id, sorted for a stable order.
  std::map<std::string, fs::path> files;
  auto add = [&](const fs::path& p) {
    std::string id = p.stem().string();
    const std::string suffix = ".signatures";
    if (id.size() > suffix.size() && id.compare(id.size() - suffix.size(), suffix.size(), suffix) == 0)
      id.resize(id.size() - suffix.size());
    files[id] = p;
  };
  for (const auto& in : o.inputs) {
    if (fs::is_directory(in)) {
      for (const auto& e : fs::directory_iterator(in))
        if (e.is_regular_file() && e.path().extension() == ".csv") add(e.path());
    } else {
      add(in);
    }
  }

  std::vector<std::string> ids, groups;
  std::vector<SignatureMatrix> mats;
  std::size_t skipped = 0;
  for (const auto& [id, path] : files) {
    if (!manifest.contains(id)) {
      log(LogLevel::Warn, "case " + id + " is not in the manifest");
      ++skipped;
      continue;
    }
    std::ifstream in(path);
    try {
      if (!in) throw Error(ErrorCode::IoFailure, "cannot read " + path.string());
      mats.push_back(read_signature_csv(in));
    } catch (const std::exception& e) {
      log(LogLevel::Warn, "skipped " + id + ": " + one_line(e.what()));
      ++skipped;
      continue;
    }
    ids.push_back(id);
    groups.push_back(manifest[id].get<std::string>());
  }

  std::vector<SignatureMatrix> controls;
  for (std::size_t i = 0; i < mats.size(); ++i)
    if (groups[i] == "control") controls.push_back(mats[i]);
  const auto ref = build_reference(controls);

  std::ostringstream ref_csv, flags_csv, ranked_csv;
  ref_csv << "component,descriptor,mean,std,n\n";
  for (int r = 0; r < kNumComponents; ++r)
    for (int d = 0; d < kNumDescriptors; ++d)
      ref_csv << component_name(r) << ',' << descriptor_names()[d] << ',' << format_number(ref.mean[r][d]) << ','
              << (ref.defined(r, d) ? format_number(ref.std[r][d]) : "") << ',' << ref.count[r][d] << '\n';

  Json flags = Json::array();
  flags_csv << "case,group,component,outlying,significant\n";
  for (std::size_t i = 0; i < mats.size(); ++i) {
    if (groups[i] == "control") continue;
    const auto f = flag_significant(mats[i], ref);
    Json flagged = Json::array();
    for (int r = 0; r < kNumComponents; ++r) {
      const int k = outlying_descriptors(mats[i], ref, r);
      flags_csv << csv_escape(ids[i]) << ',' << groups[i] << ',' << component_name(r) << ',' << k << ','
                << (f[r] ? 1 : 0) << '\n';
      if (f[r]) flagged.push_back(component_name(r));
    }
    flags.push_back({{"case", ids[i]}, {"group", groups[i]}, {"significant", std::move(flagged)}});
  }

  FeatureTable table;
  for (int r = 0; r < kNumComponents; ++r)
    for (int d = 0; d < kNumDescriptors; ++d)
      table.features.push_back(component_name(r) + "." + std::string(descriptor_names()[d]));
  for (std::size_t i = 0; i < mats.size(); ++i) {
    table.groups.push_back(groups[i]);
    std::vector<double> row;
    for (const auto& comp : mats[i].values)
      for (double v : comp) row.push_back(v == -1.0 ? std::numeric_limits<double>::quiet_NaN() : v);
    table.values.push_back(std::move(row));
  }
  const auto ranked = rank_top_k(table, o.top_k);
  Json ranked_json = Json::array();
  ranked_csv << "feature,t,dof,p\n";
  for (const auto& f : ranked) {
    ranked_csv << f.feature << ',' << format_number(f.t) << ',' << format_number(f.dof) << ',' << format_number(f.p)
               << '\n';
    ranked_json.push_back({{"feature", f.feature}, {"t", f.t}, {"dof", f.dof}, {"p", f.p}});
  }

  Json j = schema_header("cohort");
  j["cases"] = ids.size();
  j["controls"] = controls.size();
  j["reference"] = to_json(ref);
  j["flags"] = std::move(flags);
  j["ranked_features"] = std::move(ranked_json);
  if (!o.out.empty()) {
    fs::create_directories(o.out);
    write_text(fs::path(o.out) / "reference.csv", ref_csv.str());
    write_text(fs::path(o.out) / "flags.csv", flags_csv.str());
    write_text(fs::path(o.out) / "ranked_features.csv", ranked_csv.str());
    write_text(fs::path(o.out) / "cohort.json", dump(j));
  }
  if (o.json) {
    std::cout << dump(j);
  } else {
    std::cout << ids.size() << " cases, " << controls.size() << " controls\n";
    for (const auto& f : j["flags"]) {
      std::cout << f["case"].get<std::string>() << ':';
      for (const auto& c : f["significant"]) std::cout << ' ' << c.get<std::string>();
      std::cout << '\n';
    }
    std::cout << ranked_csv.str();
  }
  return skipped ? 2 : 0;
}

int cmd_synth(const Options& o) {
  if (o.name.empty()) throw Error(ErrorCode::InvalidArgument, "synth needs --name (one of the library names or 'random')");
  if (o.out.empty()) throw Error(ErrorCode::InvalidArgument, "synth needs --out");
  const Vec3 spacing = parse_vec3(o.spacing, "--spacing");
  PhantomSpec spec;
  if (o.name == "random") {
    spec = random_tree_spec(o.seed);
    spec.spacing = spacing;
  } else {
    spec = phantom_spec(o.name, spacing);
  }
  const auto ph = render_phantom(spec);
  fs::create_directories(o.out);
  const fs::path dir(o.out);
  save_volume(ph.mask, dir / "mask.nrrd");
  save_volume(ph.labels, dir / "labels.nrrd");
  Json truth = to_json(ph.truth.graph, &ph.truth.labels);
  truth["schema"] = "bronchograph.truth";
  truth["phantom"] = spec.name;
  Json names = Json::array();
  for (const auto& b : spec.branches) names.push_back(b.name);
  truth["branch_names"] = std::move(names);
  write_text(dir / "truth.json", dump(truth));

  Json j = schema_header("synth");
  j["phantom"] = spec.name;
  j["branches"] = spec.branches.size();
  j["dims"] = Json::array({ph.mask.dims().nx, ph.mask.dims().ny, ph.mask.dims().nz});
  j["files"] = {"mask.nrrd", "labels.nrrd", "truth.json"};
  if (o.json)
    std::cout << dump(j);
  else
    std::cout << spec.name << ": " << spec.branches.size() << " branches written to " << o.out << '\n';
  return 0;
}

// ---- flag wiring

void add_pipeline_flags(CLI::App* sub, Options& o) {
  sub->add_option("--spacing-override", o.spacing_override, "Replace the voxel spacing of every input (sx,sy,sz mm)");
  sub->add_option("--gamma", o.gamma, "Medialness sharpness of the skeleton step cost")->capture_default_str();
  sub->add_option("--coverage-factor", o.coverage_factor, "Skeleton coverage radius as a multiple of the local EDT")
      ->capture_default_str();
  sub->add_option("--root", o.root, "Root voxel hint (i,j,k)");
}

void add_batch_flags(CLI::App* sub, Options& o) {
  sub->add_option("--out", o.out, "Output directory");
  sub->add_option("--workers", o.workers, "Cases processed in parallel")->capture_default_str()->check(CLI::PositiveNumber);
}

}  // namespace

int main(int argc, char** argv) {
  g_log_level = log_level_from_env();
  Options o;
  CLI::App app{"Airway tree analysis: skeletons, branch graphs, features, labels, metrics, patterns and signatures"};
  app.name("bronchograph");
  app.require_subcommand(1);
  app.add_flag("--json", o.json, "Machine-readable JSON on stdout");
  app.add_option("--codebook", o.codebook, "Label codebook JSON (default: canonical)");

  std::map<std::string, std::function<int(const Options&)>> handlers;
  auto sub = [&](const std::string& name, const std::string& help, std::function<int(const Options&)> fn) {
    auto* s = app.add_subcommand(name, help);
    s->add_flag("--json", o.json, "Machine-readable JSON on stdout");
    s->add_option("--codebook", o.codebook, "Label codebook JSON (default: canonical)");
    handlers[name] = std::move(fn);
    return s;
  };

  auto* edt = sub("edt", "Exact Euclidean distance transform of each mask", cmd_edt);
  edt->add_option("inputs", o.inputs, "Mask volumes or case directories")->required();
  edt->add_option("--spacing-override", o.spacing_override, "Replace the voxel spacing of every input (sx,sy,sz mm)");
  add_batch_flags(edt, o);

  for (auto [name, help, fn] : std::vector<std::tuple<std::string, std::string, std::function<int(const Options&)>>>{
           {"skeletonize", "Minimum path-cost skeleton of each mask", cmd_skeletonize},
           {"graph", "Branch graph of each mask", cmd_graph},
           {"features", "Per-branch feature table of each mask", cmd_features}}) {
    auto* s = sub(name, help, fn);
    s->add_option("inputs", o.inputs, "Mask volumes or case directories")->required();
    add_pipeline_flags(s, o);
    add_batch_flags(s, o);
  }

  for (auto [name, help, fn] : std::vector<std::tuple<std::string, std::string, std::function<int(const Options&)>>>{
           {"labels", "Branch labels by majority vote over a label volume", cmd_labels},
           {"patterns", "Branching-pattern classification and cohort frequencies", cmd_patterns},
           {"signatures", "Six morphological signatures over the 23 components", cmd_signatures}}) {
    auto* s = sub(name, help, fn);
    s->add_option("inputs", o.inputs, "Case directories (mask.* and labels.*) or one mask with --labels")->required();
    s->add_option("--labels", o.labels, "Label volume for a single mask input");
    add_pipeline_flags(s, o);
    add_batch_flags(s, o);
    if (name == "signatures") s->add_option("--pad-size", o.pad_size, "Box-counting pad size")->capture_default_str();
  }

  auto* metrics = sub("metrics", "Segmentation and labeling metrics of a prediction against a reference", cmd_metrics);
  metrics->add_option("--pred", o.pred, "Predicted mask")->required();
  metrics->add_option("--gt", o.gt, "Reference mask")->required();
  metrics->add_option("--pred-labels", o.pred_labels, "Predicted label volume");
  metrics->add_option("--gt-labels", o.gt_labels, "Reference label volume");
  metrics->add_option("--level", o.level, "Label level: lobar, segmental or subsegmental")->capture_default_str();
  metrics->add_option("--coverage-threshold", o.coverage_threshold, "Centerline fraction for a detected branch")
      ->capture_default_str();
  metrics->add_option("--out", o.out, "Output directory");
  add_pipeline_flags(metrics, o);

  auto* cohort = sub("cohort", "Reference distributions, significance flags and ranked features", cmd_cohort);
  cohort->add_option("inputs", o.inputs, "Signature CSVs or directories of them")->required();
  cohort->add_option("--manifest", o.manifest, "JSON object mapping case id to group")->required();
  cohort->add_option("--top-k", o.top_k, "Number of ranked features")->capture_default_str();
  cohort->add_option("--out", o.out, "Output directory");

  auto* synth = sub("synth", "Render a library phantom", cmd_synth);
  synth->add_option("--name", o.name, "Library phantom name, or 'random'")->required();
  synth->add_option("--out", o.out, "Output directory")->required();
  synth->add_option("--spacing", o.spacing, "Voxel spacing sx,sy,sz in mm")->capture_default_str();
  synth->add_option("--seed", o.seed, "Seed for --name random")->capture_default_str();

  if (argc < 2) {
    std::cerr << app.help();
    return 1;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "bronchograph: error: " << one_line(e.what()) << '\n';
    return 1;
  }

  try {
    for (const auto& [name, fn] : handlers)
      if (app.got_subcommand(name)) return fn(o);
  } catch (const std::exception& e) {
    std::cerr << "bronchograph: error: " << one_line(e.what()) << '\n';
    return 1;
  }
  return 1;
}
