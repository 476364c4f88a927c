#pragma once

#include <istream>
#include <string>
#include <vector>

#include <json.hpp>

#include "bronchograph/airway_graph.hpp"
#include "bronchograph/branching_patterns.hpp"
#include "bronchograph/cohort_stats.hpp"
#include "bronchograph/eval_metrics.hpp"
#include "bronchograph/label_taxonomy.hpp"
#include "bronchograph/morpho_signatures.hpp"
#include "bronchograph/mpc_skel.hpp"
#include "bronchograph/node_features.hpp"

namespace bronchograph {

using Json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

/// {"schema": "bronchograph.<kind>", "version": 1}
Json schema_header(const std::string& kind);

Json to_json(const SkeletonTree& t);
/// Labels are written per branch when `labels` is given (size must match).
Json to_json(const AirwayGraph& g, const std::vector<BranchLabel>* labels = nullptr);
Json to_json(const std::vector<FeatureVector>& f);
Json to_json(const Overlap& o);
Json to_json(const SegMetricsReport& r);
Json to_json(const LabelMetricsReport& r);
Json to_json(const PatternReport& r);
Json to_json(const std::vector<PatternFrequency>& rows);
Json to_json(const SignatureMatrix& m);
Json to_json(const ReferenceTable& r);
Json to_json(const BranchLabel& l);

std::string level_name(LabelLevel level);
LabelLevel parse_level(const std::string& s);

/// Reads the CSV written by write_signature_csv (component column first, 23 rows).
SignatureMatrix read_signature_csv(std::istream& is);
void write_pattern_csv(std::ostream& os, const std::vector<PatternFrequency>& rows);

/// Fixed-precision number formatting used by every CSV writer.
std::string format_number(double v);

}  // namespace bronchograph
