#pragma once
// Labeled-graph fixtures for the branching-pattern table rows.

#include <random>
#include <string>
#include <utility>
#include <vector>

namespace fixtures {

using Nodes = std::vector<std::pair<int, std::string>>;

struct LobeRow {
  int lobe;
  Nodes nodes;
  std::string expected;
  std::string furcation;
};

struct SubRow {
  std::string segment;  // full class name, e.g. "LB1+2"
  int stems;
  Nodes nodes;
  std::string expected;
  std::string furcation;
};

std::vector<LobeRow> lobe_rows();
std::vector<SubRow> subsegment_rows();

/// Three-subsegment segment under its lobe. `co` is "ab", "bc", "ac" or "tri".
Nodes three_subsegments(const std::string& segment, bool one_stem, const std::string& co);
Nodes two_subsegments(const std::string& segment, bool one_stem);
Nodes lb12(bool one_stem, const std::string& co);
Nodes lingula_b4a();

/// Random labeled tree over one inter-subsegment block with random co-trunks.
Nodes random_block_tree(std::mt19937_64& rng);
/// Same tree with ids renumbered in a random parent-first order.
Nodes shuffled(const Nodes& nodes, std::mt19937_64& rng);

/// Configurations equal up to the order of their comma-separated clusters.
bool same_partition(const std::string& a, const std::string& b);

}  // namespace fixtures
