#include "bronchograph/airway_graph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

#include "bronchograph/edt.hpp"

namespace bronchograph {

std::vector<std::pair<int, int>> AirwayGraph::edges() const {
  std::vector<std::pair<int, int>> out;
  for (const auto& b : branches)
    if (b.parent >= 0) out.emplace_back(b.parent, b.id);
  return out;
}

std::vector<int> AirwayGraph::leaves() const {
  std::vector<int> out;
  for (const auto& b : branches)
    if (b.children.empty()) out.push_back(b.id);
  return out;
}

Vec3 AirwayGraph::position(std::size_t voxel) const {
  const auto p = dims.coords(voxel);
  return {p[0] * spacing[0], p[1] * spacing[1], p[2] * spacing[2]};
}

void AirwayGraph::compute_lca_and_descendants() {
  const std::size_t n = size();
  for (auto& b : branches) b.children.clear();
  for (const auto& b : branches)
    if (b.parent >= 0) branches[b.parent].children.push_back(b.id);

  // Generations follow parent links; parents are not required to precede children.
  std::vector<int> order;
  order.reserve(n);
  order.push_back(root);
  branches[root].generation = 1;
  for (std::size_t k = 0; k < order.size(); ++k) {
    for (int c : branches[order[k]].children) {
      branches[c].generation = branches[order[k]].generation + 1;
      order.push_back(c);
    }
  }
  if (order.size() != n) throw Error(ErrorCode::InvalidArgument, "branch graph is not a single rooted tree");

  descendant_.assign(n * n, 0);
  for (std::size_t j = 0; j < n; ++j) {
    for (int a = static_cast<int>(j); a >= 0; a = branches[a].parent) descendant_[a * n + j] = 1;
  }
  lca_.assign(n * n, root);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      int a = static_cast<int>(i);
      while (!descendant_[a * n + j]) a = branches[a].parent;
      lca_[i * n + j] = lca_[j * n + i] = a;
    }
  }
}

void finalize_branch_geometry(AirwayGraph& g) {
  for (auto& b : g.branches) {
    b.length = 0.0;
    for (std::size_t k = 1; k < b.centerline.size(); ++k) {
      b.length += norm(g.position(b.centerline[k]) - g.position(b.centerline[k - 1]));
    }
    if (!b.centerline.empty()) {
      b.start = g.position(b.centerline.front());
      b.end = g.position(b.centerline.back());
    }
    b.mean_radius = b.radii.empty() ? 0.0 : std::accumulate(b.radii.begin(), b.radii.end(), 0.0) / b.radii.size();
  }
}

namespace {

double polyline_length(const AirwayGraph& g, const std::vector<std::size_t>& c) {
  double len = 0.0;
  for (std::size_t k = 1; k < c.size(); ++k) len += norm(g.position(c[k]) - g.position(c[k - 1]));
  return len;
}

// A voxel trifurcation often resolves into two bifurcations a voxel or two
// apart. An internal branch that ends inside the ball of its proximal
// junction is folded into its parent so its children become siblings.
void merge_junction_clusters(AirwayGraph& g, std::vector<int>& owner_of_node) {
  const std::size_t n = g.branches.size();
  std::vector<int> target(n);
  std::iota(target.begin(), target.end(), 0);
  std::vector<bool> has_children(n, false);
  for (const auto& b : g.branches)
    if (b.parent >= 0) has_children[b.parent] = true;
  // Ids are assigned parents first, so parents are final before their children are visited.
  for (std::size_t i = 0; i < n; ++i) {
    auto& b = g.branches[i];
    if (b.parent < 0) continue;
    b.parent = target[b.parent];
    if (!has_children[i] || b.centerline.size() < 2) continue;
    if (polyline_length(g, b.centerline) >= b.radii.front()) continue;
    auto& p = g.branches[b.parent];
    p.centerline.insert(p.centerline.end(), b.centerline.begin() + 1, b.centerline.end());
    p.radii.insert(p.radii.end(), b.radii.begin() + 1, b.radii.end());
    target[i] = p.id;
  }
  std::vector<int> new_id(n, -1);
  std::vector<BranchNode> kept;
  for (std::size_t i = 0; i < n; ++i) {
    if (target[i] != static_cast<int>(i)) continue;
    new_id[i] = static_cast<int>(kept.size());
    kept.push_back(std::move(g.branches[i]));
  }
  for (auto& b : kept) {
    b.id = new_id[b.id];
    if (b.parent >= 0) b.parent = new_id[b.parent];
  }
  for (auto& o : owner_of_node) o = new_id[target[o]];
  g.branches = std::move(kept);
}

}  // namespace

AirwayGraph partition_branches(const SkeletonTree& skel, const Volume& mask, const DistanceField& edt) {
  require_same_dims(skel.dims, mask.dims(), "partition_branches");
  require_same_dims(skel.dims, edt.dims, "partition_branches");
  AirwayGraph g;
  g.dims = mask.dims();
  g.spacing = mask.spacing();
  if (skel.nodes.empty()) throw Error(ErrorCode::InvalidArgument, "empty skeleton");

  const auto kids = skel.children();
  // (skeleton node where the branch starts, parent branch, junction voxel node or -1)
  struct Pending {
    int node;
    int parent_branch;
    int junction;
  };
  std::vector<Pending> stack{{skel.root, -1, -1}};
  std::vector<int> owner_of_node(skel.nodes.size(), -1);
  while (!stack.empty()) {
    const auto p = stack.back();
    stack.pop_back();
    BranchNode b;
    b.id = static_cast<int>(g.branches.size());
    b.parent = p.parent_branch;
    if (p.junction >= 0) {
      b.centerline.push_back(skel.nodes[p.junction].voxel);
      b.radii.push_back(skel.nodes[p.junction].radius);
    }
    int cur = p.node;
    for (;;) {
      b.centerline.push_back(skel.nodes[cur].voxel);
      b.radii.push_back(skel.nodes[cur].radius);
      owner_of_node[cur] = b.id;
      if (kids[cur].size() != 1) break;
      cur = kids[cur].front();
    }
    g.branches.push_back(std::move(b));
    // Reverse push keeps children in skeleton order when popped.
    for (auto it = kids[cur].rbegin(); it != kids[cur].rend(); ++it) {
      stack.push_back({*it, g.branches.back().id, cur});
    }
  }
  merge_junction_clusters(g, owner_of_node);
  g.root = 0;
  finalize_branch_geometry(g);
  g.compute_lca_and_descendants();

  // Ω: nearest centerline voxel, restricted to the skeletonized component.
  const auto comp = connected_component(mask, skel.nodes[skel.root].voxel);
  std::vector<std::uint8_t> sites(g.dims.count(), 0);
  std::vector<int> site_owner(g.dims.count(), -1);
  for (std::size_t i = 0; i < skel.nodes.size(); ++i) {
    sites[skel.nodes[i].voxel] = 1;
    site_owner[skel.nodes[i].voxel] = owner_of_node[i];
  }
  const auto ft = feature_transform(g.dims, g.spacing, sites);
  Index3 lo{g.dims.nx, g.dims.ny, g.dims.nz}, hi{-1, -1, -1};
  for (std::size_t i = 0; i < comp.size(); ++i) {
    if (!comp[i]) continue;
    g.branches[site_owner[ft.nearest[i]]].voxels.push_back(i);
    const auto p = g.dims.coords(i);
    for (int a = 0; a < 3; ++a) {
      lo[a] = std::min(lo[a], p[a]);
      hi[a] = std::max(hi[a], p[a]);
    }
  }
  for (int a = 0; a < 3; ++a) g.foreground_extent[a] = (hi[a] - lo[a] + 1) * g.spacing[a];
  return g;
}

namespace {

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  bool unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent[std::max(a, b)] = std::min(a, b);
    return true;
  }
};

}  // namespace

Betti betti_numbers(std::size_t node_count, const std::vector<std::pair<int, int>>& edges) {
  UnionFind uf(node_count);
  int components = static_cast<int>(node_count);
  for (const auto& [a, b] : edges)
    if (uf.unite(a, b)) --components;
  return {components, static_cast<int>(edges.size()) - static_cast<int>(node_count) + components};
}

Betti betti_numbers(const SkeletonTree& t) { return betti_numbers(t.nodes.size(), t.edges()); }

MeanStd mean_branch_count(const std::vector<std::size_t>& counts) {
  if (counts.empty()) throw Error(ErrorCode::InvalidArgument, "mean_branch_count needs at least one graph");
  double mean = 0.0;
  for (auto c : counts) mean += static_cast<double>(c);
  mean /= counts.size();
  double var = 0.0;
  for (auto c : counts) var += (c - mean) * (c - mean);
  return {mean, std::sqrt(var / counts.size())};
}

MeanStd mean_branch_count(const std::vector<AirwayGraph>& cohort) {
  std::vector<std::size_t> counts;
  for (const auto& g : cohort) counts.push_back(g.size());
  return mean_branch_count(counts);
}

std::size_t voxel_branch_points(const SkeletonTree& t, int min_neighbors) {
  std::unordered_set<std::size_t> on;
  for (const auto& n : t.nodes) on.insert(n.voxel);
  std::size_t count = 0;
  for (const auto& n : t.nodes) {
    int k = 0;
    for (const auto& o : neighbor_offsets26()) {
      const int x = n.ijk[0] + o[0], y = n.ijk[1] + o[1], z = n.ijk[2] + o[2];
      if (t.dims.contains(x, y, z) && on.count(t.dims.index(x, y, z))) ++k;
    }
    if (k >= min_neighbors) ++count;
  }
  return count;
}

}  // namespace bronchograph
