#include "bronchograph/mpc_skel.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <limits>
#include <queue>

#include "bronchograph/edt.hpp"

namespace bronchograph {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

using QueueItem = std::pair<double, std::size_t>;
using MinQueue = std::priority_queue<QueueItem, std::vector<QueueItem>, std::greater<>>;

// Working grid cropped to the component's bounding box.
struct LocalGrid {
  Dims dims;
  Index3 origin{};
  std::vector<std::uint8_t> inside;
  std::vector<double> edt;
  std::vector<std::size_t> global;  // local -> global linear index

  std::size_t to_local(const Dims& g, std::size_t gi) const {
    auto p = g.coords(gi);
    return dims.index(p[0] - origin[0], p[1] - origin[1], p[2] - origin[2]);
  }
};

LocalGrid crop(const Volume& mask, const DistanceField& edt, const std::vector<std::uint8_t>& comp) {
  const auto& d = mask.dims();
  Index3 lo{d.nx, d.ny, d.nz}, hi{-1, -1, -1};
  for (std::size_t i = 0; i < comp.size(); ++i) {
    if (!comp[i]) continue;
    auto p = d.coords(i);
    for (int a = 0; a < 3; ++a) {
      lo[a] = std::min(lo[a], p[a]);
      hi[a] = std::max(hi[a], p[a]);
    }
  }
  LocalGrid g;
  g.origin = lo;
  g.dims = {hi[0] - lo[0] + 1, hi[1] - lo[1] + 1, hi[2] - lo[2] + 1};
  g.inside.assign(g.dims.count(), 0);
  g.edt.assign(g.dims.count(), 0.0);
  g.global.resize(g.dims.count());
  for (int z = 0; z < g.dims.nz; ++z)
    for (int y = 0; y < g.dims.ny; ++y)
      for (int x = 0; x < g.dims.nx; ++x) {
        const auto li = g.dims.index(x, y, z);
        const auto gi = d.index(x + lo[0], y + lo[1], z + lo[2]);
        g.global[li] = gi;
        g.inside[li] = comp[gi];
        g.edt[li] = comp[gi] ? edt[gi] : 0.0;
      }
  return g;
}

}  // namespace

std::vector<std::vector<int>> SkeletonTree::children() const {
  std::vector<std::vector<int>> out(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].parent >= 0) out[nodes[i].parent].push_back(static_cast<int>(i));
  }
  return out;
}

std::vector<std::pair<int, int>> SkeletonTree::edges() const {
  std::vector<std::pair<int, int>> out;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].parent >= 0) out.emplace_back(nodes[i].parent, static_cast<int>(i));
  }
  return out;
}

std::vector<std::uint8_t> connected_component(const Volume& mask, std::size_t seed) {
  const auto& d = mask.dims();
  std::vector<std::uint8_t> comp(d.count(), 0);
  if (!mask[seed]) return comp;
  std::deque<std::size_t> queue{seed};
  comp[seed] = 1;
  while (!queue.empty()) {
    const auto u = queue.front();
    queue.pop_front();
    const auto p = d.coords(u);
    for (const auto& o : neighbor_offsets26()) {
      const int x = p[0] + o[0], y = p[1] + o[1], z = p[2] + o[2];
      if (!d.contains(x, y, z)) continue;
      const auto v = d.index(x, y, z);
      if (mask[v] && !comp[v]) {
        comp[v] = 1;
        queue.push_back(v);
      }
    }
  }
  return comp;
}

std::size_t count_components(const Volume& mask) {
  const auto& d = mask.dims();
  std::vector<std::uint8_t> seen(d.count(), 0);
  std::size_t n = 0;
  std::vector<std::size_t> stack;
  for (std::size_t s = 0; s < d.count(); ++s) {
    if (!mask[s] || seen[s]) continue;
    ++n;
    seen[s] = 1;
    stack.push_back(s);
    while (!stack.empty()) {
      const auto u = stack.back();
      stack.pop_back();
      const auto p = d.coords(u);
      for (const auto& o : neighbor_offsets26()) {
        const int x = p[0] + o[0], y = p[1] + o[1], z = p[2] + o[2];
        if (!d.contains(x, y, z)) continue;
        const auto v = d.index(x, y, z);
        if (mask[v] && !seen[v]) {
          seen[v] = 1;
          stack.push_back(v);
        }
      }
    }
  }
  return n;
}

std::size_t select_root(const Volume& mask, const DistanceField& edt, std::optional<Index3> hint) {
  const auto& d = mask.dims();
  require_same_dims(d, edt.dims, "select_root");
  if (hint) {
    const auto& h = *hint;
    if (!d.contains(h[0], h[1], h[2])) throw Error(ErrorCode::OutOfBounds, "root hint outside the grid");
    const auto i = d.index(h);
    if (!mask[i]) throw Error(ErrorCode::RootNotForeground, "root hint is background");
    return i;
  }
  std::vector<int> slices;
  for (int z = 0; z < d.nz; ++z) {
    bool any = false;
    for (int y = 0; y < d.ny && !any; ++y)
      for (int x = 0; x < d.nx && !any; ++x) any = mask.at(x, y, z) != 0;
    if (any) slices.push_back(z);
  }
  if (slices.empty()) throw Error(ErrorCode::EmptyMask, "mask has no foreground");
  const auto take = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(0.1 * slices.size())));
  const int zmin = slices[slices.size() - take];
  std::size_t best = d.count();
  double best_r = -1.0;
  // Ties go to the highest slice so the root sits at the proximal end of a
  // constant-radius trachea; within a slice, to the smallest index.
  for (int z = d.nz - 1; z >= zmin; --z)
    for (int y = 0; y < d.ny; ++y)
      for (int x = 0; x < d.nx; ++x) {
        const auto i = d.index(x, y, z);
        if (mask[i] && edt[i] > best_r) {
          best_r = edt[i];
          best = i;
        }
      }
  return best;
}

SkeletonTree extract_skeleton(const Volume& mask, const DistanceField& edt, std::size_t root, const SkelParams& params) {
  const auto& d = mask.dims();
  require_same_dims(d, edt.dims, "extract_skeleton");
  if (mask.foreground_count() == 0) throw Error(ErrorCode::EmptyMask, "mask has no foreground");
  if (root >= d.count() || !mask[root]) throw Error(ErrorCode::RootNotForeground, "root voxel is background");
  if (!(params.gamma >= 0.0) || !(params.coverage_factor > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "gamma must be >= 0 and coverage_factor > 0");
  }

  const auto& sp = mask.spacing();
  const auto comp = connected_component(mask, root);

  SkeletonTree tree;
  tree.dims = d;
  tree.spacing = sp;
  tree.other_components = count_components(mask) - 1;

  const LocalGrid g = crop(mask, edt, comp);
  const auto& ld = g.dims;
  const std::size_t n = ld.count();
  const std::size_t lroot = g.to_local(d, root);

  double edt_max = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    if (g.inside[i]) edt_max = std::max(edt_max, g.edt[i]);
  std::vector<double> penalty(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    if (g.inside[i]) penalty[i] = std::exp(-params.gamma * g.edt[i] / edt_max);

  const auto& offsets = neighbor_offsets26();
  std::array<double, 26> step{};
  for (int k = 0; k < 26; ++k) {
    const auto& o = offsets[k];
    step[k] = std::sqrt(o[0] * o[0] * sp[0] * sp[0] + o[1] * o[1] * sp[1] * sp[1] + o[2] * o[2] * sp[2] * sp[2]);
  }
  const double voxel = std::max({sp[0], sp[1], sp[2]});

  auto for_neighbors = [&](std::size_t u, auto&& fn) {
    const auto p = ld.coords(u);
    for (int k = 0; k < 26; ++k) {
      const int x = p[0] + offsets[k][0], y = p[1] + offsets[k][1], z = p[2] + offsets[k][2];
      if (!ld.contains(x, y, z)) continue;
      const auto v = ld.index(x, y, z);
      if (g.inside[v]) fn(v, step[k]);
    }
  };

  auto dijkstra = [&](std::vector<double>& dist, std::vector<std::int64_t>* parent, MinQueue& pq) {
    while (!pq.empty()) {
      const auto [c, u] = pq.top();
      pq.pop();
      if (c > dist[u]) continue;
      for_neighbors(u, [&](std::size_t v, double len) {
        const double nc = c + len * penalty[v];
        if (nc < dist[v]) {
          dist[v] = nc;
          if (parent) (*parent)[v] = static_cast<std::int64_t>(u);
          pq.emplace(nc, v);
        }
      });
    }
  };

  // Shortest-path tree from the root; every traced path follows it.
  std::vector<double> from_root(n, kInf);
  std::vector<std::int64_t> spt_parent(n, -1);
  {
    MinQueue pq;
    from_root[lroot] = 0.0;
    pq.emplace(0.0, lroot);
    dijkstra(from_root, &spt_parent, pq);
  }

  // Cost to the current skeleton, maintained incrementally (only decreases).
  std::vector<double> to_skel(n, kInf);
  std::vector<int> node_of(n, -1);
  std::vector<std::uint8_t> sites(n, 0);
  std::vector<std::uint8_t> exempt(n, 0);

  auto add_node = [&](std::size_t local, int parent) {
    SkeletonNode node;
    node.voxel = g.global[local];
    node.ijk = d.coords(node.voxel);
    node.mm = mask.position(node.ijk);
    node.radius = g.edt[local];
    node.parent = parent;
    tree.nodes.push_back(node);
    const int id = static_cast<int>(tree.nodes.size()) - 1;
    node_of[local] = id;
    sites[local] = 1;
    return id;
  };

  add_node(lroot, -1);
  {
    MinQueue pq;
    to_skel[lroot] = 0.0;
    pq.emplace(0.0, lroot);
    dijkstra(to_skel, nullptr, pq);
  }

  const Vec3 lsp = sp;
  for (;;) {
    const auto ft = feature_transform(ld, lsp, sites);
    std::size_t cand = n;
    double cand_cost = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!g.inside[i] || exempt[i]) continue;
      const auto q = static_cast<std::size_t>(ft.nearest[i]);
      const double reach = std::max(params.coverage_factor * g.edt[q], voxel);
      if (std::sqrt(ft.sq_distance[i]) <= reach + 1e-9) continue;
      if (to_skel[i] > cand_cost) {
        cand_cost = to_skel[i];
        cand = i;
      }
    }
    if (cand == n) break;

    std::vector<std::size_t> path{cand};
    while (node_of[path.back()] < 0) path.push_back(static_cast<std::size_t>(spt_parent[path.back()]));
    const std::size_t attach = path.size() - 1;

    // Move the leaf up the EDT along its own path (end caps collapse onto the ridge).
    std::size_t lead = 0;
    while (lead + 1 < attach && g.edt[path[lead + 1]] > g.edt[path[lead]]) ++lead;

    double added = 0.0;
    for (std::size_t k = lead; k < attach; ++k) {
      const auto a = ld.coords(path[k]), b = ld.coords(path[k + 1]);
      const Vec3 dv{(a[0] - b[0]) * sp[0], (a[1] - b[1]) * sp[1], (a[2] - b[2]) * sp[2]};
      added += norm(dv);
    }
    const double min_len = std::max(2.0 * g.edt[path[lead]], 3.0 * voxel);
    if (lead >= attach || added < min_len) {
      // Spur: retire the uncovered neighborhood of the candidate.
      const auto c = ld.coords(cand);
      Index3 r{};
      for (int a = 0; a < 3; ++a) r[a] = static_cast<int>(std::ceil(min_len / sp[a]));
      for (int z = std::max(0, c[2] - r[2]); z <= std::min(ld.nz - 1, c[2] + r[2]); ++z)
        for (int y = std::max(0, c[1] - r[1]); y <= std::min(ld.ny - 1, c[1] + r[1]); ++y)
          for (int x = std::max(0, c[0] - r[0]); x <= std::min(ld.nx - 1, c[0] + r[0]); ++x) {
            const Vec3 dv{(x - c[0]) * sp[0], (y - c[1]) * sp[1], (z - c[2]) * sp[2]};
            if (norm(dv) <= min_len) exempt[ld.index(x, y, z)] = 1;
          }
      exempt[cand] = 1;
      continue;
    }

    int parent = node_of[path[attach]];
    MinQueue pq;
    for (std::size_t k = attach; k-- > lead;) {
      parent = add_node(path[k], parent);
      to_skel[path[k]] = 0.0;
      pq.emplace(0.0, path[k]);
    }
    dijkstra(to_skel, nullptr, pq);
  }

  const auto kids = tree.children();
  for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
    if (kids[i].empty() && (static_cast<int>(i) != tree.root || tree.nodes.size() == 1)) {
      tree.leaves.push_back(static_cast<int>(i));
    }
  }
  return tree;
}

}  // namespace bronchograph
