#include <doctest.h>

#include "bronchograph/airway_graph.hpp"
#include "bronchograph/edt.hpp"
#include "bronchograph/mpc_skel.hpp"
#include "bronchograph/synth_phantom.hpp"

using namespace bronchograph;

namespace {

struct Run {
  Phantom ph;
  DistanceField edt;
  SkeletonTree skel;
};

Run skeletonize(const PhantomSpec& spec) {
  Run r;
  r.ph = render_phantom(spec);
  r.edt = distance_transform(r.ph.mask);
  const auto root = select_root(r.ph.mask, r.edt);
  r.skel = extract_skeleton(r.ph.mask, r.edt, root);
  return r;
}

}  // namespace

TEST_CASE("library phantoms skeletonize to trees with the right leaf count") {
  for (const auto& name : phantom_names()) {
    CAPTURE(name);
    const auto r = skeletonize(phantom_spec(name));
    CHECK(betti_numbers(r.skel) == Betti{1, 0});
    const auto g = partition_branches(r.skel, r.ph.mask, r.edt);
    CHECK(g.leaves().size() == r.ph.truth.graph.leaves().size());
    CHECK(g.size() == r.ph.truth.graph.size());
  }
}

TEST_CASE("parents precede children and edges are 26-adjacent") {
  const auto r = skeletonize(phantom_spec("trifurcation"));
  for (std::size_t i = 0; i < r.skel.nodes.size(); ++i) {
    const auto& n = r.skel.nodes[i];
    if (static_cast<int>(i) == r.skel.root) {
      CHECK(n.parent == -1);
      continue;
    }
    REQUIRE(n.parent >= 0);
    CHECK(n.parent < static_cast<int>(i));
    const auto& p = r.skel.nodes[n.parent];
    for (int a = 0; a < 3; ++a) CHECK(std::abs(n.ijk[a] - p.ijk[a]) <= 1);
    CHECK(r.ph.mask[n.voxel] == 1);
  }
}

TEST_CASE("random trees keep a single tree skeleton") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    CAPTURE(seed);
    const auto r = skeletonize(random_tree_spec(seed));
    CHECK(betti_numbers(r.skel) == Betti{1, 0});
  }
}

TEST_CASE("root must be foreground") {
  const auto ph = render_phantom(phantom_spec("straight_tube"));
  const auto edt = distance_transform(ph.mask);
  CHECK_THROWS_AS(select_root(ph.mask, edt, Index3{0, 0, 0}), Error);
}
