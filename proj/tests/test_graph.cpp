#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>

#include "artigen/graph.hpp"
#include "artigen/rng.hpp"

using namespace artigen;

namespace {

PartNode make_part(Vec3d t, Vec3d b, int F) {
  PartNode n;
  n.exists = true;
  n.translation = t;
  n.bbox = b;
  n.shape_latent.assign(static_cast<std::size_t>(F), 0.25);
  return n;
}

ArticulationGraph random_graph(Rng& rng, int K, int F) {
  ArticulationGraph g;
  const int n = 2 + static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(K - 1)));
  for (int i = 0; i < n; ++i) {
    PartNode p = make_part({rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)},
                           {rng.uniform(0.1, 1), rng.uniform(0.1, 1), rng.uniform(0.1, 1)}, F);
    for (auto& s : p.shape_latent) s = rng.normal();
    g.nodes.push_back(p);
  }
  // random spanning tree over the n parts
  for (int i = 1; i < n; ++i) {
    TreeEdge e;
    const int parent = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(i)));
    e.parent = rng.uniform() < 0.5 ? parent : i;  // exercise both directions
    e.child = e.parent == parent ? i : parent;
    Vec3d l{rng.normal(), rng.normal(), rng.normal()};
    const double nl = norm(l);
    e.joint.axis_dir = l * (1.0 / (nl > 1e-12 ? nl : 1.0));
    Vec3d p0{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
    e.joint.axis_moment = cross(p0, e.joint.axis_dir);
    e.joint.gamma_min = rng.uniform(-1, 0);
    e.joint.gamma_max = rng.uniform(0, 1);
    e.joint.d_min = 0.0;
    e.joint.d_max = rng.uniform(0, 0.5);
    g.tree_edges.push_back(e);
  }
  return g;
}

bool same_topology_and_attributes(const ArticulationGraph& a, const ArticulationGraph& b) {
  auto edge_key = [](const TreeEdge& e) { return std::pair<int, int>(e.parent, e.child); };
  std::set<std::pair<int, int>> ea, eb;
  for (const auto& e : a.tree_edges) ea.insert(edge_key(e));
  for (const auto& e : b.tree_edges) eb.insert(edge_key(e));
  if (ea != eb) return false;
  for (std::size_t i = 0; i < a.nodes.size(); ++i) {
    if (i >= b.nodes.size()) return a.nodes[i].exists == false;
    if (a.nodes[i].exists != b.nodes[i].exists) return false;
    if (!a.nodes[i].exists) continue;
    for (int k = 0; k < 3; ++k) {
      if (a.nodes[i].translation[k] != b.nodes[i].translation[k]) return false;
      if (a.nodes[i].bbox[k] != b.nodes[i].bbox[k]) return false;
    }
    if (a.nodes[i].shape_latent != b.nodes[i].shape_latent) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("encode: empty graph is all-absent with no-edge one-hots") {
  ArticulationGraph g;
  LatentSample x = encode(g, 4, 8);
  const LatentLayout& L = x.layout;
  for (int i = 0; i < 4; ++i) {
    REQUIRE(x.data[L.node_offset(i) + LatentLayout::kNodeExist] == -1.0);
  }
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j) {
      const double* c = x.data.data() + L.edge_offset(i, j);
      REQUIRE(c[0] == 0.0);
      REQUIRE(c[1] == 1.0);
      REQUIRE(c[2] == 0.0);
    }
}

TEST_CASE("encode: forward tree edge carries one-hot for class +1") {
  ArticulationGraph g;
  g.nodes.push_back(make_part({0, 0, 0}, {1, 1, 1}, 8));
  g.nodes.push_back(make_part({0.5, 0, 0}, {1, 1, 1}, 8));
  TreeEdge e;
  e.parent = 0;
  e.child = 1;
  g.tree_edges.push_back(e);
  LatentSample x = encode(g, 4, 8);
  const double* c = x.data.data() + x.layout.edge_offset(0, 1);
  REQUIRE(c[0] == 0.0);
  REQUIRE(c[1] == 0.0);
  REQUIRE(c[2] == 1.0);
}

TEST_CASE("encode: capacity error beyond K parts") {
  ArticulationGraph g;
  for (int i = 0; i < 5; ++i) g.nodes.push_back(make_part({0, 0, 0}, {1, 1, 1}, 8));
  REQUIRE_THROWS_AS(encode(g, 4, 8), std::invalid_argument);
}

TEST_CASE("decode(encode(g)) reproduces topology and attributes") {
  Rng rng(42);
  for (int trial = 0; trial < 50; ++trial) {
    ArticulationGraph g = random_graph(rng, 8, 8);
    ArticulationGraph back = decode(encode(g, 8, 8));
    REQUIRE(same_topology_and_attributes(g, back));
  }
}

TEST_CASE("project: on-manifold edge is unchanged") {
  LatentLayout L{2, 8};
  LatentSample x(L);
  double* blk = x.data.data() + L.edge_offset(0, 1);
  blk[LatentLayout::kEdgeL + 2] = 1.0;   // l = (0,0,1)
  blk[LatentLayout::kEdgeM + 0] = 1.0;   // m = (1,0,0)
  for (int i = 0; i < 2; ++i)            // keep bboxes above the clamp
    for (int k = 0; k < 3; ++k) x.data[L.node_offset(i) + LatentLayout::kNodeBox + k] = 0.5;
  LatentSample y = project(x);
  REQUIRE(y.data == x.data);
}

TEST_CASE("project: normalizes l and removes parallel moment component") {
  LatentLayout L{2, 8};
  LatentSample x(L);
  double* blk = x.data.data() + L.edge_offset(0, 1);
  blk[LatentLayout::kEdgeL + 2] = 2.0;  // l = (0,0,2)
  blk[LatentLayout::kEdgeM + 2] = 1.0;  // m = (0,0,1), fully parallel
  LatentSample y = project(x);
  const double* out = y.data.data() + L.edge_offset(0, 1);
  REQUIRE(out[LatentLayout::kEdgeL + 0] == 0.0);
  REQUIRE(out[LatentLayout::kEdgeL + 1] == 0.0);
  REQUIRE(out[LatentLayout::kEdgeL + 2] == Catch::Approx(1.0));
  for (int k = 0; k < 3; ++k) REQUIRE(std::fabs(out[LatentLayout::kEdgeM + k]) < 1e-15);
}

TEST_CASE("project: degenerate direction falls back to (0,0,1)") {
  LatentLayout L{2, 8};
  LatentSample x(L);
  LatentSample y = project(x);  // all zeros, so l = 0
  const double* out = y.data.data() + L.edge_offset(0, 1);
  REQUIRE(out[LatentLayout::kEdgeL + 0] == 0.0);
  REQUIRE(out[LatentLayout::kEdgeL + 1] == 0.0);
  REQUIRE(out[LatentLayout::kEdgeL + 2] == 1.0);
}

TEST_CASE("project: idempotent, preserves node blocks, orders limits") {
  Rng rng(7);
  LatentLayout L{6, 8};
  for (int trial = 0; trial < 50; ++trial) {
    LatentSample x(L);
    for (auto& v : x.data) v = rng.normal();
    LatentSample y = project(x);
    LatentSample y2 = project(y);
    for (std::size_t k = 0; k < y.data.size(); ++k)
      REQUIRE(std::fabs(y2.data[k] - y.data[k]) <= 1e-12 * std::max(1.0, std::fabs(y.data[k])));

    for (int i = 0; i < L.K; ++i) {
      const int off = L.node_offset(i);
      REQUIRE(y.data[off + LatentLayout::kNodeExist] == x.data[off + LatentLayout::kNodeExist]);
      for (int k = 0; k < 3; ++k)
        REQUIRE(y.data[off + LatentLayout::kNodeTrans + k] ==
                x.data[off + LatentLayout::kNodeTrans + k]);
      for (int k = 0; k < 3; ++k) {
        const double b = y.data[off + LatentLayout::kNodeBox + k];
        REQUIRE(b >= 1e-3);
        if (x.data[off + LatentLayout::kNodeBox + k] >= 1e-3)
          REQUIRE(b == x.data[off + LatentLayout::kNodeBox + k]);
      }
      for (int k = 0; k < L.F; ++k)
        REQUIRE(y.data[off + LatentLayout::kNodeShape + k] ==
                x.data[off + LatentLayout::kNodeShape + k]);
    }
    for (int i = 0; i < L.K; ++i)
      for (int j = i + 1; j < L.K; ++j) {
        const double* blk = y.data.data() + L.edge_offset(i, j);
        const double* l = blk + LatentLayout::kEdgeL;
        const double* m = blk + LatentLayout::kEdgeM;
        REQUIRE(std::fabs(l[0] * l[0] + l[1] * l[1] + l[2] * l[2] - 1.0) < 1e-9);
        REQUIRE(std::fabs(l[0] * m[0] + l[1] * m[1] + l[2] * m[2]) < 1e-9);
        REQUIRE(blk[LatentLayout::kEdgeLimits + 0] <= blk[LatentLayout::kEdgeLimits + 1]);
        REQUIRE(blk[LatentLayout::kEdgeLimits + 2] <= blk[LatentLayout::kEdgeLimits + 3]);
      }
  }
}

TEST_CASE("decode: two existing nodes with one candidate edge keep that edge") {
  LatentLayout L{3, 8};
  LatentSample x(L);
  x.data[L.node_offset(0)] = 1.0;
  x.data[L.node_offset(1)] = 1.0;
  x.data[L.node_offset(2)] = -1.0;
  double* c = x.data.data() + L.edge_offset(0, 1);
  c[2] = 0.9;  // class +1 dominates
  c[1] = 0.1;
  ArticulationGraph g = decode(x);
  REQUIRE(g.tree_edges.size() == 1);
  REQUIRE(g.tree_edges[0].parent == 0);
  REQUIRE(g.tree_edges[0].child == 1);
}

TEST_CASE("decode: Kruskal drops the weakest edge of a triangle") {
  LatentLayout L{3, 8};
  LatentSample x(L);
  for (int i = 0; i < 3; ++i) x.data[L.node_offset(i)] = 1.0;
  // margins: (0,1) -> 3, (0,2) -> 2, (1,2) -> 1
  x.data[L.edge_offset(0, 1) + LatentLayout::kEdgeClass + 2] = 3.0;
  x.data[L.edge_offset(0, 2) + LatentLayout::kEdgeClass + 2] = 2.0;
  x.data[L.edge_offset(1, 2) + LatentLayout::kEdgeClass + 2] = 1.0;
  ArticulationGraph g = decode(x);
  REQUIRE(g.tree_edges.size() == 2);
  std::set<std::pair<int, int>> kept;
  for (const auto& e : g.tree_edges) kept.insert({e.parent, e.child});
  REQUIRE(kept.count({0, 1}) == 1);
  REQUIRE(kept.count({0, 2}) == 1);
}

TEST_CASE("decode: single existing node has no edges; empty decode is valid") {
  LatentLayout L{3, 8};
  LatentSample x(L);
  x.data[L.node_offset(1)] = 1.0;
  ArticulationGraph g = decode(x);
  REQUIRE(g.existing_count() == 1);
  REQUIRE(g.tree_edges.empty());

  LatentSample none(L);
  for (int i = 0; i < 3; ++i) none.data[L.node_offset(i)] = -1.0;
  ArticulationGraph g0 = decode(none);
  REQUIRE(g0.existing_count() == 0);
  REQUIRE(g0.tree_edges.empty());
}

TEST_CASE("decode never produces a cycle on random latents") {
  Rng rng(99);
  LatentLayout L{8, 8};
  for (int trial = 0; trial < 200; ++trial) {
    LatentSample x(L);
    for (auto& v : x.data) v = rng.normal();
    ArticulationGraph g = decode(project(x));
    detail::DisjointSet ds(L.K);
    for (const auto& e : g.tree_edges) {
      REQUIRE(g.nodes[static_cast<std::size_t>(e.parent)].exists);
      REQUIRE(g.nodes[static_cast<std::size_t>(e.child)].exists);
      REQUIRE(ds.unite(e.parent, e.child));  // fails if this edge closes a cycle
    }
  }
}
