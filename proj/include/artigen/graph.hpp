#pragma once

#include <algorithm>
#include <array>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "artigen/scalar.hpp"
#include "artigen/vec.hpp"

namespace artigen {

// A part of an articulated object. The bounding box is axis-aligned in the
// object frame and centered at `translation`; `shape_latent` parameterizes
// the part's SDF in the bbox-normalized frame.
struct PartNode {
  bool exists = false;
  Vec3d translation{};
  Vec3d bbox{};
  std::vector<double> shape_latent;
};

// Latent-side joint attributes. `existence` holds the scores of the three
// edge classes in the fixed order (c=-1, c=0, c=+1); c=+1 means the lower
// node index is the parent.
struct JointEdge {
  std::array<double, 3> existence{};
  Vec3d axis_dir{0.0, 0.0, 1.0};   // Pluecker l (unit after projection)
  Vec3d axis_moment{};             // Pluecker m (orthogonal to l after projection)
  double gamma_min = 0.0, gamma_max = 0.0;  // screw angle range [rad]
  double d_min = 0.0, d_max = 0.0;          // extension range [m]
};

struct TreeEdge {
  int parent = 0, child = 0;
  JointEdge joint;
};

struct ArticulationGraph {
  std::vector<PartNode> nodes;
  std::vector<TreeEdge> tree_edges;
  std::optional<std::string> category;

  int existing_count() const {
    int n = 0;
    for (const auto& p : nodes) n += p.exists ? 1 : 0;
    return n;
  }
};

// Flat vector layout of the diffusion state: K node blocks [o, t, b, s]
// followed by K(K-1)/2 edge blocks [c, l, m, rho] in row-major
// upper-triangular order.
struct LatentLayout {
  int K = 8;
  int F = 8;

  static constexpr int kEdgeDim = 13;
  // offsets inside a node block
  static constexpr int kNodeExist = 0, kNodeTrans = 1, kNodeBox = 4, kNodeShape = 7;
  // offsets inside an edge block
  static constexpr int kEdgeClass = 0, kEdgeL = 3, kEdgeM = 6, kEdgeLimits = 9;

  int node_dim() const { return 7 + F; }
  int pair_count() const { return K * (K - 1) / 2; }
  int dim() const { return K * node_dim() + pair_count() * kEdgeDim; }

  int node_offset(int i) const { return i * node_dim(); }

  // pair (i, j) with i < j
  int pair_index(int i, int j) const { return i * (2 * K - i - 1) / 2 + (j - i - 1); }
  int edge_offset(int i, int j) const {
    return K * node_dim() + pair_index(i, j) * kEdgeDim;
  }

  bool operator==(const LatentLayout&) const = default;
};

struct LatentSample {
  LatentLayout layout;
  std::vector<double> data;

  LatentSample() = default;
  explicit LatentSample(const LatentLayout& l) : layout(l), data(l.dim(), 0.0) {}
};

namespace detail {

class DisjointSet {
 public:
  explicit DisjointSet(int n) : parent_(n), size_(n, 1) {
    std::iota(parent_.begin(), parent_.end(), 0);
  }
  int find(int a) {
    while (parent_[a] != a) {
      parent_[a] = parent_[parent_[a]];
      a = parent_[a];
    }
    return a;
  }
  // false if a and b were already connected
  bool unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    if (size_[a] < size_[b]) std::swap(a, b);
    parent_[b] = a;
    size_[a] += size_[b];
    return true;
  }

 private:
  std::vector<int> parent_;
  std::vector<int> size_;
};

}  // namespace detail

// Graph -> latent. Existing nodes get o=+1, absent slots o=-1 with zeroed
// attributes; tree edges get a one-hot class by direction, all other pairs
// one-hot for class 0.
inline LatentSample encode(const ArticulationGraph& g, int K, int F) {
  if (static_cast<int>(g.nodes.size()) > K)
    throw std::invalid_argument("encode: graph has more parts than K slots");
  LatentLayout layout{K, F};
  LatentSample x(layout);
  for (int i = 0; i < static_cast<int>(g.nodes.size()); ++i) {
    const PartNode& n = g.nodes[i];
    double* blk = x.data.data() + layout.node_offset(i);
    if (!n.exists) {
      blk[LatentLayout::kNodeExist] = -1.0;
      continue;
    }
    if (static_cast<int>(n.shape_latent.size()) != F)
      throw std::invalid_argument("encode: shape latent length != F");
    blk[LatentLayout::kNodeExist] = 1.0;
    for (int k = 0; k < 3; ++k) blk[LatentLayout::kNodeTrans + k] = n.translation[k];
    for (int k = 0; k < 3; ++k) blk[LatentLayout::kNodeBox + k] = n.bbox[k];
    for (int k = 0; k < F; ++k) blk[LatentLayout::kNodeShape + k] = n.shape_latent[k];
  }
  for (int i = static_cast<int>(g.nodes.size()); i < K; ++i)
    x.data[layout.node_offset(i) + LatentLayout::kNodeExist] = -1.0;

  // all pairs default to class 0 = "no edge"
  for (int i = 0; i < K; ++i)
    for (int j = i + 1; j < K; ++j)
      x.data[layout.edge_offset(i, j) + LatentLayout::kEdgeClass + 1] = 1.0;

  for (const TreeEdge& e : g.tree_edges) {
    const int a = std::min(e.parent, e.child), b = std::max(e.parent, e.child);
    if (a < 0 || b >= K || a == b)
      throw std::invalid_argument("encode: edge endpoint out of range");
    if (e.parent >= static_cast<int>(g.nodes.size()) ||
        e.child >= static_cast<int>(g.nodes.size()) ||
        !g.nodes[e.parent].exists || !g.nodes[e.child].exists)
      throw std::invalid_argument("encode: edge endpoint does not exist");
    double* blk = x.data.data() + layout.edge_offset(a, b);
    if (blk[LatentLayout::kEdgeClass + 1] != 1.0)
      throw std::invalid_argument("encode: duplicate edge for node pair");
    blk[LatentLayout::kEdgeClass + 1] = 0.0;
    blk[LatentLayout::kEdgeClass + (e.parent == a ? 2 : 0)] = 1.0;
    for (int k = 0; k < 3; ++k) blk[LatentLayout::kEdgeL + k] = e.joint.axis_dir[k];
    for (int k = 0; k < 3; ++k) blk[LatentLayout::kEdgeM + k] = e.joint.axis_moment[k];
    blk[LatentLayout::kEdgeLimits + 0] = e.joint.gamma_min;
    blk[LatentLayout::kEdgeLimits + 1] = e.joint.gamma_max;
    blk[LatentLayout::kEdgeLimits + 2] = e.joint.d_min;
    blk[LatentLayout::kEdgeLimits + 3] = e.joint.d_max;
  }
  return x;
}

// Projection onto the valid-graph manifold: unit l, m orthogonal to l,
// ordered joint limits, bbox components >= 1e-3. Total and idempotent.
// Node blocks other than the bbox clamp are untouched.
template <class S>
void project_inplace(const LatentLayout& layout, std::span<S> x) {
  using std::max;
  using std::sqrt;
  for (int i = 0; i < layout.K; ++i) {
    S* blk = x.data() + layout.node_offset(i);
    for (int k = 0; k < 3; ++k)
      blk[LatentLayout::kNodeBox + k] = max(blk[LatentLayout::kNodeBox + k],
                                            constant_like(blk[LatentLayout::kNodeBox + k], 1e-3));
  }
  for (int i = 0; i < layout.K; ++i) {
    for (int j = i + 1; j < layout.K; ++j) {
      S* blk = x.data() + layout.edge_offset(i, j);
      S* l = blk + LatentLayout::kEdgeL;
      S* m = blk + LatentLayout::kEdgeM;
      const S nrm = sqrt(l[0] * l[0] + l[1] * l[1] + l[2] * l[2]);
      if (value_of(nrm) < 1e-8) {
        l[0] = constant_like(nrm, 0.0);
        l[1] = constant_like(nrm, 0.0);
        l[2] = constant_like(nrm, 1.0);
      } else {
        const S inv = 1.0 / nrm;
        for (int k = 0; k < 3; ++k) l[k] = l[k] * inv;
      }
      const S lm = l[0] * m[0] + l[1] * m[1] + l[2] * m[2];
      for (int k = 0; k < 3; ++k) m[k] = m[k] - lm * l[k];
      S* rho = blk + LatentLayout::kEdgeLimits;
      if (value_of(rho[0]) > value_of(rho[1])) std::swap(rho[0], rho[1]);
      if (value_of(rho[2]) > value_of(rho[3])) std::swap(rho[2], rho[3]);
    }
  }
}

inline LatentSample project(const LatentSample& x) {
  LatentSample y = x;
  project_inplace<double>(y.layout, y.data);
  return y;
}

// Latent -> graph. Nodes exist iff o > 0.5. Candidate edges between existing
// nodes are those whose best nonzero class score beats the no-edge score; a
// spanning forest is extracted by maximum-weight Kruskal on the margin
// max(c[-1], c[+1]) - c[0], ties broken by (i, j) lexicographic order.
inline ArticulationGraph decode(const LatentSample& x) {
  const LatentLayout& layout = x.layout;
  ArticulationGraph g;
  g.nodes.resize(layout.K);
  for (int i = 0; i < layout.K; ++i) {
    const double* blk = x.data.data() + layout.node_offset(i);
    PartNode& n = g.nodes[i];
    n.exists = blk[LatentLayout::kNodeExist] > 0.5;
    for (int k = 0; k < 3; ++k) n.translation[k] = blk[LatentLayout::kNodeTrans + k];
    for (int k = 0; k < 3; ++k) n.bbox[k] = blk[LatentLayout::kNodeBox + k];
    n.shape_latent.assign(blk + LatentLayout::kNodeShape, blk + LatentLayout::kNodeShape + layout.F);
  }

  struct Candidate {
    double weight;
    int i, j;
  };
  std::vector<Candidate> cands;
  for (int i = 0; i < layout.K; ++i) {
    for (int j = i + 1; j < layout.K; ++j) {
      if (!g.nodes[i].exists || !g.nodes[j].exists) continue;
      const double* c = x.data.data() + layout.edge_offset(i, j) + LatentLayout::kEdgeClass;
      const double w = std::max(c[0], c[2]) - c[1];
      if (w > 0.0) cands.push_back({w, i, j});
    }
  }
  std::sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
    if (a.weight != b.weight) return a.weight > b.weight;
    return std::tie(a.i, a.j) < std::tie(b.i, b.j);
  });

  detail::DisjointSet ds(layout.K);
  for (const Candidate& cand : cands) {
    if (!ds.unite(cand.i, cand.j)) continue;
    const double* blk = x.data.data() + layout.edge_offset(cand.i, cand.j);
    const double* c = blk + LatentLayout::kEdgeClass;
    TreeEdge e;
    if (c[2] >= c[0]) {
      e.parent = cand.i;
      e.child = cand.j;
    } else {
      e.parent = cand.j;
      e.child = cand.i;
    }
    e.joint.existence = {c[0], c[1], c[2]};
    for (int k = 0; k < 3; ++k) e.joint.axis_dir[k] = blk[LatentLayout::kEdgeL + k];
    for (int k = 0; k < 3; ++k) e.joint.axis_moment[k] = blk[LatentLayout::kEdgeM + k];
    e.joint.gamma_min = blk[LatentLayout::kEdgeLimits + 0];
    e.joint.gamma_max = blk[LatentLayout::kEdgeLimits + 1];
    e.joint.d_min = blk[LatentLayout::kEdgeLimits + 2];
    e.joint.d_max = blk[LatentLayout::kEdgeLimits + 3];
    g.tree_edges.push_back(e);
  }
  std::sort(g.tree_edges.begin(), g.tree_edges.end(), [](const TreeEdge& a, const TreeEdge& b) {
    return std::tie(a.parent, a.child) < std::tie(b.parent, b.child);
  });
  return g;
}

}  // namespace artigen
