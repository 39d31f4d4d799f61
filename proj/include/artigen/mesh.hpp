#pragma once

#include <algorithm>
#include <array>
#include <cstdio>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "artigen/kinematics.hpp"
#include "artigen/mc_tables.hpp"
#include "artigen/rng.hpp"
#include "artigen/shape.hpp"
#include "artigen/vec.hpp"

namespace artigen {

struct TriMesh {
  std::vector<Vec3d> vertices;
  std::vector<std::array<int, 3>> faces;

  bool empty() const { return faces.empty(); }

  void append(const TriMesh& o) {
    const int base = static_cast<int>(vertices.size());
    vertices.insert(vertices.end(), o.vertices.begin(), o.vertices.end());
    for (const auto& f : o.faces) faces.push_back({f[0] + base, f[1] + base, f[2] + base});
  }
};

// Marching cubes on a sampled field with R samples per axis. The
// configuration convention is negative-inside; vertices are welded through
// grid-edge keys, so the result is a closed 2-manifold whenever the zero
// level set stays strictly inside the grid. Returns an empty mesh when no
// cell has a sign change.
inline TriMesh marching_cubes(std::span<const double> field, int R, const Vec3d& lo,
                              const Vec3d& step) {
  auto fidx = [R](int ix, int iy, int iz) {
    return (static_cast<std::size_t>(iz) * R + iy) * R + ix;
  };
  TriMesh mesh;
  // welded vertex per (grid corner, axis) edge key
  std::unordered_map<std::uint64_t, int> edge_vertex;
  auto edge_key = [&](int ix, int iy, int iz, int axis) {
    return (static_cast<std::uint64_t>(fidx(ix, iy, iz)) << 2) | static_cast<std::uint64_t>(axis);
  };
  auto corner_pos = [&](int ix, int iy, int iz) {
    return Vec3d{lo.x + ix * step.x, lo.y + iy * step.y, lo.z + iz * step.z};
  };

  for (int iz = 0; iz + 1 < R; ++iz)
    for (int iy = 0; iy + 1 < R; ++iy)
      for (int ix = 0; ix + 1 < R; ++ix) {
        int config = 0;
        double vals[8];
        for (int c = 0; c < 8; ++c) {
          const auto& off = detail::kCornerOffsets[static_cast<std::size_t>(c)];
          vals[c] = field[fidx(ix + off[0], iy + off[1], iz + off[2])];
          if (vals[c] < 0.0) config |= 1 << c;
        }
        const std::int8_t* tris = detail::kTriTable[config];
        if (tris[0] < 0) continue;
        int evtx[12];
        for (int t = 0; tris[t] >= 0; ++t) {
          const int e = tris[t];
          const auto& ec = detail::kEdgeCorners[static_cast<std::size_t>(e)];
          const auto& o0 = detail::kCornerOffsets[static_cast<std::size_t>(ec[0])];
          const auto& o1 = detail::kCornerOffsets[static_cast<std::size_t>(ec[1])];
          // canonical key: the edge's lower corner plus its axis
          const int ax0 = ix + std::min(o0[0], o1[0]), ay0 = iy + std::min(o0[1], o1[1]),
                    az0 = iz + std::min(o0[2], o1[2]);
          const int axis = o0[0] != o1[0] ? 0 : (o0[1] != o1[1] ? 1 : 2);
          const std::uint64_t key = edge_key(ax0, ay0, az0, axis);
          auto it = edge_vertex.find(key);
          if (it == edge_vertex.end()) {
            const Vec3d pa = corner_pos(ix + o0[0], iy + o0[1], iz + o0[2]);
            const Vec3d pb = corner_pos(ix + o1[0], iy + o1[1], iz + o1[2]);
            const double da = vals[ec[0]], db = vals[ec[1]];
            const double u = da / (da - db);  // da and db have opposite signs
            const Vec3d p = pa + (pb - pa) * u;
            it = edge_vertex.emplace(key, static_cast<int>(mesh.vertices.size())).first;
            mesh.vertices.push_back(p);
          }
          evtx[t % 3] = it->second;
          // table winding is inward for the negative-inside convention; flip
          if (t % 3 == 2) mesh.faces.push_back({evtx[0], evtx[2], evtx[1]});
        }
      }
  return mesh;
}

// Part mesh via marching cubes on a resolution^3 grid spanning the part bbox
// inflated by 5% (the level set never touches the grid boundary). Part
// existence is not an input; extraction works for any slot.
inline TriMesh extract_mesh(const PartNode& node, int resolution) {
  if (resolution < 8) throw std::invalid_argument("extract_mesh: resolution must be >= 8");
  const int R = resolution;
  const ShapeParams<double> prm = decode_shape(std::span<const double>(node.shape_latent));
  const Vec3d lo = node.translation - node.bbox * (0.5 * 1.05);
  const Vec3d step{node.bbox.x * 1.05 / (R - 1), node.bbox.y * 1.05 / (R - 1),
                   node.bbox.z * 1.05 / (R - 1)};
  std::vector<double> field(static_cast<std::size_t>(R) * R * R);
  std::size_t k = 0;
  for (int iz = 0; iz < R; ++iz)
    for (int iy = 0; iy < R; ++iy)
      for (int ix = 0; ix < R; ++ix) {
        const Vec3d p{lo.x + ix * step.x, lo.y + iy * step.y, lo.z + iz * step.z};
        field[k++] = sdf_world<double>(p, node.translation, node.bbox, prm);
      }
  return marching_cubes(field, R, lo, step);
}

inline double surface_area(const TriMesh& mesh) {
  double area = 0.0;
  for (const auto& f : mesh.faces) {
    const Vec3d& a = mesh.vertices[static_cast<std::size_t>(f[0])];
    const Vec3d& b = mesh.vertices[static_cast<std::size_t>(f[1])];
    const Vec3d& c = mesh.vertices[static_cast<std::size_t>(f[2])];
    area += 0.5 * norm(cross(b - a, c - a));
  }
  return area;
}

// Positive for consistently outward-wound closed meshes.
inline double signed_volume(const TriMesh& mesh) {
  double vol = 0.0;
  for (const auto& f : mesh.faces) {
    const Vec3d& a = mesh.vertices[static_cast<std::size_t>(f[0])];
    const Vec3d& b = mesh.vertices[static_cast<std::size_t>(f[1])];
    const Vec3d& c = mesh.vertices[static_cast<std::size_t>(f[2])];
    vol += dot(a, cross(b, c)) / 6.0;
  }
  return vol;
}

inline TriMesh transformed(const TriMesh& mesh, const RigidTransformd& T) {
  TriMesh out = mesh;
  for (auto& v : out.vertices) v = T.apply(v);
  return out;
}

// Area-weighted uniform surface samples.
inline std::vector<Vec3d> sample_surface(const TriMesh& mesh, int n, Rng& rng) {
  if (mesh.faces.empty()) throw std::invalid_argument("sample_surface: empty mesh");
  std::vector<double> cumulative(mesh.faces.size());
  double total = 0.0;
  for (std::size_t i = 0; i < mesh.faces.size(); ++i) {
    const auto& f = mesh.faces[i];
    const Vec3d& a = mesh.vertices[static_cast<std::size_t>(f[0])];
    const Vec3d& b = mesh.vertices[static_cast<std::size_t>(f[1])];
    const Vec3d& c = mesh.vertices[static_cast<std::size_t>(f[2])];
    total += 0.5 * norm(cross(b - a, c - a));
    cumulative[i] = total;
  }
  std::vector<Vec3d> pts;
  pts.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double r = rng.uniform() * total;
    const auto it = std::lower_bound(cumulative.begin(), cumulative.end(), r);
    const std::size_t fi = std::min(static_cast<std::size_t>(it - cumulative.begin()),
                                    mesh.faces.size() - 1);
    const auto& f = mesh.faces[fi];
    double u = rng.uniform(), v = rng.uniform();
    if (u + v > 1.0) {
      u = 1.0 - u;
      v = 1.0 - v;
    }
    const Vec3d& a = mesh.vertices[static_cast<std::size_t>(f[0])];
    const Vec3d& b = mesh.vertices[static_cast<std::size_t>(f[1])];
    const Vec3d& c = mesh.vertices[static_cast<std::size_t>(f[2])];
    pts.push_back(a + (b - a) * u + (c - a) * v);
  }
  return pts;
}

// Closest point on a triangle (Ericson, Real-Time Collision Detection).
inline Vec3d closest_point_on_triangle(const Vec3d& p, const Vec3d& a, const Vec3d& b,
                                       const Vec3d& c) {
  const Vec3d ab = b - a, ac = c - a, ap = p - a;
  const double d1 = dot(ab, ap), d2 = dot(ac, ap);
  if (d1 <= 0.0 && d2 <= 0.0) return a;
  const Vec3d bp = p - b;
  const double d3 = dot(ab, bp), d4 = dot(ac, bp);
  if (d3 >= 0.0 && d4 <= d3) return b;
  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) return a + ab * (d1 / (d1 - d3));
  const Vec3d cp = p - c;
  const double d5 = dot(ab, cp), d6 = dot(ac, cp);
  if (d6 >= 0.0 && d5 <= d6) return c;
  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) return a + ac * (d2 / (d2 - d6));
  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0)
    return b + (c - b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6)));
  const double denom = 1.0 / (va + vb + vc);
  return a + ab * (vb * denom) + ac * (vc * denom);
}

inline double point_mesh_distance(const Vec3d& p, const TriMesh& mesh) {
  if (mesh.faces.empty()) throw std::invalid_argument("point_mesh_distance: empty mesh");
  double best = std::numeric_limits<double>::infinity();
  for (const auto& f : mesh.faces) {
    const Vec3d q = closest_point_on_triangle(p, mesh.vertices[static_cast<std::size_t>(f[0])],
                                              mesh.vertices[static_cast<std::size_t>(f[1])],
                                              mesh.vertices[static_cast<std::size_t>(f[2])]);
    best = std::min(best, norm(p - q));
  }
  return best;
}

// ASCII OBJ with v/f records only.
inline std::string to_obj(const TriMesh& mesh) {
  std::string out;
  out.reserve(mesh.vertices.size() * 40 + mesh.faces.size() * 20);
  char buf[96];
  for (const auto& v : mesh.vertices) {
    std::snprintf(buf, sizeof buf, "v %.9g %.9g %.9g\n", v.x, v.y, v.z);
    out += buf;
  }
  for (const auto& f : mesh.faces) {
    std::snprintf(buf, sizeof buf, "f %d %d %d\n", f[0] + 1, f[1] + 1, f[2] + 1);
    out += buf;
  }
  return out;
}

}  // namespace artigen
