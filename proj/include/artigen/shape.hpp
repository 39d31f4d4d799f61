#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>

#include "artigen/graph.hpp"
#include "artigen/scalar.hpp"
#include "artigen/vec.hpp"

namespace artigen {

// Evaluation counter for tests and profiling (per thread, relaxed accounting).
inline thread_local std::uint64_t sdf_world_evals = 0;

// Analytic part shape in the bbox-normalized frame: a rounded box with a
// linear taper of the x/y half extents along z. All parameters are bounded
// squashings of the shape latent, so any finite latent decodes to a valid
// shape.
template <class S>
struct ShapeParams {
  Vec3<S> half_extents;  // in (0.35, 1) per axis
  S corner_radius;       // in (0, 0.5)
  S taper;               // in (-0.5, 0.5)
};

template <class S>
ShapeParams<S> decode_shape(std::span<const S> s) {
  if (s.size() < 5) throw std::invalid_argument("decode_shape: shape latent needs F >= 5");
  using std::tanh;
  ShapeParams<S> p;
  for (int k = 0; k < 3; ++k) p.half_extents[k] = 0.35 + 0.65 * sigmoid(s[k]);
  p.corner_radius = 0.5 * sigmoid(s[3]);
  p.taper = 0.5 * tanh(s[4]);
  return p;
}

namespace detail {

// exact box SDF with the given half extents
template <class S>
S box_sdf(const Vec3<S>& p, const Vec3<S>& half) {
  using std::abs;
  using std::max;
  using std::sqrt;
  const S qx = abs(p.x) - half.x;
  const S qy = abs(p.y) - half.y;
  const S qz = abs(p.z) - half.z;
  const S m = max(qx, max(qy, qz));
  if (value_of(m) <= 0.0) return m;
  const S ax = max(qx, constant_like(qx, 0.0));
  const S ay = max(qy, constant_like(qy, 0.0));
  const S az = max(qz, constant_like(qz, 0.0));
  return sqrt(ax * ax + ay * ay + az * az);
}

}  // namespace detail

// Signed distance in the unit frame, negative inside. Exact rounded-box SDF
// after the taper map, scaled by min(lateral scale, 1) so the magnitude stays
// a lower bound on the true distance, then intersected with the unit cube:
// a part's material never leaves its bounding box, which the bbox-based
// penetration machinery depends on.
template <class S>
S sdf_local(const Vec3<S>& p, const ShapeParams<S>& prm) {
  using std::abs;
  using std::max;
  using std::min;
  using std::sqrt;
  const S scale = 1.0 - prm.taper * p.z;
  const S inv_scale = 1.0 / scale;
  const S qx = abs(p.x * inv_scale) - (prm.half_extents.x - prm.corner_radius);
  const S qy = abs(p.y * inv_scale) - (prm.half_extents.y - prm.corner_radius);
  const S qz = abs(p.z) - (prm.half_extents.z - prm.corner_radius);
  const S m = max(qx, max(qy, qz));
  S d;
  if (value_of(m) <= 0.0) {
    d = m - prm.corner_radius;
  } else {
    const S ax = max(qx, constant_like(qx, 0.0));
    const S ay = max(qy, constant_like(qy, 0.0));
    const S az = max(qz, constant_like(qz, 0.0));
    d = sqrt(ax * ax + ay * ay + az * az) - prm.corner_radius;
  }
  const Vec3<S> unit{constant_like(scale, 1.0), constant_like(scale, 1.0),
                     constant_like(scale, 1.0)};
  return max(d * min(scale, constant_like(scale, 1.0)), detail::box_sdf(p, unit));
}

// Query in the part frame (part centered at the origin) against a part with
// bbox edge lengths b. Inside the bbox the unit-frame SDF is rescaled by the
// minimum half extent; outside, the distance to the bbox is added to the SDF
// at the clamped point.
template <class S>
S sdf_part_frame(const Vec3<S>& q, const Vec3<S>& b, const ShapeParams<S>& prm) {
  using std::max;
  using std::min;
  using std::sqrt;
  ++sdf_world_evals;
  const Vec3<S> hb{b.x * 0.5, b.y * 0.5, b.z * 0.5};
  const S min_hb = min(hb.x, min(hb.y, hb.z));
  const bool inside = value_of(q.x) >= -value_of(hb.x) && value_of(q.x) <= value_of(hb.x) &&
                      value_of(q.y) >= -value_of(hb.y) && value_of(q.y) <= value_of(hb.y) &&
                      value_of(q.z) >= -value_of(hb.z) && value_of(q.z) <= value_of(hb.z);
  if (inside) {
    const Vec3<S> u{q.x / hb.x, q.y / hb.y, q.z / hb.z};
    return sdf_local(u, prm) * min_hb;
  }
  Vec3<S> qc;
  for (int k = 0; k < 3; ++k) qc[k] = min(max(q[k], -hb[k]), hb[k]);
  const Vec3<S> dv = q - qc;
  const S dist = sqrt(dot(dv, dv));
  const Vec3<S> u{qc.x / hb.x, qc.y / hb.y, qc.z / hb.z};
  return dist + sdf_local(u, prm) * min_hb;
}

// World-frame query against a part translated to t.
template <class S>
S sdf_world(const Vec3<S>& p, const Vec3<S>& t, const Vec3<S>& b, const ShapeParams<S>& prm) {
  return sdf_part_frame(p - t, b, prm);
}

template <class S>
S sdf_world(const Vec3<S>& p, const Vec3<S>& t, const Vec3<S>& b, std::span<const S> shape_latent) {
  return sdf_world(p, t, b, decode_shape(shape_latent));
}

inline double sdf_world(const Vec3d& p, const PartNode& node) {
  return sdf_world<double>(p, node.translation, node.bbox,
                           std::span<const double>(node.shape_latent));
}

}  // namespace artigen
