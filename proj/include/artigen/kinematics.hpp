#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "artigen/graph.hpp"
#include "artigen/rng.hpp"
#include "artigen/scalar.hpp"
#include "artigen/vec.hpp"

namespace artigen {

template <class S>
struct RigidTransform {
  Mat3<S> R{};
  Vec3<S> t{};

  Vec3<S> apply(const Vec3<S>& p) const { return R * p + t; }

  RigidTransform operator*(const RigidTransform& o) const {
    return {R * o.R, R * o.t + t};
  }

  RigidTransform inverse() const {
    const Mat3<S> Rt = R.transposed();
    return {Rt, -(Rt * t)};
  }
};

using RigidTransformd = RigidTransform<double>;

inline RigidTransformd identity_transform() { return {Mat3d::identity(), {0, 0, 0}}; }

// Rodrigues rotation about unit axis l: R = c I + s [l]x + (1-c) l l^T.
template <class S>
Mat3<S> rodrigues(const Vec3<S>& l, const S& gamma) {
  using std::cos;
  using std::sin;
  const S c = cos(gamma), s = sin(gamma);
  const S vc = 1.0 - c;
  Mat3<S> R;
  R(0, 0) = vc * (l.x * l.x) + c;
  R(0, 1) = vc * (l.x * l.y) - s * l.z;
  R(0, 2) = vc * (l.x * l.z) + s * l.y;
  R(1, 0) = vc * (l.x * l.y) + s * l.z;
  R(1, 1) = vc * (l.y * l.y) + c;
  R(1, 2) = vc * (l.y * l.z) - s * l.x;
  R(2, 0) = vc * (l.x * l.z) - s * l.y;
  R(2, 1) = vc * (l.y * l.z) + s * l.x;
  R(2, 2) = vc * (l.z * l.z) + c;
  return R;
}

// Screw motion about the Pluecker line (l, m): rotation gamma about the line
// and translation d along it. The line's point closest to the origin is
// p0 = l x m.
template <class S>
RigidTransform<S> screw_transform(const Vec3<S>& l, const Vec3<S>& m, const S& gamma, const S& d) {
  const double n2 = value_of(dot(l, l));
  if (std::fabs(n2 - 1.0) > 2e-6)
    throw std::invalid_argument("screw_transform: axis direction must be unit length");
  if (std::fabs(value_of(dot(l, m))) > 1e-6 * std::max(1.0, std::sqrt(value_of(dot(m, m)))))
    throw std::invalid_argument("screw_transform: moment must be orthogonal to direction");
  RigidTransform<S> T;
  T.R = rodrigues(l, gamma);
  const Vec3<S> p0 = cross(l, m);
  T.t = p0 - T.R * p0 + l * d;
  return T;
}

// Child-local -> parent-local transform under articulation state (gamma, d).
// Part poses are pure translations, so T = T_screw * translate(t_child - t_parent).
template <class S>
RigidTransform<S> relative_pose(const Vec3<S>& l, const Vec3<S>& m, const S& gamma, const S& d,
                                const Vec3<S>& t_parent, const Vec3<S>& t_child) {
  RigidTransform<S> T = screw_transform(l, m, gamma, d);
  T.t = T.t + T.R * (t_child - t_parent);
  return T;
}

inline RigidTransformd relative_pose(const JointEdge& edge, const PartNode& parent,
                                     const PartNode& child, double gamma, double d) {
  return relative_pose<double>(edge.axis_dir, edge.axis_moment, gamma, d,
                               parent.translation, child.translation);
}

enum class StateSampling { uniform_random, equally_spaced };

// Articulation states (gamma, d) within the edge's limits. Equally spaced
// states interpolate both joint coordinates in lockstep, endpoints included.
inline std::vector<std::pair<double, double>> sample_states(const JointEdge& edge, int n,
                                                            StateSampling mode, Rng& rng) {
  if (n < 1) throw std::invalid_argument("sample_states: need n >= 1");
  std::vector<std::pair<double, double>> out;
  out.reserve(static_cast<std::size_t>(n));
  if (mode == StateSampling::uniform_random) {
    for (int i = 0; i < n; ++i) {
      const double g = rng.uniform(edge.gamma_min, edge.gamma_max);
      const double d = rng.uniform(edge.d_min, edge.d_max);
      out.emplace_back(g, d);
    }
  } else {
    for (int i = 0; i < n; ++i) {
      const double u = n == 1 ? 0.0 : static_cast<double>(i) / (n - 1);
      out.emplace_back(edge.gamma_min + u * (edge.gamma_max - edge.gamma_min),
                       edge.d_min + u * (edge.d_max - edge.d_min));
    }
  }
  return out;
}

}  // namespace artigen
