#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "artigen/denoiser.hpp"
#include "artigen/graph.hpp"
#include "artigen/kinematics.hpp"
#include "artigen/pointcloud.hpp"
#include "artigen/rng.hpp"
#include "artigen/schedule.hpp"
#include "artigen/shape.hpp"

namespace artigen {

enum class GradMode { posterior_only, full_chain };

// Loss weights are base weights; when several terms are active each effective
// weight is the base weight divided by the number of active terms.
struct GuidanceConfig {
  double w_pc = 45.0;
  double w_pen = 2.0;
  double w_mob = 2.0;
  int n_g = 500;            // number of final guided steps
  double tau = 1000.0;      // inverse temperature of the soft correspondence
  double eps_stab = 1e-6;   // stability constant in the correspondence denominator
  int n_star = 1000;        // grid point budget per part pair
  GradMode grad_mode = GradMode::posterior_only;

  int active_terms() const { return (w_pc > 0) + (w_pen > 0) + (w_mob > 0); }

  double effective_w_pc() const { return active_terms() ? w_pc / active_terms() : 0.0; }
  double effective_w_pen() const { return active_terms() ? w_pen / active_terms() : 0.0; }
  double effective_w_mob() const { return active_terms() ? w_mob / active_terms() : 0.0; }

  void validate(int T = 0) const {
    if (w_pc < 0 || w_pen < 0 || w_mob < 0)
      throw std::invalid_argument("GuidanceConfig: weights must be nonnegative");
    if (tau <= 0) throw std::invalid_argument("GuidanceConfig: tau must be positive");
    if (n_star < 1) throw std::invalid_argument("GuidanceConfig: grid budget must be >= 1");
    if (n_g < 0) throw std::invalid_argument("GuidanceConfig: n_g must be nonnegative");
    if (T > 0 && n_g > T) throw std::invalid_argument("GuidanceConfig: n_g exceeds step count");
  }
};

// Soft correspondence of each point to each part slot (Boltzmann weights over
// parts at inverse temperature tau). `distances` is n_points x K row-major.
// Existences are clamped below at -eps_stab/2 so the denominator never
// crosses zero; rows sum to one.
template <class S>
std::vector<S> soft_correspondence(std::span<const S> distances, int n_points, int K,
                                   std::span<const S> existences, double tau, double eps_stab) {
  using std::exp;
  using std::max;
  std::vector<S> coeff;
  coeff.reserve(static_cast<std::size_t>(K));
  for (int i = 0; i < K; ++i) {
    const S o = max(existences[static_cast<std::size_t>(i)],
                    constant_like(existences[static_cast<std::size_t>(i)], -0.5 * eps_stab));
    coeff.push_back(-tau / (o + eps_stab));
  }
  std::vector<S> alpha(static_cast<std::size_t>(n_points) * K);
  std::vector<S> ex(static_cast<std::size_t>(K));
  for (int j = 0; j < n_points; ++j) {
    const S* drow = distances.data() + static_cast<std::size_t>(j) * K;
    S m = drow[0] * drow[0] * coeff[0];
    for (int i = 1; i < K; ++i) m = max(m, drow[i] * drow[i] * coeff[static_cast<std::size_t>(i)]);
    S sum = constant_like(m, 0.0);
    for (int i = 0; i < K; ++i) {
      ex[static_cast<std::size_t>(i)] =
          exp(drow[i] * drow[i] * coeff[static_cast<std::size_t>(i)] - m);
      sum = sum + ex[static_cast<std::size_t>(i)];
    }
    const S inv = 1.0 / sum;
    for (int i = 0; i < K; ++i)
      alpha[static_cast<std::size_t>(j) * K + i] = ex[static_cast<std::size_t>(i)] * inv;
  }
  return alpha;
}

namespace detail {

// per-part handles into a latent vector, with the shape decoded once
template <class S>
struct PartView {
  S existence;
  Vec3<S> t, b;
  ShapeParams<S> shape;
};

template <class S>
std::vector<PartView<S>> make_part_views(const LatentLayout& L, std::span<const S> x) {
  std::vector<PartView<S>> parts;
  parts.reserve(static_cast<std::size_t>(L.K));
  for (int i = 0; i < L.K; ++i) {
    const S* blk = x.data() + L.node_offset(i);
    PartView<S> p;
    p.existence = blk[LatentLayout::kNodeExist];
    p.t = {blk[LatentLayout::kNodeTrans], blk[LatentLayout::kNodeTrans + 1],
           blk[LatentLayout::kNodeTrans + 2]};
    p.b = {blk[LatentLayout::kNodeBox], blk[LatentLayout::kNodeBox + 1],
           blk[LatentLayout::kNodeBox + 2]};
    p.shape = decode_shape(std::span<const S>(blk + LatentLayout::kNodeShape,
                                              static_cast<std::size_t>(L.F)));
    parts.push_back(std::move(p));
  }
  return parts;
}

template <class S>
Vec3<S> to_scalar_vec(const Vec3d& p, const S& ref) {
  return {constant_like(ref, p.x), constant_like(ref, p.y), constant_like(ref, p.z)};
}

inline double value_component(double v) { return v; }

// double-precision mirror of a part view, used for cheap prepasses
template <class S>
PartView<double> values_of(const PartView<S>& p) {
  PartView<double> r;
  r.existence = value_of(p.existence);
  for (int k = 0; k < 3; ++k) {
    r.t[k] = value_of(p.t[k]);
    r.b[k] = value_of(p.b[k]);
  }
  for (int k = 0; k < 3; ++k) r.shape.half_extents[k] = value_of(p.shape.half_extents[k]);
  r.shape.corner_radius = value_of(p.shape.corner_radius);
  r.shape.taper = value_of(p.shape.taper);
  return r;
}

}  // namespace detail

// Point-cloud alignment loss: correspondence-weighted squared SDF values over
// all part slots (existing or not; existence only enters through the
// correspondence weights).
template <class S>
S loss_pointcloud(const LatentLayout& L, std::span<const S> x, const PointCloud& P,
                  const GuidanceConfig& cfg) {
  if (P.points.empty()) throw std::invalid_argument("loss_pointcloud: empty point cloud");
  const auto parts = detail::make_part_views(L, x);
  const int K = L.K;
  const int n_p = static_cast<int>(P.points.size());

  std::vector<S> d;
  d.reserve(static_cast<std::size_t>(n_p) * K);
  std::vector<S> existences;
  existences.reserve(static_cast<std::size_t>(K));
  for (int i = 0; i < K; ++i) existences.push_back(parts[static_cast<std::size_t>(i)].existence);
  for (int j = 0; j < n_p; ++j) {
    const Vec3<S> p = detail::to_scalar_vec(P.points[static_cast<std::size_t>(j)], x[0]);
    for (int i = 0; i < K; ++i) {
      const auto& part = parts[static_cast<std::size_t>(i)];
      d.push_back(sdf_world(p, part.t, part.b, part.shape));
    }
  }
  const std::vector<S> alpha =
      soft_correspondence<S>(d, n_p, K, existences, cfg.tau, cfg.eps_stab);
  S total = constant_like(x[0], 0.0);
  for (std::size_t k = 0; k < d.size(); ++k) total = total + alpha[k] * d[k] * d[k];
  return total;
}

// Grid resolution for a bbox-intersection cuboid: points per axis proportional
// to the edge length relative to the volume-equivalent cube, floored and
// clamped to at least one per axis. Degenerate cuboids yield an empty grid.
inline std::array<int, 3> grid_counts(const Vec3d& b_inter, int n_star) {
  if (b_inter.x <= 0.0 || b_inter.y <= 0.0 || b_inter.z <= 0.0) return {0, 0, 0};
  const double volume = b_inter.x * b_inter.y * b_inter.z;
  const double l_v = std::cbrt(volume);
  const double root = std::cbrt(static_cast<double>(n_star));
  std::array<int, 3> n;
  for (int k = 0; k < 3; ++k) {
    // 1e-9 guards the floor against representation error in the cube roots
    const double ideal = root * b_inter[k] / l_v;
    n[static_cast<std::size_t>(k)] = static_cast<int>(std::floor(std::max(ideal, 1.0) + 1e-9));
  }
  return n;
}

// SDF penetration error at a point: nonzero exactly when the summed signed
// distances indicate overlap, quadratic in the overlap depth.
template <class S>
S penetration_error_from_distances(const S& d_i, const S& d_j) {
  const S s = d_i + d_j;
  if (value_of(s) >= 0.0) return constant_like(s, 0.0);
  return 0.5 * s * s;
}

inline double penetration_error(const Vec3d& q, const PartNode& a, const PartNode& b) {
  const double di = sdf_world(q, a), dj = sdf_world(q, b);
  return penetration_error_from_distances(di, dj);
}

namespace detail {

// Midpoint-quadrature penetration sum between two parts over the cell-center
// grid of an intersection cuboid given in object coordinates. When
// obj_from_child is set (mobility states), it maps child part-frame
// coordinates into the object frame and the child is queried through its
// inverse; otherwise the child sits at its rest translation. Grid counts come
// from the cuboid values; positions stay differentiable through the cuboid
// bounds.
template <class S>
S grid_penetration_sum(const Vec3<S>& lo, const Vec3<S>& hi, int n_star, const PartView<S>& pi,
                       const PartView<S>& pj, const RigidTransform<S>* obj_from_child,
                       S* v_el_out) {
  const Vec3d lo_v{value_of(lo.x), value_of(lo.y), value_of(lo.z)};
  const Vec3d hi_v{value_of(hi.x), value_of(hi.y), value_of(hi.z)};
  const Vec3d b_inter_v = hi_v - lo_v;
  const std::array<int, 3> n = grid_counts(b_inter_v, n_star);
  S zero = constant_like(lo.x, 0.0);
  if (n[0] == 0 || n[1] == 0 || n[2] == 0) {
    *v_el_out = zero;
    return zero;
  }

  const Vec3<S> b_inter = hi - lo;
  const Vec3<S> step{b_inter.x * (1.0 / n[0]), b_inter.y * (1.0 / n[1]),
                     b_inter.z * (1.0 / n[2])};
  *v_el_out = 1e5 * step.x * step.y * step.z;

  // cheap double prepass: only points with overlapping signed distances
  // contribute value or gradient
  const PartView<double> piv = values_of(pi), pjv = values_of(pj);
  RigidTransform<double> child_from_obj_v;
  if (obj_from_child) {
    RigidTransform<double> Tv;
    for (int k = 0; k < 9; ++k)
      Tv.R.m[static_cast<std::size_t>(k)] =
          value_of(obj_from_child->R.m[static_cast<std::size_t>(k)]);
    for (int k = 0; k < 3; ++k) Tv.t[k] = value_of(obj_from_child->t[k]);
    child_from_obj_v = Tv.inverse();
  }

  S sum = zero;
  for (int iz = 0; iz < n[2]; ++iz) {
    for (int iy = 0; iy < n[1]; ++iy) {
      for (int ix = 0; ix < n[0]; ++ix) {
        const double fx = ix + 0.5, fy = iy + 0.5, fz = iz + 0.5;
        const Vec3d qv{lo_v.x + fx * b_inter_v.x / n[0], lo_v.y + fy * b_inter_v.y / n[1],
                       lo_v.z + fz * b_inter_v.z / n[2]};
        const double di_v = sdf_part_frame<double>(qv - piv.t, piv.b, piv.shape);
        const Vec3d cj_v = obj_from_child ? child_from_obj_v.apply(qv) : qv - pjv.t;
        const double dj_v = sdf_part_frame<double>(cj_v, pjv.b, pjv.shape);
        if (di_v + dj_v >= 0.0) continue;

        const Vec3<S> q{lo.x + fx * step.x, lo.y + fy * step.y, lo.z + fz * step.z};
        const S di = sdf_part_frame<S>(q - pi.t, pi.b, pi.shape);
        S dj;
        if (obj_from_child) {
          const Mat3<S> Rt = obj_from_child->R.transposed();
          const Vec3<S> c = Rt * (q - obj_from_child->t);
          dj = sdf_part_frame<S>(c, pj.b, pj.shape);
        } else {
          dj = sdf_part_frame<S>(q - pj.t, pj.b, pj.shape);
        }
        sum = sum + penetration_error_from_distances(di, dj);
      }
    }
  }
  return sum;
}

}  // namespace detail

// Initial-state penetration loss over all ordered part pairs, weighted by the
// clamped continuous existences and the midpoint volume element.
template <class S>
S loss_penetration(const LatentLayout& L, std::span<const S> x, const GuidanceConfig& cfg) {
  using std::max;
  using std::min;
  const auto parts = detail::make_part_views(L, x);
  S total = constant_like(x[0], 0.0);
  for (int i = 0; i < L.K; ++i) {
    for (int j = i + 1; j < L.K; ++j) {
      const auto& pi = parts[static_cast<std::size_t>(i)];
      const auto& pj = parts[static_cast<std::size_t>(j)];
      const S oi = min(max(pi.existence, constant_like(pi.existence, 0.0)),
                       constant_like(pi.existence, 1.5));
      const S oj = min(max(pj.existence, constant_like(pj.existence, 0.0)),
                       constant_like(pj.existence, 1.5));
      if (value_of(oi) * value_of(oj) == 0.0) continue;
      Vec3<S> lo, hi;
      bool empty = false;
      for (int k = 0; k < 3; ++k) {
        lo[k] = max(pi.t[k] - 0.5 * pi.b[k], pj.t[k] - 0.5 * pj.b[k]);
        hi[k] = min(pi.t[k] + 0.5 * pi.b[k], pj.t[k] + 0.5 * pj.b[k]);
        if (value_of(hi[k]) <= value_of(lo[k])) empty = true;
      }
      if (empty) continue;
      S v_el = constant_like(x[0], 0.0);
      const S psi_sum =
          detail::grid_penetration_sum<S>(lo, hi, cfg.n_star, pi, pj, nullptr, &v_el);
      if (value_of(psi_sum) == 0.0) continue;
      // both orderings of the pair contribute identically
      total = total + 2.0 * v_el * psi_sum * oi * oj;
    }
  }
  return total;
}

// Mobility loss: penetration between edge-connected parts at two articulation
// states drawn uniformly within the predicted limits. State draws consume a
// fixed number of uniforms per pair so the stream is stable under
// perturbations of the latent.
template <class S>
S loss_mobility(const LatentLayout& L, std::span<const S> x, const GuidanceConfig& cfg,
                Rng& state_rng) {
  using std::max;
  using std::min;
  const auto parts = detail::make_part_views(L, x);
  S total = constant_like(x[0], 0.0);
  for (int i = 0; i < L.K; ++i) {
    for (int j = i + 1; j < L.K; ++j) {
      double u[2][2];
      for (auto& state : u) {
        state[0] = state_rng.uniform();
        state[1] = state_rng.uniform();
      }
      const S* blk = x.data() + L.edge_offset(i, j);
      const S* cls = blk + LatentLayout::kEdgeClass;
      const double score = std::max(value_of(cls[0]), value_of(cls[2]));
      if (score <= 0.1) continue;
      const S weight = max(cls[0], cls[2]);

      // dominant class orients the edge
      const bool forward = value_of(cls[2]) >= value_of(cls[0]);
      const auto& parent = parts[static_cast<std::size_t>(forward ? i : j)];
      const auto& child = parts[static_cast<std::size_t>(forward ? j : i)];

      const Vec3<S> l{blk[LatentLayout::kEdgeL], blk[LatentLayout::kEdgeL + 1],
                      blk[LatentLayout::kEdgeL + 2]};
      const Vec3<S> m{blk[LatentLayout::kEdgeM], blk[LatentLayout::kEdgeM + 1],
                      blk[LatentLayout::kEdgeM + 2]};
      const S* rho = blk + LatentLayout::kEdgeLimits;

      S pair_sum = constant_like(x[0], 0.0);
      for (const auto& state : u) {
        const S gamma = rho[0] + state[0] * (rho[1] - rho[0]);
        const S dext = rho[2] + state[1] * (rho[3] - rho[2]);
        // child part frame -> object frame at this articulation state
        RigidTransform<S> T = relative_pose<S>(l, m, gamma, dext, parent.t, child.t);
        T.t = T.t + parent.t;

        // circumscribing axis-aligned box of the transformed child bbox
        Vec3<S> clo, chi;
        bool first = true;
        for (int corner = 0; corner < 8; ++corner) {
          const Vec3<S> c{child.b.x * (corner & 1 ? 0.5 : -0.5),
                          child.b.y * (corner & 2 ? 0.5 : -0.5),
                          child.b.z * (corner & 4 ? 0.5 : -0.5)};
          const Vec3<S> y = T.apply(c);
          if (first) {
            clo = y;
            chi = y;
            first = false;
          } else {
            for (int k = 0; k < 3; ++k) {
              clo[k] = min(clo[k], y[k]);
              chi[k] = max(chi[k], y[k]);
            }
          }
        }
        Vec3<S> lo, hi;
        bool empty = false;
        for (int k = 0; k < 3; ++k) {
          lo[k] = max(clo[k], parent.t[k] - 0.5 * parent.b[k]);
          hi[k] = min(chi[k], parent.t[k] + 0.5 * parent.b[k]);
          if (value_of(hi[k]) <= value_of(lo[k])) empty = true;
        }
        if (empty) continue;
        S v_el = constant_like(x[0], 0.0);
        const S psi_sum =
            detail::grid_penetration_sum<S>(lo, hi, cfg.n_star, parent, child, &T, &v_el);
        if (value_of(psi_sum) == 0.0) continue;
        pair_sum = pair_sum + v_el * psi_sum;
      }
      if (value_of(pair_sum) == 0.0) continue;
      total = total + weight * pair_sum * 0.5;  // average over the two states
    }
  }
  return 2.0 * total;  // account for both edge directions
}

// Weighted combination; absent terms are not evaluated at all.
template <class S>
S combined_loss(const LatentLayout& L, std::span<const S> x, const PointCloud* P,
                const GuidanceConfig& cfg, Rng& state_rng) {
  S total = constant_like(x[0], 0.0);
  const int active = cfg.active_terms();
  if (active == 0) return total;
  if (cfg.w_pc > 0.0) {
    if (P == nullptr) throw std::invalid_argument("combined_loss: point-cloud term needs P");
    total = total + (cfg.w_pc / active) * loss_pointcloud(L, x, *P, cfg);
  }
  if (cfg.w_pen > 0.0) total = total + (cfg.w_pen / active) * loss_penetration(L, x, cfg);
  if (cfg.w_mob > 0.0) total = total + (cfg.w_mob / active) * loss_mobility(L, x, cfg, state_rng);
  return total;
}

// Gradient of the combined loss at the projected posterior-mean estimate,
// with respect to the diffusion state x_t. posterior_only treats the noise
// prediction as constant; full_chain adds the VJP through the denoiser.
// The articulation-state substream is derived from (state_seed, t) so the
// value and any finite-difference probe see the same draws.
inline std::vector<double> loss_gradient(std::span<const double> x_t, int t, const Denoiser& den,
                                         const NoiseSchedule& sched, const LatentLayout& L,
                                         const PointCloud* P, std::optional<int> category,
                                         const GuidanceConfig& cfg, std::uint64_t state_seed) {
  const std::size_t D = x_t.size();
  std::vector<double> grad(D, 0.0);
  if (cfg.active_terms() == 0) return grad;
  if (cfg.grad_mode == GradMode::full_chain && !den.supports_input_gradient())
    throw std::invalid_argument("loss_gradient: full_chain needs denoiser input gradients");

  std::vector<double> eps_hat(D);
  den.eps(x_t, t, category, eps_hat);
  const std::vector<double> x0 = estimate_x0(x_t, t, eps_hat, sched);

  ad::Tape tape;
  tape.reserve(1 << 20);
  std::vector<ad::Var> vars;
  vars.reserve(D);
  for (double v : x0) vars.push_back(ad::make_leaf(tape, v));
  project_inplace<ad::Var>(L, std::span<ad::Var>(vars));
  Rng state_rng = Rng::substream(state_seed, static_cast<std::uint64_t>(t));
  const ad::Var loss =
      combined_loss<ad::Var>(L, std::span<const ad::Var>(vars), P, cfg, state_rng);
  if (loss.idx < 0) return grad;
  const auto& adj = tape.backward(loss.idx);

  const double ab = sched.alpha_bar[static_cast<std::size_t>(t)];
  const double inv_sab = 1.0 / std::sqrt(ab);
  if (cfg.grad_mode == GradMode::posterior_only) {
    for (std::size_t i = 0; i < D; ++i) grad[i] = adj[i] * inv_sab;
    return grad;
  }
  // full chain: d x0 / d x_t = (I - sqrt(1 - ab) * d eps / d x_t) / sqrt(ab)
  std::vector<double> g0(adj.begin(), adj.begin() + static_cast<std::ptrdiff_t>(D));
  std::vector<double> jtg(D);
  den.eps_input_vjp(x_t, t, category, g0, jtg);
  const double root1m = std::sqrt(1.0 - ab);
  for (std::size_t i = 0; i < D; ++i) grad[i] = (g0[i] - root1m * jtg[i]) * inv_sab;
  return grad;
}

}  // namespace artigen
