#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "artigen/autodiff.hpp"
#include "artigen/kinematics.hpp"
#include "artigen/rng.hpp"

using namespace artigen;

namespace {

struct Screw {
  Vec3d l, m;
  double gamma, d;
};

Screw random_screw(Rng& rng) {
  Screw s;
  Vec3d l{rng.normal(), rng.normal(), rng.normal()};
  double n = norm(l);
  while (n < 1e-6) {
    l = {rng.normal(), rng.normal(), rng.normal()};
    n = norm(l);
  }
  s.l = l * (1.0 / n);
  const Vec3d p0{rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2)};
  s.m = cross(p0, s.l);
  s.gamma = rng.uniform(-3.0, 3.0);
  s.d = rng.uniform(-1.0, 1.0);
  return s;
}

double max_abs_diff(const RigidTransformd& a, const RigidTransformd& b) {
  double m = 0.0;
  for (int i = 0; i < 9; ++i) m = std::max(m, std::fabs(a.R.m[i] - b.R.m[i]));
  for (int k = 0; k < 3; ++k) m = std::max(m, std::fabs(a.t[k] - b.t[k]));
  return m;
}

}  // namespace

TEST_CASE("screw_transform: hand cases") {
  // zero screw
  RigidTransformd T0 = screw_transform<double>({0, 0, 1}, {0.3, -0.4, 0}, 0.0, 0.0);
  REQUIRE(max_abs_diff(T0, identity_transform()) < 1e-15);

  // prismatic: pure translation along the axis
  RigidTransformd Tp = screw_transform<double>({0, 0, 1}, {0, 0, 0}, 0.0, 2.0);
  REQUIRE(Tp.t.x == 0.0);
  REQUIRE(Tp.t.y == 0.0);
  REQUIRE(Tp.t.z == 2.0);
  REQUIRE(max_abs_diff({Tp.R, {0, 0, 0}}, identity_transform()) < 1e-15);

  // half-turn about z maps (1,0,0) to (-1,0,0)
  RigidTransformd Tr = screw_transform<double>({0, 0, 1}, {0, 0, 0}, M_PI, 0.0);
  const Vec3d p = Tr.apply({1, 0, 0});
  REQUIRE(std::fabs(p.x + 1.0) < 1e-9);
  REQUIRE(std::fabs(p.y) < 1e-9);
  REQUIRE(std::fabs(p.z) < 1e-9);
}

TEST_CASE("screw_transform: rejects invalid Pluecker input") {
  REQUIRE_THROWS_AS(screw_transform<double>({0, 0, 2}, {0, 0, 0}, 0.1, 0.0),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(screw_transform<double>({0, 0, 1}, {0, 0, 1}, 0.1, 0.0),
                    std::invalid_argument);
}

TEST_CASE("screw properties: rigidity, inverse, composition, axis fixed points") {
  Rng rng(2024);
  for (int trial = 0; trial < 1000; ++trial) {
    const Screw s = random_screw(rng);
    const RigidTransformd T = screw_transform<double>(s.l, s.m, s.gamma, s.d);

    // exact rigid transform
    const Mat3d RtR = T.R.transposed() * T.R;
    REQUIRE(max_abs_diff({RtR, {0, 0, 0}}, identity_transform()) < 1e-12);

    // inverse screw
    const RigidTransformd Tinv = screw_transform<double>(s.l, s.m, -s.gamma, -s.d);
    REQUIRE(max_abs_diff(T * Tinv, identity_transform()) < 1e-10);

    // same-axis composition
    const double g2 = rng.uniform(-2, 2), d2 = rng.uniform(-1, 1);
    const RigidTransformd Ta = screw_transform<double>(s.l, s.m, s.gamma + g2, s.d + d2);
    const RigidTransformd Tb = screw_transform<double>(s.l, s.m, s.gamma, s.d) *
                               screw_transform<double>(s.l, s.m, g2, d2);
    REQUIRE(max_abs_diff(Ta, Tb) < 1e-10);

    // pure rotations fix the axis
    const RigidTransformd Trot = screw_transform<double>(s.l, s.m, s.gamma, 0.0);
    const Vec3d p0 = cross(s.l, s.m);
    const Vec3d on_axis = p0 + s.l * rng.uniform(-2, 2);
    const Vec3d mapped = Trot.apply(on_axis);
    REQUIRE(norm(mapped - on_axis) < 1e-10);
  }
}

TEST_CASE("relative_pose: hand cases") {
  JointEdge e;
  e.axis_dir = {1, 0, 0};
  e.axis_moment = {0, 0, 0};

  PartNode a, b;
  a.translation = {0, 0, 0};
  b.translation = {0, 0, 0};
  RigidTransformd T = relative_pose(e, a, b, 0.0, 0.0);
  REQUIRE(max_abs_diff(T, identity_transform()) < 1e-15);

  b.translation = {1, 0, 0};
  T = relative_pose(e, a, b, 0.0, 0.0);
  REQUIRE(T.t.x == Catch::Approx(1.0));
  REQUIRE(T.t.y == 0.0);
  REQUIRE(T.t.z == 0.0);

  b.translation = {0, 0, 0};
  T = relative_pose(e, a, b, 0.0, 0.3);
  REQUIRE(T.t.x == Catch::Approx(0.3));
  REQUIRE(std::fabs(T.t.y) < 1e-15);
  REQUIRE(std::fabs(T.t.z) < 1e-15);
}

TEST_CASE("sample_states: ranges, lockstep spacing, degenerate limits") {
  Rng rng(5);
  JointEdge e;
  e.gamma_min = 0.0;
  e.gamma_max = 4.0;
  e.d_min = -1.0;
  e.d_max = 1.0;

  auto eq = sample_states(e, 5, StateSampling::equally_spaced, rng);
  REQUIRE(eq.size() == 5);
  for (int i = 0; i < 5; ++i) {
    REQUIRE(eq[static_cast<std::size_t>(i)].first == Catch::Approx(static_cast<double>(i)));
    REQUIRE(eq[static_cast<std::size_t>(i)].second == Catch::Approx(-1.0 + 0.5 * i));
  }

  auto rnd = sample_states(e, 200, StateSampling::uniform_random, rng);
  for (const auto& [g, d] : rnd) {
    REQUIRE(g >= e.gamma_min);
    REQUIRE(g <= e.gamma_max);
    REQUIRE(d >= e.d_min);
    REQUIRE(d <= e.d_max);
  }

  JointEdge z;
  z.gamma_min = z.gamma_max = 0.7;
  z.d_min = z.d_max = 0.1;
  for (auto mode : {StateSampling::uniform_random, StateSampling::equally_spaced}) {
    auto st = sample_states(z, 3, mode, rng);
    for (const auto& [g, d] : st) {
      REQUIRE(g == Catch::Approx(0.7));
      REQUIRE(d == Catch::Approx(0.1));
    }
  }

  REQUIRE_THROWS_AS(sample_states(e, 0, StateSampling::uniform_random, rng),
                    std::invalid_argument);
}

TEST_CASE("screw-transformed points: tape gradient matches finite differences") {
  Rng rng(77);
  const double h = 1e-6;
  int done = 0;
  for (int trial = 0; trial < 30 && done < 20; ++trial) {
    // pack: l(3 raw, normalized inside), p0(3), gamma, d, t_parent(3), t_child(3), point xy
    std::vector<double> in(16);
    for (auto& v : in) v = rng.uniform(-1.0, 1.0);
    if (std::fabs(in[0]) + std::fabs(in[1]) + std::fabs(in[2]) < 0.3) continue;
    ++done;

    auto eval = [](const std::vector<double>& w, int coord) {
      Vec3d lr{w[0], w[1], w[2]};
      const Vec3d l = lr * (1.0 / norm(lr));
      const Vec3d p0{w[3], w[4], w[5]};
      const Vec3d m = cross(p0, l);
      const RigidTransformd T =
          relative_pose<double>(l, m, w[6], w[7], {w[8], w[9], w[10]}, {w[11], w[12], w[13]});
      const Vec3d out = T.apply({w[14], w[15], 0.25});
      return out[coord];
    };

    ad::Tape tape;
    std::vector<ad::Var> v;
    for (double w : in) v.push_back(ad::make_leaf(tape, w));
    Vec3<ad::Var> lr{v[0], v[1], v[2]};
    ad::Var invn = 1.0 / norm(lr);
    Vec3<ad::Var> l{lr.x * invn, lr.y * invn, lr.z * invn};
    Vec3<ad::Var> p0{v[3], v[4], v[5]};
    Vec3<ad::Var> m = cross(p0, l);
    RigidTransform<ad::Var> T = relative_pose<ad::Var>(l, m, v[6], v[7], {v[8], v[9], v[10]},
                                                       {v[11], v[12], v[13]});
    Vec3<ad::Var> out = T.apply({v[14], v[15], ad::make_const(tape, 0.25)});

    for (int coord = 0; coord < 3; ++coord) {
      REQUIRE(out[coord].v == Catch::Approx(eval(in, coord)).margin(1e-12));
      const auto& adj = tape.backward(out[coord].idx);
      for (std::size_t k = 0; k < in.size(); ++k) {
        auto hi = in, lo = in;
        hi[k] += h;
        lo[k] -= h;
        const double fd = (eval(hi, coord) - eval(lo, coord)) / (2.0 * h);
        const double denom = std::max({std::fabs(fd), std::fabs(adj[k]), 1e-4});
        REQUIRE(std::fabs(adj[k] - fd) / denom < 1e-4);
      }
    }
  }
  REQUIRE(done == 20);
}
