#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "artigen/autodiff.hpp"

using namespace artigen;

namespace {

// generic scalar function exercising most primitives; instantiated for both
// double and the tape scalar
template <class S>
S probe_fn(const S& x, const S& y, const S& z) {
  using std::abs;
  using std::exp;
  using std::log;
  using std::max;
  using std::min;
  using std::sqrt;
  using std::tanh;
  S a = x * y + 2.0 * z - 0.5;
  S b = sqrt(x * x + y * y + 1e-3);
  S c = exp(-0.3 * a) + log(b + 2.0);
  S d = tanh(c) * ad::sigmoid(S(y));
  S e = min(a, max(b, c * 0.7)) + abs(z - 0.2);
  return d * e + c / (b + 1.5);
}

}  // namespace

TEST_CASE("tape gradients match central finite differences") {
  const double h = 1e-6;
  const double pts[][3] = {{0.3, -0.7, 1.2}, {1.5, 0.4, -0.9}, {-0.2, 2.0, 0.6}, {0.9, 0.9, 0.9}};
  for (const auto& p : pts) {
    ad::Tape tape;
    ad::Var x = ad::make_leaf(tape, p[0]);
    ad::Var y = ad::make_leaf(tape, p[1]);
    ad::Var z = ad::make_leaf(tape, p[2]);
    ad::Var f = probe_fn(x, y, z);
    REQUIRE(f.v == Catch::Approx(probe_fn(p[0], p[1], p[2])));
    const auto& adj = tape.backward(f.idx);
    double in[3] = {p[0], p[1], p[2]};
    for (int k = 0; k < 3; ++k) {
      double lo[3] = {in[0], in[1], in[2]}, hi[3] = {in[0], in[1], in[2]};
      lo[k] -= h;
      hi[k] += h;
      const double fd =
          (probe_fn(hi[0], hi[1], hi[2]) - probe_fn(lo[0], lo[1], lo[2])) / (2.0 * h);
      REQUIRE(adj[static_cast<std::size_t>(k)] == Catch::Approx(fd).margin(1e-7).epsilon(1e-6));
    }
  }
}

TEST_CASE("branch primitives follow the active piece") {
  ad::Tape tape;
  ad::Var x = ad::make_leaf(tape, 2.0);
  ad::Var y = ad::make_leaf(tape, -3.0);

  ad::Var mn = ad::min(x, y);
  REQUIRE(mn.v == -3.0);
  const auto& adj1 = tape.backward(mn.idx);
  REQUIRE(adj1[0] == 0.0);
  REQUIRE(adj1[1] == 1.0);

  ad::Var ab = ad::abs(y);
  REQUIRE(ab.v == 3.0);
  const auto& adj2 = tape.backward(ab.idx);
  REQUIRE(adj2[1] == -1.0);

  ad::Var cl = ad::min(ad::max(x, -1.0), 1.0);  // clamp(2, -1, 1) = 1, constant branch
  REQUIRE(cl.v == 1.0);
  const auto& adj3 = tape.backward(cl.idx);
  REQUIRE(adj3[0] == 0.0);
}

TEST_CASE("tape reuse via clear") {
  ad::Tape tape;
  for (int round = 0; round < 3; ++round) {
    tape.clear();
    ad::Var x = ad::make_leaf(tape, 1.0 + round);
    ad::Var f = x * x;
    const auto& adj = tape.backward(f.idx);
    REQUIRE(adj[0] == Catch::Approx(2.0 * (1.0 + round)));
  }
}

TEST_CASE("fan-out accumulates adjoints") {
  ad::Tape tape;
  ad::Var x = ad::make_leaf(tape, 0.7);
  ad::Var f = x * x * x;
  const auto& adj = tape.backward(f.idx);
  REQUIRE(adj[0] == Catch::Approx(3.0 * 0.7 * 0.7));
}
