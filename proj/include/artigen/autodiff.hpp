#pragma once

#include <cassert>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

namespace artigen::ad {

// Reverse-mode autodiff on a linear tape. Each node stores at most two
// parents with the local partials already evaluated, so the backward sweep is
// a single reverse loop. Guidance losses build a few hundred thousand nodes
// per evaluation; the tape is reused across evaluations via clear().
class Tape {
 public:
  struct Node {
    std::int32_t a, b;
    double wa, wb;
  };

  std::int32_t leaf(double v) { return push(-1, -1, 0.0, 0.0, v); }

  std::int32_t unary(std::int32_t a, double wa, double v) { return push(a, -1, wa, 0.0, v); }

  std::int32_t binary(std::int32_t a, std::int32_t b, double wa, double wb, double v) {
    return push(a, b, wa, wb, v);
  }

  double value(std::int32_t i) const { return vals_[static_cast<std::size_t>(i)]; }

  std::size_t size() const { return nodes_.size(); }

  void clear() {
    nodes_.clear();
    vals_.clear();
  }

  void reserve(std::size_t n) {
    nodes_.reserve(n);
    vals_.reserve(n);
  }

  // Adjoints of every node w.r.t. the node `root`; valid until the next call.
  const std::vector<double>& backward(std::int32_t root) {
    adj_.assign(nodes_.size(), 0.0);
    adj_[static_cast<std::size_t>(root)] = 1.0;
    for (std::size_t i = nodes_.size(); i-- > 0;) {
      const double g = adj_[i];
      if (g == 0.0) continue;
      const Node& n = nodes_[i];
      if (n.a >= 0) adj_[static_cast<std::size_t>(n.a)] += n.wa * g;
      if (n.b >= 0) adj_[static_cast<std::size_t>(n.b)] += n.wb * g;
    }
    return adj_;
  }

 private:
  std::int32_t push(std::int32_t a, std::int32_t b, double wa, double wb, double v) {
    nodes_.push_back({a, b, wa, wb});
    vals_.push_back(v);
    return static_cast<std::int32_t>(nodes_.size() - 1);
  }

  std::vector<Node> nodes_;
  std::vector<double> vals_;
  std::vector<double> adj_;
};

// Value + tape index. Cheap to copy; arithmetic records nodes on the tape.
struct Var {
  Tape* tape = nullptr;
  std::int32_t idx = -1;
  double v = 0.0;
};

inline Var make_leaf(Tape& t, double v) { return {&t, t.leaf(v), v}; }
inline Var make_const(Tape& t, double v) { return {&t, t.leaf(v), v}; }

inline double value_of(double x) { return x; }
inline double value_of(const Var& x) { return x.v; }

// --- arithmetic -----------------------------------------------------------

inline Var operator+(const Var& a, const Var& b) {
  return {a.tape, a.tape->binary(a.idx, b.idx, 1.0, 1.0, a.v + b.v), a.v + b.v};
}
inline Var operator+(const Var& a, double b) {
  return {a.tape, a.tape->unary(a.idx, 1.0, a.v + b), a.v + b};
}
inline Var operator+(double a, const Var& b) { return b + a; }

inline Var operator-(const Var& a, const Var& b) {
  return {a.tape, a.tape->binary(a.idx, b.idx, 1.0, -1.0, a.v - b.v), a.v - b.v};
}
inline Var operator-(const Var& a, double b) {
  return {a.tape, a.tape->unary(a.idx, 1.0, a.v - b), a.v - b};
}
inline Var operator-(double a, const Var& b) {
  return {b.tape, b.tape->unary(b.idx, -1.0, a - b.v), a - b.v};
}
inline Var operator-(const Var& a) {
  return {a.tape, a.tape->unary(a.idx, -1.0, -a.v), -a.v};
}

inline Var operator*(const Var& a, const Var& b) {
  return {a.tape, a.tape->binary(a.idx, b.idx, b.v, a.v, a.v * b.v), a.v * b.v};
}
inline Var operator*(const Var& a, double b) {
  return {a.tape, a.tape->unary(a.idx, b, a.v * b), a.v * b};
}
inline Var operator*(double a, const Var& b) { return b * a; }

inline Var operator/(const Var& a, const Var& b) {
  const double inv = 1.0 / b.v;
  const double r = a.v * inv;
  return {a.tape, a.tape->binary(a.idx, b.idx, inv, -r * inv, r), r};
}
inline Var operator/(const Var& a, double b) { return a * (1.0 / b); }
inline Var operator/(double a, const Var& b) {
  const double inv = 1.0 / b.v;
  const double r = a * inv;
  return {b.tape, b.tape->unary(b.idx, -r * inv, r), r};
}

inline Var& operator+=(Var& a, const Var& b) { a = a + b; return a; }
inline Var& operator-=(Var& a, const Var& b) { a = a - b; return a; }
inline Var& operator*=(Var& a, const Var& b) { a = a * b; return a; }

// --- comparisons (on values; branching selects the active smooth piece) ----

inline bool operator<(const Var& a, const Var& b) { return a.v < b.v; }
inline bool operator<(const Var& a, double b) { return a.v < b; }
inline bool operator<(double a, const Var& b) { return a < b.v; }
inline bool operator>(const Var& a, const Var& b) { return a.v > b.v; }
inline bool operator>(const Var& a, double b) { return a.v > b; }
inline bool operator>(double a, const Var& b) { return a > b.v; }
inline bool operator<=(const Var& a, const Var& b) { return a.v <= b.v; }
inline bool operator<=(const Var& a, double b) { return a.v <= b; }
inline bool operator>=(const Var& a, const Var& b) { return a.v >= b.v; }
inline bool operator>=(const Var& a, double b) { return a.v >= b; }

// --- elementary functions ---------------------------------------------------

inline Var sqrt(const Var& a) {
  const double r = std::sqrt(a.v);
  return {a.tape, a.tape->unary(a.idx, 0.5 / r, r), r};
}

inline Var exp(const Var& a) {
  const double r = std::exp(a.v);
  return {a.tape, a.tape->unary(a.idx, r, r), r};
}

inline Var log(const Var& a) {
  return {a.tape, a.tape->unary(a.idx, 1.0 / a.v, std::log(a.v)), std::log(a.v)};
}

inline Var tanh(const Var& a) {
  const double r = std::tanh(a.v);
  return {a.tape, a.tape->unary(a.idx, 1.0 - r * r, r), r};
}

inline Var abs(const Var& a) {
  const double w = a.v >= 0.0 ? 1.0 : -1.0;
  return {a.tape, a.tape->unary(a.idx, w, std::fabs(a.v)), std::fabs(a.v)};
}
inline Var fabs(const Var& a) { return abs(a); }

inline Var sin(const Var& a) {
  return {a.tape, a.tape->unary(a.idx, std::cos(a.v), std::sin(a.v)), std::sin(a.v)};
}

inline Var cos(const Var& a) {
  return {a.tape, a.tape->unary(a.idx, -std::sin(a.v), std::cos(a.v)), std::cos(a.v)};
}

// logistic; one tape node
inline Var sigmoid(const Var& a) {
  const double r = 1.0 / (1.0 + std::exp(-a.v));
  return {a.tape, a.tape->unary(a.idx, r * (1.0 - r), r), r};
}
inline double sigmoid(double a) { return 1.0 / (1.0 + std::exp(-a)); }

// min/max pick a branch by value; derivative follows the winner
inline Var min(const Var& a, const Var& b) { return a.v <= b.v ? a : b; }
inline Var max(const Var& a, const Var& b) { return a.v >= b.v ? a : b; }
inline Var min(const Var& a, double b) { return a.v <= b ? a : make_const(*a.tape, b); }
inline Var min(double a, const Var& b) { return min(b, a); }
inline Var max(const Var& a, double b) { return a.v >= b ? a : make_const(*a.tape, b); }
inline Var max(double a, const Var& b) { return max(b, a); }

}  // namespace artigen::ad
