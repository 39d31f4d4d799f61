#pragma once

#include "artigen/autodiff.hpp"

namespace artigen {

// Pull the overload sets into the library namespace so templated code can use
// unqualified calls for both double and ad::Var.
using ad::sigmoid;
using ad::value_of;

inline double constant_like(double /*ref*/, double c) { return c; }
inline ad::Var constant_like(const ad::Var& ref, double c) { return ad::make_const(*ref.tape, c); }

}  // namespace artigen
