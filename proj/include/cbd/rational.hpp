#pragma once

#include <boost/multiprecision/cpp_int.hpp>

namespace cbd {

/// Exact rational scalar for the simplex.  Doubles convert losslessly (every
/// finite double is a binary rational), so exact mode reproduces the floating
/// input bit for bit and then pivots without rounding.
using rational = boost::multiprecision::cpp_rational;

inline rational to_rational(double x) { return rational(x); }

inline double to_double(const rational& r) { return r.convert_to<double>(); }

}  // namespace cbd
