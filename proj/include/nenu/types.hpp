#pragma once

#include <complex>
#include <cstdint>
#include <vector>

namespace nenu {

using cd = std::complex<double>;
using cvec = std::vector<cd>;
using dvec = std::vector<double>;

inline constexpr double kPi = 3.141592653589793238462643383279502884;

} // namespace nenu
