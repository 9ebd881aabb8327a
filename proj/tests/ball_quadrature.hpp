#pragma once

#include <cmath>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

namespace roa::testing {

// Integral of prod x_i^k_i over the ball of squared radius r2 by nested 1-D
// quadrature. The innermost coordinate is a polynomial on an interval and is
// exact under 15-point Gauss-Legendre; outer coordinates carry square-root
// endpoint behaviour and use tanh-sinh.
inline double ball_quadrature(const std::vector<int>& k, double r2) {
  namespace q = boost::math::quadrature;
  const std::size_t n = k.size();
  auto ipow = [](double x, int e) {
    double v = 1.0;
    for (int i = 0; i < e; ++i) v *= x;
    return v;
  };
  // level i integrates x_i over [-sqrt(rem), sqrt(rem)]
  auto level = [&](auto&& self, std::size_t i, double rem) -> double {
    if (rem <= 0.0) return 0.0;
    const double a = std::sqrt(rem);
    if (i + 1 == n) {
      return q::gauss<double, 15>::integrate([&](double x) { return ipow(x, k[i]); }, -a, a);
    }
    q::tanh_sinh<double> ts;
    return ts.integrate([&](double x) { return ipow(x, k[i]) * self(self, i + 1, rem - x * x); }, -a, a, 1e-13);
  };
  return level(level, 0, r2);
}

}  // namespace roa::testing
