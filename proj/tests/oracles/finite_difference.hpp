#pragma once

// Central differences of a scalar function with respect to selected parameters.

#include <cmath>
#include <functional>
#include <vector>

namespace oracle {

// f is evaluated with params[i] perturbed by +-h; returns d f / d params[i] for each i.
inline std::vector<double> central_differences(std::vector<double> params,
                                               const std::function<double(const std::vector<double>&)>& f,
                                               double h) {
  std::vector<double> grad(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double keep = params[i];
    params[i] = keep + h;
    const double up = f(params);
    params[i] = keep - h;
    const double down = f(params);
    params[i] = keep;
    grad[i] = (up - down) / (2 * h);
  }
  return grad;
}

// ||a - b|| / max(||b||, floor)
inline double relative_error(const std::vector<double>& a, const std::vector<double>& b,
                             double floor = 1e-8) {
  double d = 0, n = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    d += (a[i] - b[i]) * (a[i] - b[i]);
    n += b[i] * b[i];
  }
  return std::sqrt(d) / std::max(std::sqrt(n), floor);
}

}  // namespace oracle
