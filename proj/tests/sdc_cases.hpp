#pragma once

// Randomized displaced-convolution instances shared by the unit and acceptance tests.

#include <cmath>
#include <vector>

#include "mvr/random.hpp"
#include "mvr/sdc_motion.hpp"
#include "oracles/finite_difference.hpp"

namespace sdc_cases {

inline mvr::TensorD random_simplex(int taps, int h, int w, mvr::Rng& rng) {
  mvr::TensorD k(taps, h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double s = 0;
      for (int t = 0; t < taps; ++t) s += k(t, y, x) = rng.uniform(0.05, 1.0);
      for (int t = 0; t < taps; ++t) k(t, y, x) /= s;
    }
  }
  return k;
}

// Flow whose fractional part stays at least `margin` away from integers.
inline mvr::TensorD random_flow(int h, int w, double range, double margin, mvr::Rng& rng) {
  mvr::TensorD f(2, h, w);
  for (double& v : f.values()) {
    double frac;
    do {
      v = rng.uniform(-range, range);
      frac = v - std::floor(v);
    } while (frac < margin || frac > 1 - margin);
  }
  return f;
}

struct VjpCase {
  mvr::TensorD ref, flow, upstream;
  mvr::KernelFieldD kernels;
};

inline VjpCase random_vjp_case(int size, int taps, mvr::Rng& rng) {
  VjpCase c;
  c.ref = mvr::TensorD(3, size, size);
  c.upstream = mvr::TensorD(3, size, size);
  for (double& v : c.ref.values()) v = rng.uniform();
  for (double& v : c.upstream.values()) v = rng.normal();
  c.flow = random_flow(size, size, 3.0, 0.01, rng);
  c.kernels = {random_simplex(taps, size, size, rng), random_simplex(taps, size, size, rng)};
  return c;
}

inline double weighted_warp(const VjpCase& c) {
  const auto out = mvr::sdc_warp(c.ref, c.flow, c.kernels, false);
  double s = 0;
  for (std::size_t i = 0; i < out.size(); ++i) s += out.values()[i] * c.upstream.values()[i];
  return s;
}

struct VjpErrors {
  double flow, kernels, ref;
};

// Relative errors of the analytic gradients against central differences with step h.
inline VjpErrors vjp_errors(const VjpCase& c, double h) {
  const auto g = mvr::sdc_warp_vjp(c.ref, c.flow, c.kernels, c.upstream);
  auto check = [&](mvr::TensorD VjpCase::*field, const mvr::TensorD& analytic) {
    const auto& base = c.*field;
    std::vector<double> params(base.values().begin(), base.values().end());
    auto numeric = oracle::central_differences(
        params,
        [&](const std::vector<double>& p) {
          VjpCase probe = c;
          std::copy(p.begin(), p.end(), (probe.*field).values().begin());
          return weighted_warp(probe);
        },
        h);
    return oracle::relative_error(
        std::vector<double>(analytic.values().begin(), analytic.values().end()), numeric);
  };
  auto check_kernels = [&]() {
    std::vector<double> params(c.kernels.u.values().begin(), c.kernels.u.values().end());
    params.insert(params.end(), c.kernels.v.values().begin(), c.kernels.v.values().end());
    const std::size_t n = c.kernels.u.size();
    auto numeric = oracle::central_differences(
        params,
        [&](const std::vector<double>& p) {
          VjpCase probe = c;
          std::copy(p.begin(), p.begin() + n, probe.kernels.u.values().begin());
          std::copy(p.begin() + n, p.end(), probe.kernels.v.values().begin());
          return weighted_warp(probe);
        },
        h);
    std::vector<double> analytic(g.kernels.u.values().begin(), g.kernels.u.values().end());
    analytic.insert(analytic.end(), g.kernels.v.values().begin(), g.kernels.v.values().end());
    return oracle::relative_error(analytic, numeric);
  };
  return {check(&VjpCase::flow, g.flow), check_kernels(), check(&VjpCase::ref, g.ref)};
}

}  // namespace sdc_cases
