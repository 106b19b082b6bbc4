#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace mvr {

inline constexpr int kQualityLevels = 5;
inline constexpr std::uint64_t kDefaultGranularity = 1024;

// Lagrange multiplier associated with quality index q.
inline double lambda_for_quality(int q) { return 20.0 + 2.0 * q; }

struct ConfigPoint {
  int q = 0;
  std::uint64_t rate = 0;  // bytes
  double msssim = 0.0;
};

struct AllocationPlan {
  std::vector<int> choice;  // index into each frame's table
  std::vector<int> q;
  std::uint64_t total_rate = 0;
  double total_msssim = 0.0;
};

// Multiple-choice knapsack: one config per frame, Σ rate <= budget, maximizing Σ msssim.
// Rates are rounded up to multiples of `granularity` for the search, so the true total never
// exceeds the budget. Ties go to the lower true total rate, then the lexicographically smaller
// q vector. Throws kInfeasible when even the cheapest configs overshoot.
AllocationPlan allocate(std::span<const std::vector<ConfigPoint>> tables, std::uint64_t budget,
                        std::uint64_t granularity = kDefaultGranularity);

// λ·(1 − msssim) + R_y + R_z; throws kDomain unless λ > 0.
double evaluate_loss(double msssim, double rate_y_bits, double rate_z_bits, double lambda);

}  // namespace mvr
