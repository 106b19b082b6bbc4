#include "mvr/rate_control.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mvr/error.hpp"

namespace mvr {
namespace {

constexpr std::uint64_t kMaxChoiceCells = std::uint64_t{1} << 31;

struct Cell {
  double ms = 0.0;
  std::uint64_t rate = 0;
};

bool better(const Cell& a, const Cell& b) {
  return a.ms > b.ms || (a.ms == b.ms && a.rate < b.rate);
}

}  // namespace

AllocationPlan allocate(std::span<const std::vector<ConfigPoint>> tables, std::uint64_t budget,
                        std::uint64_t granularity) {
  require(!tables.empty(), ErrorKind::kDomain, "no frames to allocate");
  require(granularity >= 1, ErrorKind::kDomain, "bucket granularity must be positive");
  const std::size_t n = tables.size();

  // Per frame: configs in (q, position) order so the first optimum found has the smaller q.
  std::vector<std::vector<int>> order(n);
  std::vector<std::vector<std::uint64_t>> cost(n);
  std::vector<std::uint64_t> min_cost(n);
  std::uint64_t min_rate_sum = 0;
  std::uint64_t base = 0;
  std::uint64_t spread = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& t = tables[i];
    require(!t.empty(), ErrorKind::kDomain, "frame " + std::to_string(i) + " has no configs");
    require(t.size() <= 255, ErrorKind::kCapacity, "at most 255 configs per frame");
    order[i].resize(t.size());
    std::iota(order[i].begin(), order[i].end(), 0);
    std::stable_sort(order[i].begin(), order[i].end(),
                     [&](int a, int b) { return t[a].q < t[b].q; });
    std::uint64_t lo = UINT64_MAX;
    std::uint64_t hi = 0;
    std::uint64_t lo_rate = UINT64_MAX;
    for (const auto& p : t) {
      require(p.msssim >= 0.0 && p.msssim <= 1.0, ErrorKind::kDomain,
              "frame " + std::to_string(i) + " has msssim outside [0, 1]");
      const std::uint64_t c = p.rate / granularity + (p.rate % granularity != 0);
      cost[i].push_back(c);
      lo = std::min(lo, c);
      hi = std::max(hi, c);
      lo_rate = std::min(lo_rate, p.rate);
    }
    min_cost[i] = lo;
    base += lo;
    spread += hi - lo;
    min_rate_sum += lo_rate;
  }
  require(min_rate_sum <= budget, ErrorKind::kInfeasible,
          "budget " + std::to_string(budget) + " bytes is below the minimum total rate " +
              std::to_string(min_rate_sum) + " bytes");
  const std::uint64_t buckets = budget / granularity;
  require(base <= buckets, ErrorKind::kInfeasible,
          "budget " + std::to_string(budget) + " bytes cannot hold the minimum total rate " +
              std::to_string(min_rate_sum) + " bytes once rates are rounded up to " +
              std::to_string(granularity) + "-byte buckets");
  const std::uint64_t capacity = std::min(buckets - base, spread);
  require((capacity + 1) * n <= kMaxChoiceCells, ErrorKind::kCapacity,
          "allocation table too large; use a coarser granularity");
  const std::size_t width = static_cast<std::size_t>(capacity) + 1;

  // Suffix DP over extra capacity above each frame's cheapest config.
  std::vector<std::uint8_t> pick(n * width);
  std::vector<Cell> next(width);
  std::vector<Cell> cur(width);
  for (std::size_t i = n; i-- > 0;) {
    const auto& t = tables[i];
    for (std::size_t c = 0; c < width; ++c) {
      Cell best{-1.0, 0};
      int best_j = -1;
      for (int j : order[i]) {
        const std::uint64_t extra = cost[i][j] - min_cost[i];
        if (extra > c) continue;
        const Cell& rest = next[c - extra];
        const Cell cand{t[j].msssim + rest.ms, t[j].rate + rest.rate};
        if (best_j < 0 || better(cand, best)) {
          best = cand;
          best_j = j;
        }
      }
      cur[c] = best;
      pick[i * width + c] = static_cast<std::uint8_t>(best_j);
    }
    std::swap(cur, next);
  }

  AllocationPlan plan;
  std::uint64_t c = capacity;
  for (std::size_t i = 0; i < n; ++i) {
    const int j = pick[i * width + c];
    plan.choice.push_back(j);
    plan.q.push_back(tables[i][j].q);
    plan.total_rate += tables[i][j].rate;
    plan.total_msssim += tables[i][j].msssim;
    c -= cost[i][j] - min_cost[i];
  }
  return plan;
}

double evaluate_loss(double msssim, double rate_y_bits, double rate_z_bits, double lambda) {
  require(lambda > 0.0 && std::isfinite(lambda), ErrorKind::kDomain,
          "lambda must be positive, got " + std::to_string(lambda));
  return lambda * (1.0 - msssim) + rate_y_bits + rate_z_bits;
}

}  // namespace mvr
