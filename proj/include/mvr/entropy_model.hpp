#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "mvr/tensor.hpp"

namespace mvr {

struct AlphabetBounds {
  int min = -255;
  int max = 255;

  int size() const { return max - min + 1; }
  bool contains(int v) const { return v >= min && v <= max; }
  bool operator==(const AlphabetBounds&) const = default;
};

// Integer-valued quantized latent (the coded payload) with its alphabet.
struct LatentGrid {
  Shape3 shape;
  std::vector<std::int32_t> values;
  AlphabetBounds bounds;

  LatentGrid() = default;
  LatentGrid(Shape3 shape, AlphabetBounds bounds);

  std::int32_t& at(int c, int y, int x) {
    return values[(static_cast<std::size_t>(c) * shape.height + y) * shape.width + x];
  }
  std::int32_t at(int c, int y, int x) const {
    return values[(static_cast<std::size_t>(c) * shape.height + y) * shape.width + x];
  }
  // Throws kDomain when a value lies outside the bounds.
  void validate() const;
  Tensor to_tensor() const;

  bool operator==(const LatentGrid&) const = default;
};

// Round half away from zero, then clamp into `bounds`.
LatentGrid quantize_round(const Tensor& x, AlphabetBounds bounds = {});

// Softmax-weighted convex combination of cluster centers, weights ~ exp(-|x - c| / T).
struct SoftQuantizer {
  std::vector<double> centers;
  double temperature = 1.0;

  static constexpr int kDefaultClusters = 200;
  // `count` centers spaced by `step` starting at `first`.
  static SoftQuantizer uniform(int count = kDefaultClusters, double first = -100.0,
                               double step = 1.0, double temperature = 1.0);
  void validate() const;
};

double soft_quantize(double x, const SoftQuantizer& q);
Tensor soft_quantize(const Tensor& x, const SoftQuantizer& q);

// Mass of integer k under Laplace(mu, sigma) convolved with a unit uniform.
double laplace_pmf(int k, double mu, double sigma);
// -log2 laplace_pmf(k, mu, sigma) evaluated in the log domain, finite for any k.
double laplace_bits(int k, double mu, double sigma);

// Non-parametric factorized density for the hyper-latent: one monotone piecewise-linear
// CDF per channel.
struct FactorizedPrior {
  struct Channel {
    std::vector<float> knots;  // strictly increasing
    std::vector<float> cdf;    // nondecreasing, cdf.front() == 0, cdf.back() == 1
    bool operator==(const Channel&) const = default;
  };
  std::vector<Channel> channels;

  static constexpr int kDefaultKnots = 33;
  static constexpr float kDefaultRange = 16.0f;

  // 33 knots over [-16, 16] per channel: Laplace-shaped CDFs of random scale mixed with a
  // small uniform component so every knot interval carries mass.
  static FactorizedPrior seeded_default(int channels, std::uint64_t seed);

  double cdf(int channel, double x) const;
  // Integer symbols with nonzero mass in every channel.
  AlphabetBounds support() const;
  void validate() const;

  bool operator==(const FactorizedPrior&) const = default;
};

double factorized_pmf(int k, const FactorizedPrior& prior, int channel);

// Per-element mean and scale of the latent's Laplacian model.
struct LaplacianField {
  Tensor mu;
  Tensor sigma;
};

using PmfProvider = std::function<double(std::size_t index, std::int32_t value)>;

// Sum of -log2 p over all symbols; throws kRate naming the first zero-probability index.
double rate_bits(const LatentGrid& grid, const PmfProvider& pmf);
double laplace_rate_bits(const LatentGrid& y, const LaplacianField& field);
double factorized_rate_bits(const LatentGrid& z, const FactorizedPrior& prior);

}  // namespace mvr
