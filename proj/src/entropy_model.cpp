#include "mvr/entropy_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "mvr/random.hpp"

namespace mvr {

LatentGrid::LatentGrid(Shape3 s, AlphabetBounds b) : shape(s), values(s.size(), 0), bounds(b) {
  require(b.min <= b.max, ErrorKind::kDomain, "empty alphabet");
  if (!b.contains(0)) std::fill(values.begin(), values.end(), b.min);
}

void LatentGrid::validate() const {
  require(values.size() == shape.size(), ErrorKind::kShape,
          "latent value count does not match " + to_string(shape));
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!bounds.contains(values[i])) {
      fail(ErrorKind::kDomain, "latent value " + std::to_string(values[i]) + " at index " +
                                   std::to_string(i) + " outside [" +
                                   std::to_string(bounds.min) + ", " +
                                   std::to_string(bounds.max) + "]");
    }
  }
}

Tensor LatentGrid::to_tensor() const {
  Tensor t(shape);
  auto dst = t.values();
  for (std::size_t i = 0; i < values.size(); ++i) dst[i] = static_cast<float>(values[i]);
  return t;
}

LatentGrid quantize_round(const Tensor& x, AlphabetBounds bounds) {
  LatentGrid g(x.shape(), bounds);
  auto src = x.values();
  for (std::size_t i = 0; i < src.size(); ++i) {
    const double r = std::round(static_cast<double>(src[i]));
    const double c = std::clamp(r, static_cast<double>(bounds.min), static_cast<double>(bounds.max));
    g.values[i] = static_cast<std::int32_t>(c);
  }
  return g;
}

SoftQuantizer SoftQuantizer::uniform(int count, double first, double step, double temperature) {
  SoftQuantizer q;
  q.centers.resize(count);
  for (int i = 0; i < count; ++i) q.centers[i] = first + step * i;
  q.temperature = temperature;
  q.validate();
  return q;
}

void SoftQuantizer::validate() const {
  require(!centers.empty(), ErrorKind::kDomain, "soft quantizer needs at least one center");
  require(temperature > 0.0 && std::isfinite(temperature), ErrorKind::kDomain,
          "soft quantizer temperature must be positive");
  for (std::size_t i = 1; i < centers.size(); ++i) {
    require(centers[i] > centers[i - 1], ErrorKind::kDomain,
            "soft quantizer centers must be strictly increasing");
  }
}

double soft_quantize(double x, const SoftQuantizer& q) {
  double nearest = std::numeric_limits<double>::infinity();
  for (double c : q.centers) nearest = std::min(nearest, std::abs(x - c));
  double num = 0.0;
  double den = 0.0;
  for (double c : q.centers) {
    const double w = std::exp(-(std::abs(x - c) - nearest) / q.temperature);
    num += w * c;
    den += w;
  }
  return std::clamp(num / den, q.centers.front(), q.centers.back());
}

Tensor soft_quantize(const Tensor& x, const SoftQuantizer& q) {
  q.validate();
  Tensor out(x.shape());
  auto src = x.values();
  auto dst = out.values();
  for (std::size_t i = 0; i < src.size(); ++i) {
    dst[i] = static_cast<float>(soft_quantize(static_cast<double>(src[i]), q));
  }
  return out;
}

namespace {

void check_scale(double sigma) {
  if (!(sigma > 0.0 && std::isfinite(sigma))) {
    fail(ErrorKind::kDomain, "Laplace scale must be positive and finite, got " +
                                 std::to_string(sigma));
  }
}

}  // namespace

// Three cases keep full relative accuracy: the unit cell lies entirely below the mean,
// entirely above it, or straddles it. The tail forms are exactly mirror images, so the pmf is
// exactly symmetric about an integer mean.
double laplace_pmf(int k, double mu, double sigma) {
  check_scale(sigma);
  const double upper = static_cast<double>(k) + 0.5 - mu;
  const double lower = static_cast<double>(k) - 0.5 - mu;
  if (upper <= 0.0) return 0.5 * std::exp(upper / sigma) * -std::expm1(-1.0 / sigma);
  if (lower >= 0.0) return 0.5 * std::exp(-lower / sigma) * -std::expm1(-1.0 / sigma);
  return -0.5 * std::expm1(lower / sigma) - 0.5 * std::expm1(-upper / sigma);
}

double laplace_bits(int k, double mu, double sigma) {
  check_scale(sigma);
  const double upper = static_cast<double>(k) + 0.5 - mu;
  const double lower = static_cast<double>(k) - 0.5 - mu;
  const double log_cell = std::log(-std::expm1(-1.0 / sigma));
  double ln_p = 0.0;
  if (upper <= 0.0) {
    ln_p = -std::numbers::ln2 + upper / sigma + log_cell;
  } else if (lower >= 0.0) {
    ln_p = -std::numbers::ln2 - lower / sigma + log_cell;
  } else {
    ln_p = std::log(-0.5 * std::expm1(lower / sigma) - 0.5 * std::expm1(-upper / sigma));
  }
  return -ln_p / std::numbers::ln2;
}

FactorizedPrior FactorizedPrior::seeded_default(int channels, std::uint64_t seed) {
  require(channels > 0, ErrorKind::kDomain, "prior needs at least one channel");
  Rng rng(seed);
  FactorizedPrior prior;
  prior.channels.resize(channels);
  constexpr double kUniformMix = 0.01;
  for (auto& ch : prior.channels) {
    const double scale = rng.uniform(0.5, 3.0);
    const double loc = rng.uniform(-0.5, 0.5);
    auto mixed = [&](double x) {
      const double lap = x < loc ? 0.5 * std::exp((x - loc) / scale)
                                 : 1.0 - 0.5 * std::exp(-(x - loc) / scale);
      return (1.0 - kUniformMix) * lap +
             kUniformMix * (x + kDefaultRange) / (2.0 * kDefaultRange);
    };
    const double lo = mixed(-kDefaultRange);
    const double hi = mixed(kDefaultRange);
    ch.knots.resize(kDefaultKnots);
    ch.cdf.resize(kDefaultKnots);
    for (int i = 0; i < kDefaultKnots; ++i) {
      const double x = -kDefaultRange + 2.0 * kDefaultRange * i / (kDefaultKnots - 1);
      ch.knots[i] = static_cast<float>(x);
      ch.cdf[i] = static_cast<float>((mixed(x) - lo) / (hi - lo));
    }
    ch.cdf.front() = 0.0f;
    ch.cdf.back() = 1.0f;
  }
  prior.validate();
  return prior;
}

void FactorizedPrior::validate() const {
  require(!channels.empty(), ErrorKind::kFormat, "prior has no channels");
  for (std::size_t c = 0; c < channels.size(); ++c) {
    const auto& ch = channels[c];
    const std::string where = "prior channel " + std::to_string(c);
    require(ch.knots.size() >= 2 && ch.knots.size() == ch.cdf.size(), ErrorKind::kFormat,
            where + " needs matching knot and value arrays of length >= 2");
    require(ch.cdf.front() == 0.0f && ch.cdf.back() == 1.0f, ErrorKind::kFormat,
            where + " CDF must run from exactly 0 to exactly 1");
    for (std::size_t i = 1; i < ch.knots.size(); ++i) {
      require(ch.knots[i] > ch.knots[i - 1], ErrorKind::kFormat,
              where + " knots must be strictly increasing");
      require(ch.cdf[i] >= ch.cdf[i - 1], ErrorKind::kFormat,
              where + " CDF must be nondecreasing");
    }
  }
}

double FactorizedPrior::cdf(int channel, double x) const {
  if (!(channel >= 0 && static_cast<std::size_t>(channel) < channels.size())) {
    fail(ErrorKind::kIndex, "prior channel " + std::to_string(channel) + " out of range");
  }
  const auto& ch = channels[channel];
  if (x <= ch.knots.front()) return 0.0;
  if (x >= ch.knots.back()) return 1.0;
  const auto it = std::upper_bound(ch.knots.begin(), ch.knots.end(), x,
                                   [](double v, float k) { return v < k; });
  const auto hi = static_cast<std::size_t>(it - ch.knots.begin());
  const double x0 = ch.knots[hi - 1], x1 = ch.knots[hi];
  const double f0 = ch.cdf[hi - 1], f1 = ch.cdf[hi];
  return f0 + (f1 - f0) * (x - x0) / (x1 - x0);
}

AlphabetBounds FactorizedPrior::support() const {
  AlphabetBounds b{std::numeric_limits<int>::min(), std::numeric_limits<int>::max()};
  for (const auto& ch : channels) {
    b.min = std::max(b.min, static_cast<int>(std::floor(ch.knots.front() + 0.5)));
    b.max = std::min(b.max, static_cast<int>(std::ceil(ch.knots.back() - 0.5)));
  }
  return b;
}

double factorized_pmf(int k, const FactorizedPrior& prior, int channel) {
  return prior.cdf(channel, k + 0.5) - prior.cdf(channel, k - 0.5);
}

double rate_bits(const LatentGrid& grid, const PmfProvider& pmf) {
  require(grid.values.size() == grid.shape.size(), ErrorKind::kShape, "malformed latent grid");
  double bits = 0.0;
  for (std::size_t i = 0; i < grid.values.size(); ++i) {
    const double p = pmf(i, grid.values[i]);
    if (!(p > 0.0)) {
      fail(ErrorKind::kRate, "zero-probability symbol " + std::to_string(grid.values[i]) +
                                 " at index " + std::to_string(i));
    }
    bits += -std::log2(p);
  }
  return bits;
}

double laplace_rate_bits(const LatentGrid& y, const LaplacianField& field) {
  require(field.mu.shape() == y.shape && field.sigma.shape() == y.shape, ErrorKind::kShape,
          "Laplacian field shape does not match latent " + to_string(y.shape));
  auto mu = field.mu.values();
  auto sigma = field.sigma.values();
  double bits = 0.0;
  for (std::size_t i = 0; i < y.values.size(); ++i) {
    bits += laplace_bits(y.values[i], mu[i], sigma[i]);
  }
  return bits;
}

double factorized_rate_bits(const LatentGrid& z, const FactorizedPrior& prior) {
  require(static_cast<std::size_t>(z.shape.channels) == prior.channels.size(), ErrorKind::kShape,
          "hyper-latent has " + std::to_string(z.shape.channels) + " channels, prior has " +
              std::to_string(prior.channels.size()));
  const std::size_t plane = z.shape.plane();
  return rate_bits(z, [&](std::size_t i, std::int32_t v) {
    return factorized_pmf(v, prior, static_cast<int>(i / plane));
  });
}

}  // namespace mvr
