#include "mvr/metrics.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "mvr/error.hpp"

namespace mvr {
namespace {

struct Plane {
  int w = 0;
  int h = 0;
  std::vector<double> v;
  double at(int x, int y) const { return v[static_cast<std::size_t>(y) * w + x]; }
};

std::array<double, kSsimWindow> gaussian_window() {
  std::array<double, kSsimWindow> g{};
  double sum = 0.0;
  for (int i = 0; i < kSsimWindow; ++i) {
    const double d = i - kSsimWindow / 2;
    g[i] = std::exp(-d * d / (2.0 * kSsimSigma * kSsimSigma));
    sum += g[i];
  }
  for (double& x : g) x /= sum;
  return g;
}

// Separable Gaussian filter, valid region only.
Plane filter(const Plane& p) {
  static const auto g = gaussian_window();
  const int ow = p.w - kSsimWindow + 1;
  const int oh = p.h - kSsimWindow + 1;
  Plane rows{ow, p.h, std::vector<double>(static_cast<std::size_t>(ow) * p.h)};
  for (int y = 0; y < p.h; ++y) {
    for (int x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int k = 0; k < kSsimWindow; ++k) s += g[k] * p.at(x + k, y);
      rows.v[static_cast<std::size_t>(y) * ow + x] = s;
    }
  }
  Plane out{ow, oh, std::vector<double>(static_cast<std::size_t>(ow) * oh)};
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int k = 0; k < kSsimWindow; ++k) s += g[k] * rows.at(x, y + k);
      out.v[static_cast<std::size_t>(y) * ow + x] = s;
    }
  }
  return out;
}

Plane product(const Plane& a, const Plane& b) {
  Plane out{a.w, a.h, a.v};
  for (std::size_t i = 0; i < out.v.size(); ++i) out.v[i] *= b.v[i];
  return out;
}

Plane downsample(const Plane& p) {
  Plane out{p.w / 2, p.h / 2, {}};
  out.v.resize(static_cast<std::size_t>(out.w) * out.h);
  for (int y = 0; y < out.h; ++y) {
    for (int x = 0; x < out.w; ++x) {
      out.v[static_cast<std::size_t>(y) * out.w + x] =
          (p.at(2 * x, 2 * y) + p.at(2 * x + 1, 2 * y) + p.at(2 * x, 2 * y + 1) +
           p.at(2 * x + 1, 2 * y + 1)) / 4.0;
    }
  }
  return out;
}

// Mean luminance term and mean contrast-structure term over the valid window positions.
std::pair<double, double> ssim_terms(const Plane& a, const Plane& b) {
  constexpr double c1 = (0.01 * 255) * (0.01 * 255);
  constexpr double c2 = (0.03 * 255) * (0.03 * 255);
  const Plane ma = filter(a);
  const Plane mb = filter(b);
  const Plane saa = filter(product(a, a));
  const Plane sbb = filter(product(b, b));
  const Plane sab = filter(product(a, b));
  double lum = 0.0;
  double cs = 0.0;
  for (std::size_t i = 0; i < ma.v.size(); ++i) {
    const double mu_a = ma.v[i];
    const double mu_b = mb.v[i];
    const double var_a = saa.v[i] - mu_a * mu_a;
    const double var_b = sbb.v[i] - mu_b * mu_b;
    const double cov = sab.v[i] - mu_a * mu_b;
    lum += (2.0 * mu_a * mu_b + c1) / (mu_a * mu_a + mu_b * mu_b + c1);
    cs += (2.0 * cov + c2) / (var_a + var_b + c2);
  }
  const double n = static_cast<double>(ma.v.size());
  return {lum / n, cs / n};
}

Plane to_plane(std::span<const std::uint8_t> bytes, int w, int h) {
  Plane p{w, h, std::vector<double>(bytes.begin(), bytes.end())};
  return p;
}

double mse_to_psnr(double sq, std::size_t n) {
  if (sq == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(255.0 * 255.0 / (sq / static_cast<double>(n)));
}

double squared_error(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - b[i];
    s += d * d;
  }
  return s;
}

}  // namespace

MsSsimResult ms_ssim_plane(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b,
                           int width, int height) {
  require(width > 0 && height > 0 && a.size() == static_cast<std::size_t>(width) * height &&
              b.size() == a.size(),
          ErrorKind::kShape, "MS-SSIM planes differ in size");
  int scales = 0;
  for (int w = width, h = height; scales < static_cast<int>(kMsSsimWeights.size()) &&
                                  w >= kSsimWindow && h >= kSsimWindow;
       w /= 2, h /= 2) {
    ++scales;
  }
  require(scales >= 1, ErrorKind::kDimension,
          "frame " + std::to_string(width) + "x" + std::to_string(height) +
              " is smaller than the SSIM window");
  double weight_sum = 0.0;
  for (int s = 0; s < scales; ++s) weight_sum += kMsSsimWeights[s];

  Plane pa = to_plane(a, width, height);
  Plane pb = to_plane(b, width, height);
  double score = 1.0;
  for (int s = 0; s < scales; ++s) {
    const auto [lum, cs] = ssim_terms(pa, pb);
    const double term = s + 1 == scales ? lum * cs : cs;
    score *= std::pow(std::max(term, 0.0), kMsSsimWeights[s] / weight_sum);
    if (s + 1 < scales) {
      pa = downsample(pa);
      pb = downsample(pb);
    }
  }
  return {score, scales, scales < static_cast<int>(kMsSsimWeights.size())};
}

MsSsimResult ms_ssim(const Frame444& a, const Frame444& b) {
  require(a.width == b.width && a.height == b.height, ErrorKind::kShape,
          "MS-SSIM inputs differ in dimensions");
  return ms_ssim_plane(a.y, b.y, a.width, a.height);
}

MsSsimResult ms_ssim(const Frame420& a, const Frame420& b) {
  require(a.width == b.width && a.height == b.height, ErrorKind::kShape,
          "MS-SSIM inputs differ in dimensions");
  return ms_ssim_plane(a.y, b.y, a.width, a.height);
}

double psnr(const Frame444& a, const Frame444& b) {
  require(a.width == b.width && a.height == b.height, ErrorKind::kShape,
          "PSNR inputs differ in dimensions");
  double sq = 0.0;
  for (int p = 0; p < 3; ++p) sq += squared_error(a.plane(p), b.plane(p));
  return mse_to_psnr(sq, 3 * a.y.size());
}

double psnr(const Frame420& a, const Frame420& b) {
  require(a.width == b.width && a.height == b.height, ErrorKind::kShape,
          "PSNR inputs differ in dimensions");
  const double sq = squared_error(a.y, b.y) + squared_error(a.u, b.u) + squared_error(a.v, b.v);
  return mse_to_psnr(sq, a.y.size() + a.u.size() + a.v.size());
}

}  // namespace mvr
