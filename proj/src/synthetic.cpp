#include "mvr/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "mvr/random.hpp"

namespace mvr {
namespace {

struct Wave {
  double fx, fy, phase, amp;
};
struct Blob {
  double cx, cy, radius, amp;
};

struct Scene {
  std::array<std::vector<Wave>, 3> waves;
  std::array<std::vector<Blob>, 3> blobs;
  std::array<double, 3> base{};

  double eval(int plane, double x, double y) const {
    double v = base[plane];
    for (const auto& w : waves[plane]) v += w.amp * std::sin(w.fx * x + w.fy * y + w.phase);
    for (const auto& b : blobs[plane]) {
      const double dx = x - b.cx, dy = y - b.cy;
      v += b.amp * std::exp(-(dx * dx + dy * dy) / (2.0 * b.radius * b.radius));
    }
    return v;
  }
};

Scene random_scene(int width, int height, Rng& rng) {
  Scene s;
  for (int p = 0; p < 3; ++p) {
    const double amp_scale = p == 0 ? 1.0 : 0.4;
    s.base[p] = p == 0 ? rng.uniform(90.0, 160.0) : rng.uniform(110.0, 145.0);
    for (int k = 0; k < 5; ++k) {
      s.waves[p].push_back({rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3),
                            rng.uniform(0.0, 6.283185307179586),
                            amp_scale * rng.uniform(5.0, 30.0)});
    }
    for (int k = 0; k < 6; ++k) {
      s.blobs[p].push_back({rng.uniform(0.0, width), rng.uniform(0.0, height),
                            rng.uniform(4.0, 0.15 * std::min(width, height) + 4.0),
                            amp_scale * rng.uniform(-50.0, 50.0)});
    }
  }
  return s;
}

std::uint8_t to_byte(double v) { return static_cast<std::uint8_t>(std::clamp(std::round(v), 0.0, 255.0)); }

}  // namespace

FramePair synthetic_pair(int width, int height, std::uint64_t seed) {
  require(width > 0 && height > 0 && width % 2 == 0 && height % 2 == 0, ErrorKind::kDimension,
          "synthetic frames need positive even dimensions");
  Rng rng(seed);
  const Scene scene = random_scene(width, height, rng);
  // Motion: global translation plus a low-frequency swirl.
  const double gx = rng.uniform(-6.0, 6.0), gy = rng.uniform(-6.0, 6.0);
  const double lx = rng.uniform(-2.0, 2.0), ly = rng.uniform(-2.0, 2.0);
  const double kx = rng.uniform(0.005, 0.03), ky = rng.uniform(0.005, 0.03);
  const double noise = rng.uniform(1.0, 4.0);
  const double gain = rng.uniform(0.97, 1.03);

  FramePair pair{Frame420(width, height), Frame420(width, height)};
  auto fill = [&](std::vector<std::uint8_t>& ref, std::vector<std::uint8_t>& tgt, int plane,
                  int step) {
    const int w = width / step, h = height / step;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const double px = (x + 0.5) * step - 0.5, py = (y + 0.5) * step - 0.5;
        const double mx = gx + lx * std::sin(ky * py), my = gy + ly * std::cos(kx * px);
        const std::size_t i = static_cast<std::size_t>(y) * w + x;
        ref[i] = to_byte(scene.eval(plane, px, py) + noise * rng.normal());
        tgt[i] = to_byte(gain * scene.eval(plane, px - mx, py - my) + noise * rng.normal());
      }
    }
  };
  fill(pair.ref.y, pair.target.y, 0, 1);
  fill(pair.ref.u, pair.target.u, 1, 2);
  fill(pair.ref.v, pair.target.v, 2, 2);
  return pair;
}

}  // namespace mvr
