#include <cmath>
#include <limits>

#include "mvr/metrics.hpp"
#include "mvr/mvres_net.hpp"
#include "mvr/postproc.hpp"
#include "mvr/synthetic.hpp"
#include "oracles/msssim_reference.hpp"
#include "test_util.hpp"

using namespace mvr;

TEST_CASE("identical frames score exactly one") {
  Rng rng(1);
  for (auto [w, h] : {std::pair{64, 64}, {200, 120}, {22, 30}}) {
    const Frame420 f = random_frame(w, h, rng);
    CHECK(ms_ssim(f, f).score == 1.0);
  }
}

TEST_CASE("ms-ssim is symmetric and matches the reference") {
  for (int seed = 0; seed < 4; ++seed) {
    const FramePair p = synthetic_pair(96 + 32 * seed, 80, seed);
    const double ab = ms_ssim(p.ref, p.target).score;
    CHECK(ab == ms_ssim(p.target, p.ref).score);
    CHECK(std::abs(ab - oracle::ms_ssim_reference(p.ref.y, p.target.y, p.ref.width,
                                                  p.ref.height)) <= 1e-6);
  }
}

TEST_CASE("scale count follows the frame size") {
  Rng rng(2);
  const Frame420 big = random_frame(176, 176, rng), small = random_frame(32, 32, rng);
  const auto full = ms_ssim(big, random_frame(176, 176, rng));
  CHECK(full.scales == 5);
  CHECK_FALSE(full.reduced);
  const auto reduced = ms_ssim(small, random_frame(32, 32, rng));
  CHECK(reduced.scales == 2);
  CHECK(reduced.reduced);
  CHECK_KIND(ms_ssim(random_frame(10, 10, rng), random_frame(10, 10, rng)), ErrorKind::kDimension);
  CHECK_KIND(ms_ssim(big, small), ErrorKind::kShape);
}

TEST_CASE("inverted image scores low") {
  const FramePair p = synthetic_pair(128, 128, 11);
  Frame420 inv = p.ref;
  for (auto& b : inv.y) b = static_cast<std::uint8_t>(255 - b);
  CHECK(ms_ssim(p.ref, inv).score < 0.5);
}

TEST_CASE("psnr closed forms") {
  Frame444 a(8, 8), b(8, 8);
  CHECK(psnr(a, b) == std::numeric_limits<double>::infinity());
  for (int i = 0; i < 3; ++i) std::fill(b.plane(i).begin(), b.plane(i).end(), 255);
  CHECK(psnr(a, b) == doctest::Approx(0.0));
  for (int i = 0; i < 3; ++i) {
    std::fill(a.plane(i).begin(), a.plane(i).end(), 100);
    std::fill(b.plane(i).begin(), b.plane(i).end(), i == 1 ? 99 : 101);
  }
  CHECK(psnr(a, b) == doctest::Approx(48.1308).epsilon(1e-5));
  CHECK_KIND(psnr(a, Frame444(8, 6)), ErrorKind::kShape);
}

TEST_CASE("postprocess with zero weights clamps") {
  ModelWeights w = generate_weights(ArchitectureConfig::compact(), 1, 0);
  for (auto& l : w.network(kPostproc)) {
    std::fill(l.weights.begin(), l.weights.end(), 0.0f);
    std::fill(l.bias.begin(), l.bias.end(), 0.0f);
  }
  Rng rng(3);
  Tensor x = random_tensor({3, 16, 16}, rng, 0.8);
  const Tensor out = postprocess(x, w);
  for (std::size_t i = 0; i < x.size(); ++i) {
    CHECK(out.values()[i] == std::clamp(x.values()[i], 0.0f, 1.0f));
  }
  ModelWeights short_net = w;
  short_net.network(kPostproc).pop_back();
  CHECK_KIND(postprocess(x, short_net), ErrorKind::kConfig);
}

TEST_CASE("postprocess is deterministic") {
  const ModelWeights w = generate_weights(ArchitectureConfig::compact(), 5, 2);
  Rng rng(4);
  Tensor x = random_tensor({3, 24, 24}, rng, 0.5);
  for (float& v : x.values()) v = std::clamp(v + 0.5f, 0.0f, 1.0f);
  CHECK(postprocess(x, w) == postprocess(x, w));
}
