#include <cmath>

#include "mvr/frame_io.hpp"
#include "oracles/image_reference.hpp"
#include "sdc_cases.hpp"
#include "test_util.hpp"

using namespace mvr;

namespace {

KernelFieldD delta_kernels(int taps, int h, int w) {
  TensorD k(taps, h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) k(taps / 2, y, x) = 1.0;
  }
  return {k, k};
}

TensorD random_ref(int h, int w, Rng& rng) {
  TensorD t(3, h, w);
  for (double& v : t.values()) v = rng.uniform();
  return t;
}

}  // namespace

TEST_CASE("zero flow with delta kernels is the identity") {
  Rng rng(1);
  const TensorD ref = random_ref(16, 20, rng);
  const TensorD out = sdc_warp(ref, TensorD(2, 16, 20), delta_kernels(5, 16, 20));
  for (std::size_t i = 0; i < ref.size(); ++i) {
    CHECK(std::abs(out.values()[i] - ref.values()[i]) <= 1e-6);
  }
}

TEST_CASE("integer flow with delta kernels shifts pixels") {
  Rng rng(2);
  const TensorD ref = random_ref(16, 16, rng);
  TensorD flow(2, 16, 16);
  for (double& u : flow.channel(0)) u = -2;
  const TensorD out = sdc_warp(ref, flow, delta_kernels(5, 16, 16));
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < 16; ++y) {
      for (int x = 2; x < 16; ++x) CHECK(out(c, y, x) == ref(c, y, x - 2));
    }
  }
}

TEST_CASE("uniform kernels give the box filter") {
  Rng rng(3);
  const TensorD ref = random_ref(16, 16, rng);
  const TensorD uniform(5, 16, 16, 0.2);
  const TensorD out = sdc_warp(ref, TensorD(2, 16, 16), KernelFieldD{uniform, uniform});
  const TensorD box = oracle::box_filter(ref, 5);
  for (std::size_t i = 0; i < ref.size(); ++i) {
    CHECK(std::abs(out.values()[i] - box.values()[i]) <= 1e-5);
  }
}

TEST_CASE("output is a convex combination of reference samples") {
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const TensorD ref = random_ref(12, 12, rng);
    const auto [lo, hi] = std::minmax_element(ref.values().begin(), ref.values().end());
    const TensorD out =
        sdc_warp(ref, sdc_cases::random_flow(12, 12, 20, 0, rng),
                 KernelFieldD{sdc_cases::random_simplex(5, 12, 12, rng),
                              sdc_cases::random_simplex(5, 12, 12, rng)});
    for (double v : out.values()) {
      CHECK(v >= *lo - 1e-12);
      CHECK(v <= *hi + 1e-12);
    }
  }
}

TEST_CASE("warp is linear in the reference") {
  Rng rng(5);
  const TensorD a = random_ref(10, 10, rng), b = random_ref(10, 10, rng);
  const TensorD flow = sdc_cases::random_flow(10, 10, 4, 0, rng);
  const KernelFieldD k{sdc_cases::random_simplex(5, 10, 10, rng),
                       sdc_cases::random_simplex(5, 10, 10, rng)};
  TensorD mix(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) mix.values()[i] = 0.3 * a.values()[i] - 1.7 * b.values()[i];
  const TensorD out = sdc_warp(mix, flow, k), oa = sdc_warp(a, flow, k), ob = sdc_warp(b, flow, k);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(std::abs(out.values()[i] - (0.3 * oa.values()[i] - 1.7 * ob.values()[i])) <= 1e-5);
  }
}

TEST_CASE("non-simplex kernels are rejected") {
  TensorD k(5, 4, 4, 0.3);
  CHECK_KIND(sdc_warp(TensorD(3, 4, 4), TensorD(2, 4, 4), KernelFieldD{k, k}),
             ErrorKind::kContract);
  TensorD neg(5, 4, 4, 0.2);
  neg(0, 1, 1) = -0.1;
  neg(1, 1, 1) = 0.4;
  CHECK_KIND(sdc_warp(TensorD(3, 4, 4), TensorD(2, 4, 4), KernelFieldD{neg, neg}),
             ErrorKind::kContract);
  const TensorD ok(5, 4, 4, 0.2);
  CHECK_KIND(sdc_warp(TensorD(3, 4, 4), TensorD(2, 4, 5), KernelFieldD{ok, ok}), ErrorKind::kShape);
}

TEST_CASE("vector-Jacobian products match central differences") {
  Rng rng(6);
  for (int trial = 0; trial < 8; ++trial) {
    const auto c = sdc_cases::random_vjp_case(8, 5, rng);
    const auto e = sdc_cases::vjp_errors(c, 1e-3);
    CHECK(e.flow <= 1e-4);
    CHECK(e.kernels <= 1e-4);
    CHECK(e.ref <= 1e-4);
  }
}

TEST_CASE("flow gradient vanishes on a constant reference") {
  Rng rng(7);
  auto c = sdc_cases::random_vjp_case(8, 5, rng);
  for (double& v : c.ref.values()) v = 0.4;
  const auto g = sdc_warp_vjp(c.ref, c.flow, c.kernels, c.upstream);
  for (double v : g.flow.values()) CHECK(v == 0.0);
}

TEST_CASE("block matching") {
  Rng rng(8);
  Tensor ref(3, 32, 32);
  for (float& v : ref.values()) v = static_cast<float>(rng.uniform());
  CHECK(block_matching_flow(ref, ref) == Tensor(2, 32, 32));
  const Tensor flat(3, 32, 32, 0.5f);
  CHECK(block_matching_flow(flat, flat) == Tensor(2, 32, 32));

  Tensor target(3, 32, 32);
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < 32; ++y) {
      for (int x = 0; x < 32; ++x) target(c, y, x) = ref(c, y, std::max(x - 2, 0));
    }
  }
  const Tensor flow = block_matching_flow(ref, target);
  for (int y = 8; y < 24; ++y) {
    for (int x = 8; x < 24; ++x) {
      CHECK(flow(0, y, x) == doctest::Approx(-2.0));
      CHECK(flow(1, y, x) == doctest::Approx(0.0));
    }
  }
  CHECK_KIND(block_matching_flow(ref, Tensor(3, 32, 24)), ErrorKind::kShape);
}

TEST_CASE(".flo roundtrip and errors") {
  Rng rng(9);
  Tensor flow(2, 3, 4);
  for (float& v : flow.values()) v = static_cast<float>(rng.uniform(-10, 10));
  const auto bytes = write_flo(flow);
  CHECK(bytes.size() == 12 + 3 * 4 * 8);
  CHECK(read_flo(bytes) == flow);
  auto bad = bytes;
  std::fill(bad.begin(), bad.begin() + 4, 0);
  CHECK_KIND(read_flo(bad), ErrorKind::kFormat);
  CHECK(thrown_kind([&] { read_flo(std::span(bytes).first(bytes.size() - 1)); }).has_value());
  Tensor wild = flow;
  wild(0, 0, 0) = 500;
  CHECK(thrown_kind([&] { read_flo(write_flo(wild)); }).has_value());
  Tensor two(2, 1, 1);
  two(0, 0, 0) = 1;
  CHECK(write_flo(two).size() == 20);
}
