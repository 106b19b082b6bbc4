#include <cmath>

#include "mvr/mvres_net.hpp"
#include "test_util.hpp"

using namespace mvr;

namespace {

Shape3 chain_shape(Shape3 s, const std::vector<LayerSpec>& layers, int in_channels) {
  int in = in_channels;
  for (const auto& l : layers) {
    ConvLayer c{l.filters, in, l.kernel_h, l.kernel_w, l.stride, l.mode, l.activation, {}, {}};
    s = layer_output_shape(s, c);
    in = l.filters;
  }
  return s;
}

ModelWeights zeroed(ModelWeights w) {
  for (auto& net : w.networks) {
    for (auto& l : net.layers) {
      std::fill(l.weights.begin(), l.weights.end(), 0.0f);
      std::fill(l.bias.begin(), l.bias.end(), 0.0f);
    }
  }
  return w;
}

}  // namespace

TEST_CASE("default architecture shapes") {
  const auto c = ArchitectureConfig::default_config();
  c.validate();
  CHECK(c.alignment() == 64);
  CHECK(c.head_channels() == 15);
  const Shape3 y = chain_shape({8, 256, 256}, c.mv_encoder, 8);
  CHECK(y == Shape3{192, 16, 16});
  const Shape3 z = chain_shape(y, c.hyper_encoder, 192);
  CHECK(z == Shape3{128, 4, 4});
  CHECK(chain_shape(z, c.hyper_decoder, 128) == Shape3{384, 16, 16});
  CHECK(chain_shape(y, c.mv_decoder, 192) == Shape3{15, 256, 256});
}

TEST_CASE("architecture text roundtrip and validation") {
  for (const auto& c : {ArchitectureConfig::default_config(), ArchitectureConfig::compact()}) {
    CHECK(ArchitectureConfig::parse(c.to_text()) == c);
  }
  auto bad = ArchitectureConfig::compact();
  bad.hyper_decoder.back().filters = 7;
  CHECK_KIND(bad.validate(), ErrorKind::kConfig);
  auto even = ArchitectureConfig::compact();
  even.sdc_taps = 4;
  CHECK_KIND(even.validate(), ErrorKind::kConfig);
  CHECK(thrown_kind([] { ArchitectureConfig::parse("latent_channels = banana"); }).has_value());
}

TEST_CASE("compact pipeline shapes and determinism") {
  const auto c = ArchitectureConfig::compact();
  const ModelWeights w = generate_weights(c, 3, 1);
  CHECK(infer_architecture(w) == c);
  CHECK(model_alignment(w) == 64);
  CHECK(generate_weights(c, 3, 1) == w);
  CHECK_FALSE(generate_weights(c, 3, 2) == w);
  Rng rng(1);
  const Tensor ref = random_tensor({3, 128, 64}, rng, 0.2);
  const Tensor target = random_tensor({3, 128, 64}, rng, 0.2);
  const Tensor flow(2, 128, 64);
  const Tensor y = encode_latent(ref, target, flow, w);
  CHECK(y.shape() == Shape3{48, 8, 4});
  CHECK(encode_latent(ref, target, flow, w) == y);
  const Tensor z = hyper_encode(y, w);
  CHECK(z.shape() == Shape3{32, 2, 1});
  const LaplacianField field = hyper_decode(quantize_round(z), w);
  CHECK(field.mu.shape() == y.shape());
  CHECK(field.sigma.shape() == y.shape());
  for (float s : field.sigma.values()) CHECK(s > 0);
  const MotionResidual m = decode_motion_residual(quantize_round(y), w);
  CHECK(m.flow.shape() == Shape3{2, 128, 64});
  CHECK(m.kernels.u.shape() == Shape3{5, 128, 64});
  CHECK(m.residual.shape() == Shape3{3, 128, 64});
  check_kernel_field(m.kernels, 1e-6);
  for (float f : m.flow.values()) CHECK(std::abs(f) <= kFlowBound);
  for (float r : m.residual.values()) CHECK(std::abs(r) <= 1.0f);
  CHECK_KIND(encode_latent(ref, random_tensor({3, 100, 64}, rng), Tensor(2, 100, 64), w),
             ErrorKind::kShape);
  CHECK(thrown_kind([&] {
          encode_latent(Tensor(3, 96, 64), Tensor(3, 96, 64), Tensor(2, 96, 64), w);
        }).has_value());
}

TEST_CASE("zero weights give zero latents and neutral heads") {
  const ModelWeights w = zeroed(generate_weights(ArchitectureConfig::compact(), 1, 0));
  Rng rng(2);
  const Tensor y = encode_latent(random_tensor({3, 64, 64}, rng), random_tensor({3, 64, 64}, rng),
                                 random_tensor({2, 64, 64}, rng), w);
  for (float v : y.values()) CHECK(v == 0.0f);
  const Tensor z = hyper_encode(y, w);
  for (float v : z.values()) CHECK(v == 0.0f);
  const MotionResidual m = decode_motion_residual(quantize_round(y), w);
  for (float v : m.flow.values()) CHECK(v == 0.0f);
  for (float v : m.residual.values()) CHECK(v == 0.0f);
  for (float v : m.kernels.u.values()) CHECK(v == doctest::Approx(0.2f).epsilon(1e-6));
  for (float v : m.kernels.v.values()) CHECK(v == doctest::Approx(0.2f).epsilon(1e-6));
}

TEST_CASE("laplacian head split") {
  Tensor raw(4, 1, 3);
  raw(0, 0, 0) = 1.5f;
  raw(2, 0, 0) = 0.0f;
  raw(2, 0, 1) = -40.0f;
  raw(2, 0, 2) = 30.0f;
  const LaplacianField f = split_laplacian_heads(raw, 2);
  CHECK(f.mu(0, 0, 0) == 1.5f);
  CHECK(std::abs(f.sigma(0, 0, 0) - 0.693148) < 1e-6);
  CHECK(std::abs(f.sigma(0, 0, 1) - 1e-6) < 1e-9);
  CHECK(f.sigma(0, 0, 2) == doctest::Approx(30.0));
  CHECK_KIND(split_laplacian_heads(raw, 3), ErrorKind::kConfig);
}

TEST_CASE("motion head split") {
  Rng rng(3);
  Tensor raw = random_tensor({15, 6, 7}, rng, 30.0);
  const MotionResidual m = split_motion_heads(raw, 5);
  check_kernel_field(m.kernels, 1e-6);
  for (float f : m.flow.values()) CHECK(std::abs(f) <= kFlowBound);
  CHECK(m.flow(0, 2, 3) == doctest::Approx(20.0 * std::tanh(raw(0, 2, 3))));
  Tensor flat(15, 2, 2, 3.0f);
  const MotionResidual uniform = split_motion_heads(flat, 5);
  for (float v : uniform.kernels.u.values()) {
    CHECK(v == doctest::Approx(0.2f).epsilon(1e-6));
  }
  CHECK_KIND(split_motion_heads(Tensor(14, 2, 2), 5), ErrorKind::kConfig);
}
