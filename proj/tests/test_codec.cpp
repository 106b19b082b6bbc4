#include <cmath>

#include "mvr/codec.hpp"
#include "mvr/rate_control.hpp"
#include "mvr/synthetic.hpp"
#include "oracles/laplace_reference.hpp"
#include "test_util.hpp"

using namespace mvr;

namespace {

Container sample_container() {
  Container c;
  c.width = 1920;
  c.height = 1080;
  c.quality = 3;
  c.flags = kFlagExternalFlow;
  c.z_bytes = {1, 2, 3};
  c.y_bytes = {9, 8, 7, 6, 5};
  return c;
}

const ModelWeights& compact_weights(int q) {
  static std::vector<ModelWeights> cache = [] {
    std::vector<ModelWeights> w;
    for (int i = 0; i < kQualityLevels; ++i) {
      w.push_back(generate_weights(ArchitectureConfig::compact(), 7, i));
    }
    return w;
  }();
  return cache[q];
}

}  // namespace

TEST_CASE("container roundtrip") {
  const Container c = sample_container();
  const auto bytes = serialize_container(c);
  CHECK(bytes.size() == 4 + 2 + 4 + 4 + 1 + 1 + 4 + 3 + 4 + 5 + 4);
  CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "MVRC");
  CHECK(parse_container(bytes) == c);
}

TEST_CASE("container errors") {
  const auto bytes = serialize_container(sample_container());
  for (std::size_t cut = 0; cut < bytes.size(); ++cut) {
    const auto kind = thrown_kind([&] { parse_container(std::span(bytes).first(cut)); });
    CHECK(kind.has_value());
  }
  CHECK_KIND(parse_container(std::span(bytes).first(bytes.size() - 2)), ErrorKind::kTruncation);
  // Every single-byte payload corruption is caught by the checksum.
  const std::size_t payload = 4 + 2 + 4 + 4 + 2 + 4;
  for (std::size_t i = payload; i < payload + 3; ++i) {
    for (int bit = 0; bit < 8; ++bit) {
      auto bad = bytes;
      bad[i] ^= static_cast<std::uint8_t>(1 << bit);
      CHECK_KIND(parse_container(bad), ErrorKind::kCorruption);
    }
  }
  auto magic = bytes;
  magic[0] = 'X';
  CHECK_KIND(parse_container(magic), ErrorKind::kFormat);
  auto version = bytes;
  version[4] ^= 0x7;
  CHECK_KIND(parse_container(version), ErrorKind::kVersion);
  auto trailing = bytes;
  trailing.push_back(0);
  CHECK_KIND(parse_container(trailing), ErrorKind::kFormat);
}

TEST_CASE("reflect padding") {
  Tensor t(1, 2, 3);
  for (int i = 0; i < 6; ++i) t.values()[i] = static_cast<float>(i);
  const Tensor p = pad_reflect(t, 4, 5);
  const float expect[4][5] = {{0, 1, 2, 1, 0}, {3, 4, 5, 4, 3}, {0, 1, 2, 1, 0}, {3, 4, 5, 4, 3}};
  for (int y = 0; y < 4; ++y) {
    for (int x = 0; x < 5; ++x) CHECK(p(0, y, x) == expect[y][x]);
  }
  CHECK(pad_reflect(t, 2, 3) == t);
  CHECK(round_up(100, 64) == 128);
  CHECK(round_up(128, 64) == 128);
}

TEST_CASE("laplace tables") {
  const CdfTable t = laplace_table(0.3, 2.0);
  CHECK(t.offset == -255);
  CHECK(t.alphabet_size() == 511);
  // Empty bins are floored to one unit, taken from the largest bins.
  int empty = 0;
  for (int k = -255; k <= 255; ++k) {
    empty += std::floor(oracle::laplace_mass(k, 0.3, 2.0) * 65536 + 0.5) == 0;
  }
  for (int k = -5; k <= 5; ++k) {
    const double want = static_cast<double>(oracle::laplace_mass(k, 0.3, 2.0));
    CHECK(std::abs(t.frequency(k + 255) / 65536.0 - want) <= (empty + 2) / 65536.0);
  }
  // A tiny scale centred far outside the alphabet puts everything on the clamped mean.
  const CdfTable far = laplace_table(900.0, 1e-6);
  CHECK(far.frequency(510) == 65536 - 510);
  const CdfTable nearest = laplace_table(3.2, 1e-6, {-4, 4});
  CHECK(nearest.frequency(3 + 4) == 65536 - 8);
}

TEST_CASE("latent grid coding roundtrip") {
  Rng rng(1);
  LaplacianField f{Tensor(4, 5, 6), Tensor(4, 5, 6)};
  LatentGrid y({4, 5, 6}, kLatentBounds);
  for (std::size_t i = 0; i < y.values.size(); ++i) {
    f.mu.values()[i] = static_cast<float>(rng.uniform(-10, 10));
    f.sigma.values()[i] = static_cast<float>(std::exp(rng.uniform(-4, 3)));
    y.values[i] = static_cast<std::int32_t>(rng.uniform_int(-255, 255));
  }
  const auto bytes = encode_latent_grid(y, f);
  CHECK(decode_latent_grid(bytes, f) == y);

  const FactorizedPrior prior = FactorizedPrior::seeded_default(3, 4);
  LatentGrid z({3, 2, 2}, prior.support());
  for (auto& v : z.values) v = static_cast<std::int32_t>(rng.uniform_int(-16, 16));
  CHECK(decode_hyper_grid(encode_hyper_grid(z, prior), z.shape, prior) == z);
}

TEST_CASE("end-to-end roundtrip at a non-aligned size") {
  const FramePair p = synthetic_pair(96, 80, 3);
  const ModelWeights& w = compact_weights(2);
  const EncodeResult enc = encode_frame(p.ref, p.target, w);
  CHECK(enc.container.width == 96);
  CHECK(enc.container.height == 80);
  CHECK(enc.container.quality == 2);
  CHECK(enc.recon.width == 96);
  const auto bytes = serialize_container(enc.container);
  const DecodeResult dec = decode_frame(parse_container(bytes), p.ref, w);
  CHECK(dec.y_hat == enc.y_hat);
  CHECK(dec.z_hat == enc.z_hat);
  CHECK(dec.recon == enc.recon);
  CHECK(enc.msssim.score > 0);
  CHECK(enc.msssim.score <= 1);
  CHECK(serialize_container(encode_frame(p.ref, p.target, w).container) == bytes);

  CHECK_KIND(decode_frame(enc.container, p.ref, compact_weights(1)), ErrorKind::kConfig);
  CHECK_KIND(decode_frame(enc.container, Frame420(64, 80), w), ErrorKind::kDimension);
}

TEST_CASE("external flow is used and flagged") {
  const FramePair p = synthetic_pair(64, 64, 5);
  EncodeOptions opt;
  opt.flow = Tensor(2, 64, 64, 1.5f);
  const EncodeResult enc = encode_frame(p.ref, p.target, compact_weights(0), opt);
  CHECK(enc.container.flags == kFlagExternalFlow);
  CHECK(decode_frame(enc.container, p.ref, compact_weights(0)).recon == enc.recon);
  opt.flow = Tensor(2, 32, 64);
  CHECK_KIND(encode_frame(p.ref, p.target, compact_weights(0), opt), ErrorKind::kShape);
}

TEST_CASE("higher quality spends more bits") {
  const FramePair p = synthetic_pair(128, 128, 9);
  const double lo = encode_frame(p.ref, p.target, compact_weights(0)).rate_y_bits;
  const double hi = encode_frame(p.ref, p.target, compact_weights(4)).rate_y_bits;
  CHECK(hi > lo);
}
