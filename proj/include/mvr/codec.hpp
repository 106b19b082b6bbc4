#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "mvr/entropy_model.hpp"
#include "mvr/frame_io.hpp"
#include "mvr/metrics.hpp"
#include "mvr/mvres_net.hpp"
#include "mvr/range_coder.hpp"

namespace mvr {

inline constexpr std::uint16_t kContainerVersion = 1;
inline constexpr std::uint8_t kFlagExternalFlow = 1;
inline constexpr AlphabetBounds kLatentBounds{-255, 255};

// One coded P-frame: "MVRC", u16 version, u32 width, u32 height, u8 q, u8 flags,
// u32 length + hyper-latent bytes, u32 length + latent bytes, u32 CRC-32 of both payloads.
struct Container {
  int width = 0;
  int height = 0;
  std::uint8_t quality = 0;
  std::uint8_t flags = 0;
  std::vector<std::uint8_t> z_bytes;
  std::vector<std::uint8_t> y_bytes;

  std::size_t payload_bytes() const { return z_bytes.size() + y_bytes.size(); }
  bool operator==(const Container&) const = default;
};

std::uint32_t payload_crc(const Container& c);
std::vector<std::uint8_t> serialize_container(const Container& c);
// Throws kFormat (magic, trailing bytes), kVersion, kTruncation or kCorruption (CRC).
Container parse_container(std::span<const std::uint8_t> bytes);

// Mirror padding (edge sample not repeated) of every channel up to (height, width).
Tensor pad_reflect(const Tensor& t, int height, int width);
int round_up(int value, int multiple);

// Per-symbol table for a latent element under the Laplacian model over `bounds`. When the
// model assigns no representable mass, all of it goes to the clamped rounded mean.
CdfTable laplace_table(double mu, double sigma, AlphabetBounds bounds = kLatentBounds);
std::vector<CdfTable> prior_tables(const FactorizedPrior& prior);

std::vector<std::uint8_t> encode_latent_grid(const LatentGrid& y, const LaplacianField& field);
LatentGrid decode_latent_grid(std::span<const std::uint8_t> bytes, const LaplacianField& field);
std::vector<std::uint8_t> encode_hyper_grid(const LatentGrid& z, const FactorizedPrior& prior);
LatentGrid decode_hyper_grid(std::span<const std::uint8_t> bytes, Shape3 shape,
                             const FactorizedPrior& prior);

struct EncodeOptions {
  std::optional<Tensor> flow;  // (2, H, W) at true dimensions; block matching otherwise
  int block = 8;
  int search_radius = 16;
};

struct EncodeResult {
  Container container;
  LatentGrid y_hat;
  LatentGrid z_hat;
  Frame444 recon;  // local decode at true dimensions
  double rate_y_bits = 0.0;
  double rate_z_bits = 0.0;
  MsSsimResult msssim;
  double psnr = 0.0;
};

struct DecodeResult {
  LatentGrid y_hat;
  LatentGrid z_hat;
  Frame444 recon;
};

EncodeResult encode_frame(const Frame420& ref, const Frame420& target, const ModelWeights& w,
                          const EncodeOptions& options = {});
// Throws kConfig when the weights' quality differs from the container's.
DecodeResult decode_frame(const Container& c, const Frame420& ref, const ModelWeights& w);

// Directory holding q0.mvrw .. q4.mvrw (and arch.cfg describing them).
std::filesystem::path weight_file(const std::filesystem::path& dir, int quality);
ModelWeights load_quality(const std::filesystem::path& dir, int quality);

}  // namespace mvr
