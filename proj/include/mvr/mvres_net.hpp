#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "mvr/entropy_model.hpp"
#include "mvr/sdc_motion.hpp"
#include "mvr/weights.hpp"

namespace mvr {

inline constexpr int kMotionInputChannels = 8;  // reference 3 + target 3 + flow 2
inline constexpr float kFlowBound = 20.0f;
inline constexpr double kScaleFloor = 1e-6;

struct LayerSpec {
  int filters = 0;
  int kernel_h = 1;
  int kernel_w = 1;
  int stride = 1;
  ConvMode mode = ConvMode::kDown;
  Activation activation = Activation::kNone;
  bool operator==(const LayerSpec&) const = default;
};

// Declarative description of the four coding networks plus the post-processing CNN.
// Text form, one `key = value` per line (`#` starts a comment):
//   latent_channels = 192
//   mv_encoder = 64x5x5/2 down leaky, 128x5x5/2 down leaky, ...
struct ArchitectureConfig {
  int latent_channels = 192;
  int hyper_channels = 128;
  int sdc_taps = 5;
  std::vector<LayerSpec> mv_encoder;
  std::vector<LayerSpec> mv_decoder;
  std::vector<LayerSpec> hyper_encoder;
  std::vector<LayerSpec> hyper_decoder;
  std::vector<LayerSpec> postproc;

  static ArchitectureConfig default_config();
  // Narrow variant with the same topology; `width` scales every hidden layer.
  static ArchitectureConfig compact(int width = 16, int latent_channels = 48,
                                    int hyper_channels = 32, int postproc_width = 16);

  int head_channels() const { return 2 + 2 * sdc_taps + 3; }
  // Frame dimensions must be multiples of this (product of all downsampling strides).
  int alignment() const;
  // Throws kConfig on any broken invariant.
  void validate() const;

  std::string to_text() const;
  static ArchitectureConfig parse(std::string_view text);

  bool operator==(const ArchitectureConfig&) const = default;
};

// Reads the architecture back out of a weight set (layer shapes only).
ArchitectureConfig infer_architecture(const ModelWeights& w);
// Throws kConfig unless the weights realize a valid architecture.
void validate_model(const ModelWeights& w);

// Seeded random weights for one quality level. Each layer is drawn from a scaled normal and
// then rescaled on a synthetic probe frame so activations land at fixed target spreads; higher
// quality levels target a wider latent spread (finer effective quantization).
ModelWeights generate_weights(const ArchitectureConfig& config, std::uint64_t seed,
                              int quality, Precision precision = Precision::kF32);

struct MotionResidual {
  Tensor flow;          // (2, H, W), |flow| <= 20 px
  KernelField kernels;  // (K, H, W) each, simplex along K
  Tensor residual;      // (3, H, W) in [-1, 1]
};

Tensor encode_latent(const Tensor& ref, const Tensor& target, const Tensor& flow,
                     const ModelWeights& w);
Tensor hyper_encode(const Tensor& y, const ModelWeights& w);
LaplacianField hyper_decode(const LatentGrid& z_hat, const ModelWeights& w);
MotionResidual decode_motion_residual(const LatentGrid& y_hat, const ModelWeights& w);

// Split of raw decoder output into heads; exposed for testing the squashing functions.
MotionResidual split_motion_heads(const Tensor& raw, int taps);
LaplacianField split_laplacian_heads(const Tensor& raw, int latent_channels);

int model_alignment(const ModelWeights& w);

}  // namespace mvr
