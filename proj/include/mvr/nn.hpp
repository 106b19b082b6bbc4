#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mvr/tensor.hpp"

namespace mvr {

enum class ConvMode : std::uint8_t { kDown = 0, kUp = 1 };
enum class Activation : std::uint8_t { kNone = 0, kLeakyRelu = 1 };

inline constexpr float kLeakySlope = 0.2f;

// Weights are laid out (out, in, kh, kw) for both modes.
struct ConvLayer {
  int out_channels = 0;
  int in_channels = 0;
  int kernel_h = 1;
  int kernel_w = 1;
  int stride = 1;
  ConvMode mode = ConvMode::kDown;
  Activation activation = Activation::kNone;
  std::vector<float> weights;
  std::vector<float> bias;

  std::size_t weight_count() const {
    return static_cast<std::size_t>(out_channels) * in_channels * kernel_h * kernel_w;
  }
  float weight(int o, int i, int ky, int kx) const {
    return weights[((static_cast<std::size_t>(o) * in_channels + i) * kernel_h + ky) * kernel_w +
                   kx];
  }
  // Throws kShape when the arrays disagree with the declared extents.
  void validate() const;

  bool operator==(const ConvLayer&) const = default;
};

// Zero "same" padding of floor(k/2); output is ceil(H/stride) x ceil(W/stride).
Tensor conv2d(const Tensor& x, const ConvLayer& layer);

// Transposed convolution producing exactly (H*stride) x (W*stride).
Tensor deconv2d(const Tensor& x, const ConvLayer& layer);

Tensor leaky_relu(Tensor x, float slope = kLeakySlope);

// Dispatches on layer.mode.
Tensor apply_layer(const Tensor& x, const ConvLayer& layer);
Tensor run_chain(Tensor x, std::span<const ConvLayer> layers);

Shape3 layer_output_shape(const Shape3& in, const ConvLayer& layer);

}  // namespace mvr
