#include "mvr/nn.hpp"

#include <algorithm>
#include <cmath>

namespace mvr {
namespace {

constexpr int kBlock = 4;

int ceil_div(int a, int b) { return (a + b - 1) / b; }

// Floor division and non-negative remainder for possibly negative offsets.
int floor_div(int a, int b) { return a >= 0 ? a / b : -((-a + b - 1) / b); }

struct Plane {
  const float* data;
  int height;
  int width;
};

// out_k[y][x] += w_k * in[y + dy][x + dx] for every (y, x) whose source lies inside `in`.
// Out-of-range sources are zero padding and contribute nothing.
template <int N>
void accumulate_shifted(float* const* out, int out_h, int out_w, const Plane& in,
                        const float* w, int dy, int dx) {
  const int y0 = std::max(0, -dy);
  const int y1 = std::min(out_h, in.height - dy);
  const int x0 = std::max(0, -dx);
  const int x1 = std::min(out_w, in.width - dx);
  if (y0 >= y1 || x0 >= x1) return;
  for (int y = y0; y < y1; ++y) {
    const float* src = in.data + static_cast<std::size_t>(y + dy) * in.width + dx;
    const std::size_t row = static_cast<std::size_t>(y) * out_w;
    if constexpr (N == 4) {
      float* o0 = out[0] + row;
      float* o1 = out[1] + row;
      float* o2 = out[2] + row;
      float* o3 = out[3] + row;
      const float w0 = w[0], w1 = w[1], w2 = w[2], w3 = w[3];
      for (int x = x0; x < x1; ++x) {
        const float v = src[x];
        o0[x] += w0 * v;
        o1[x] += w1 * v;
        o2[x] += w2 * v;
        o3[x] += w3 * v;
      }
    } else {
      float* o0 = out[0] + row;
      const float w0 = w[0];
      for (int x = x0; x < x1; ++x) o0[x] += w0 * src[x];
    }
  }
}

void finish(Tensor& out, const ConvLayer& layer) {
  for (int o = 0; o < out.channels(); ++o) {
    const float b = layer.bias[o];
    for (float& v : out.channel(o)) v += b;
  }
  if (layer.activation == Activation::kLeakyRelu) {
    for (float& v : out.values()) v = std::max(v, kLeakySlope * v);
  }
  for (float v : out.values()) {
    require(std::isfinite(v), ErrorKind::kNumeric, "non-finite activation in layer output");
  }
}

// Runs `body(o_first, n)` over output channels in blocks of kBlock, then singles.
template <typename Body>
void for_each_block(int out_channels, Body&& body) {
  int o = 0;
  for (; o + kBlock <= out_channels; o += kBlock) body(o, kBlock);
  for (; o < out_channels; ++o) body(o, 1);
}

}  // namespace

void ConvLayer::validate() const {
  require(out_channels > 0 && in_channels > 0 && kernel_h > 0 && kernel_w > 0,
          ErrorKind::kShape, "layer extents must be positive");
  require(stride >= 1, ErrorKind::kShape, "layer stride must be >= 1");
  require(weights.size() == weight_count(), ErrorKind::kShape,
          "weight length " + std::to_string(weights.size()) + " != " +
              std::to_string(weight_count()));
  require(bias.size() == static_cast<std::size_t>(out_channels), ErrorKind::kShape,
          "bias length " + std::to_string(bias.size()) + " != " + std::to_string(out_channels));
}

Shape3 layer_output_shape(const Shape3& in, const ConvLayer& layer) {
  if (layer.mode == ConvMode::kDown) {
    return {layer.out_channels, ceil_div(in.height, layer.stride), ceil_div(in.width, layer.stride)};
  }
  return {layer.out_channels, in.height * layer.stride, in.width * layer.stride};
}

Tensor conv2d(const Tensor& x, const ConvLayer& layer) {
  layer.validate();
  require(layer.mode == ConvMode::kDown, ErrorKind::kShape, "conv2d needs a down layer");
  require(x.channels() == layer.in_channels, ErrorKind::kShape,
          "conv2d input has " + std::to_string(x.channels()) + " channels, layer expects " +
              std::to_string(layer.in_channels));
  const int s = layer.stride;
  const int h = x.height();
  const int w = x.width();
  const Shape3 os = layer_output_shape(x.shape(), layer);
  Tensor out(os);
  const int ph = layer.kernel_h / 2;
  const int pw = layer.kernel_w / 2;

  // Polyphase split: phase (ry, rx) holds x[c][a*s + ry][b*s + rx]. With it every tap of a
  // strided convolution becomes a unit-stride shifted read.
  std::vector<std::vector<float>> phases(static_cast<std::size_t>(s) * s);
  std::vector<int> phase_h(s), phase_w(s);
  for (int r = 0; r < s; ++r) {
    phase_h[r] = std::max(0, ceil_div(h - r, s));
    phase_w[r] = std::max(0, ceil_div(w - r, s));
  }
  if (s > 1) {
    for (int ry = 0; ry < s; ++ry) {
      for (int rx = 0; rx < s; ++rx) {
        auto& buf = phases[static_cast<std::size_t>(ry) * s + rx];
        const int hh = phase_h[ry], ww = phase_w[rx];
        buf.resize(static_cast<std::size_t>(x.channels()) * hh * ww);
        for (int c = 0; c < x.channels(); ++c) {
          for (int a = 0; a < hh; ++a) {
            for (int b = 0; b < ww; ++b) {
              buf[(static_cast<std::size_t>(c) * hh + a) * ww + b] = x(c, a * s + ry, b * s + rx);
            }
          }
        }
      }
    }
  }
  auto input_plane = [&](int c, int ry, int rx) -> Plane {
    if (s == 1) return {x.channel(c).data(), h, w};
    const int hh = phase_h[ry], ww = phase_w[rx];
    return {phases[static_cast<std::size_t>(ry) * s + rx].data() +
                static_cast<std::size_t>(c) * hh * ww,
            hh, ww};
  };

  for_each_block(layer.out_channels, [&](int o0, int n) {
    float* outs[kBlock];
    for (int k = 0; k < n; ++k) outs[k] = out.channel(o0 + k).data();
    float wk[kBlock];
    for (int ic = 0; ic < layer.in_channels; ++ic) {
      for (int ky = 0; ky < layer.kernel_h; ++ky) {
        const int dyy = ky - ph;
        const int ry = ((dyy % s) + s) % s;
        const int dy = floor_div(dyy, s);
        for (int kx = 0; kx < layer.kernel_w; ++kx) {
          const int dxx = kx - pw;
          const int rx = ((dxx % s) + s) % s;
          const int dx = floor_div(dxx, s);
          for (int k = 0; k < n; ++k) wk[k] = layer.weight(o0 + k, ic, ky, kx);
          const Plane p = input_plane(ic, ry, rx);
          if (n == kBlock) {
            accumulate_shifted<kBlock>(outs, os.height, os.width, p, wk, dy, dx);
          } else {
            accumulate_shifted<1>(outs, os.height, os.width, p, wk, dy, dx);
          }
        }
      }
    }
  });
  finish(out, layer);
  return out;
}

Tensor deconv2d(const Tensor& x, const ConvLayer& layer) {
  layer.validate();
  require(layer.mode == ConvMode::kUp, ErrorKind::kShape, "deconv2d needs an up layer");
  require(x.channels() == layer.in_channels, ErrorKind::kShape,
          "deconv2d input has " + std::to_string(x.channels()) + " channels, layer expects " +
              std::to_string(layer.in_channels));
  const int s = layer.stride;
  const int h = x.height();
  const int w = x.width();
  const Shape3 os = layer_output_shape(x.shape(), layer);
  Tensor out(os);
  const int ph = layer.kernel_h / 2;
  const int pw = layer.kernel_w / 2;
  const std::size_t plane = static_cast<std::size_t>(h) * w;

  // Output site o = i*s + k - pad. Grouping outputs by phase r = o mod s turns the scatter
  // into a gather: out_r[a] += w[k] * x[a + (r + pad - k)/s] for taps with s | (r + pad - k).
  std::vector<float> phase_buf(static_cast<std::size_t>(kBlock) * plane);
  for_each_block(layer.out_channels, [&](int o0, int n) {
    for (int ry = 0; ry < s; ++ry) {
      for (int rx = 0; rx < s; ++rx) {
        std::fill(phase_buf.begin(), phase_buf.end(), 0.0f);
        float* outs[kBlock];
        for (int k = 0; k < n; ++k) outs[k] = phase_buf.data() + k * plane;
        float wk[kBlock];
        for (int ic = 0; ic < layer.in_channels; ++ic) {
          const Plane p{x.channel(ic).data(), h, w};
          for (int ky = 0; ky < layer.kernel_h; ++ky) {
            const int ty = ry + ph - ky;
            if (((ty % s) + s) % s != 0) continue;
            const int dy = floor_div(ty, s);
            for (int kx = 0; kx < layer.kernel_w; ++kx) {
              const int tx = rx + pw - kx;
              if (((tx % s) + s) % s != 0) continue;
              const int dx = floor_div(tx, s);
              for (int k = 0; k < n; ++k) wk[k] = layer.weight(o0 + k, ic, ky, kx);
              if (n == kBlock) {
                accumulate_shifted<kBlock>(outs, h, w, p, wk, dy, dx);
              } else {
                accumulate_shifted<1>(outs, h, w, p, wk, dy, dx);
              }
            }
          }
        }
        for (int k = 0; k < n; ++k) {
          auto dst = out.channel(o0 + k);
          const float* src = outs[k];
          for (int a = 0; a < h; ++a) {
            for (int b = 0; b < w; ++b) {
              dst[static_cast<std::size_t>(a * s + ry) * os.width + b * s + rx] =
                  src[static_cast<std::size_t>(a) * w + b];
            }
          }
        }
      }
    }
  });
  finish(out, layer);
  return out;
}

Tensor leaky_relu(Tensor x, float slope) {
  for (float& v : x.values()) v = std::max(v, slope * v);
  return x;
}

Tensor apply_layer(const Tensor& x, const ConvLayer& layer) {
  return layer.mode == ConvMode::kDown ? conv2d(x, layer) : deconv2d(x, layer);
}

Tensor run_chain(Tensor x, std::span<const ConvLayer> layers) {
  for (const auto& layer : layers) x = apply_layer(x, layer);
  return x;
}

}  // namespace mvr
