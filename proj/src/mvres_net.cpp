#include "mvr/mvres_net.hpp"

#include <algorithm>
#include <cmath>

#include "mvr/random.hpp"
#include "mvr/synthetic.hpp"

namespace mvr {
namespace {

double softplus(double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); }
double inverse_softplus(double y) { return y > 30.0 ? y : std::log(std::expm1(y)); }

void check_image(const Tensor& t, int channels, const char* what) {
  require(t.channels() == channels, ErrorKind::kShape,
          std::string(what) + " must have " + std::to_string(channels) + " channels, got " +
              to_string(t.shape()));
}

void check_aligned(int h, int w, int alignment) {
  require(h > 0 && w > 0 && h % alignment == 0 && w % alignment == 0, ErrorKind::kShape,
          "frame " + std::to_string(w) + "x" + std::to_string(h) +
              " is not a positive multiple of " + std::to_string(alignment));
}

int stride_product(const std::vector<ConvLayer>& layers) {
  int p = 1;
  for (const auto& l : layers) p *= l.stride;
  return p;
}

// Root mean square over one output channel (or the whole tensor when channel < 0).
double rms(const Tensor& t, int channel = -1) {
  auto vals = channel < 0 ? t.values() : t.channel(channel);
  double s = 0.0;
  for (float v : vals) s += static_cast<double>(v) * v;
  return vals.empty() ? 0.0 : std::sqrt(s / static_cast<double>(vals.size()));
}

ConvLayer random_layer(const LayerSpec& s, int in_channels, Rng& rng) {
  ConvLayer l;
  l.out_channels = s.filters;
  l.in_channels = in_channels;
  l.kernel_h = s.kernel_h;
  l.kernel_w = s.kernel_w;
  l.stride = s.stride;
  l.mode = s.mode;
  l.activation = s.activation;
  l.weights.resize(l.weight_count());
  const double scale = 1.0 / std::sqrt(static_cast<double>(in_channels) * s.kernel_h * s.kernel_w);
  for (float& v : l.weights) v = static_cast<float>(rng.normal() * scale);
  l.bias.assign(static_cast<std::size_t>(s.filters), 0.0f);
  return l;
}

std::vector<ConvLayer> random_chain(const std::vector<LayerSpec>& specs, int in_channels,
                                    Rng& rng) {
  std::vector<ConvLayer> layers;
  for (const auto& s : specs) {
    layers.push_back(random_layer(s, in_channels, rng));
    in_channels = s.filters;
  }
  return layers;
}

// Pre-activation output of `layer` on x (bias excluded).
Tensor linear_response(const Tensor& x, const ConvLayer& layer) {
  ConvLayer probe = layer;
  probe.activation = Activation::kNone;
  std::fill(probe.bias.begin(), probe.bias.end(), 0.0f);
  return apply_layer(x, probe);
}

void scale_output_channel(ConvLayer& l, int o, double factor) {
  const std::size_t per = static_cast<std::size_t>(l.in_channels) * l.kernel_h * l.kernel_w;
  for (std::size_t i = 0; i < per; ++i) {
    l.weights[o * per + i] = static_cast<float>(l.weights[o * per + i] * factor);
  }
}

// Rescales every layer but the last to unit RMS response on x; returns the last layer's input.
Tensor calibrate_hidden(std::vector<ConvLayer>& layers, Tensor x) {
  for (std::size_t k = 0; k + 1 < layers.size(); ++k) {
    const double r = rms(linear_response(x, layers[k]));
    if (r > 0.0) {
      for (int o = 0; o < layers[k].out_channels; ++o) scale_output_channel(layers[k], o, 1.0 / r);
    }
    x = apply_layer(x, layers[k]);
  }
  return x;
}

// Sets the last layer's per-channel RMS response to targets[o] (one target for all when size 1).
void calibrate_last(std::vector<ConvLayer>& layers, const Tensor& x,
                    const std::vector<double>& targets) {
  ConvLayer& last = layers.back();
  const Tensor resp = linear_response(x, last);
  for (int o = 0; o < last.out_channels; ++o) {
    const double r = rms(resp, o);
    const double t = targets.size() == 1 ? targets[0] : targets[o];
    if (r > 0.0) scale_output_channel(last, o, t / r);
  }
}

std::uint64_t mix_seed(std::uint64_t seed, int quality) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * static_cast<std::uint64_t>(quality + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace

ModelWeights generate_weights(const ArchitectureConfig& config, std::uint64_t seed, int quality,
                              Precision precision) {
  config.validate();
  require(quality >= 0 && quality <= 255, ErrorKind::kDomain, "quality index out of range");
  const std::uint64_t s = mix_seed(seed, quality);
  Rng rng(s);
  ModelWeights w;
  w.precision = precision;
  w.quality = static_cast<std::uint8_t>(quality);
  const int cy = config.latent_channels;
  const int cz = config.hyper_channels;
  w.networks = {
      {std::string(kMvEncoder), random_chain(config.mv_encoder, kMotionInputChannels, rng)},
      {std::string(kMvDecoder), random_chain(config.mv_decoder, cy, rng)},
      {std::string(kHyperEncoder), random_chain(config.hyper_encoder, cy, rng)},
      {std::string(kHyperDecoder), random_chain(config.hyper_decoder, cz, rng)},
      {std::string(kPostproc), random_chain(config.postproc, 3, rng)},
  };
  w.z_prior = FactorizedPrior::seeded_default(cz, s + 1);

  // Flow arrives in pixels, the images in [0, 1]; bring both to a comparable response.
  ConvLayer& first = w.network(kMvEncoder).front();
  const std::size_t area = static_cast<std::size_t>(first.kernel_h) * first.kernel_w;
  for (int o = 0; o < first.out_channels; ++o) {
    for (int i = 6; i < kMotionInputChannels; ++i) {
      float* k = first.weights.data() + (static_cast<std::size_t>(o) * first.in_channels + i) * area;
      for (std::size_t t = 0; t < area; ++t) k[t] /= kFlowBound;
    }
  }

  // Activation spreads on the probe. The latent spread grows with quality, the hyper-decoder's
  // scale head is centred on the matching Laplace scale (spread / sqrt 2).
  const double latent_rms = 2.0 * std::pow(1.25, quality);
  constexpr double kHyperRms = 2.0;
  constexpr double kMeanHeadRms = 0.3;
  constexpr double kScaleHeadRms = 0.2;
  constexpr double kScaleMargin = 1.5;
  constexpr double kFlowHeadRms = 0.05;
  constexpr double kKernelHeadRms = 0.5;
  constexpr double kKernelCentreBias = 2.0;
  constexpr double kResidualHeadRms = 0.05;
  constexpr double kPostprocRms = 0.01;

  const int size = 2 * config.alignment();
  const FramePair pair = synthetic_pair(size, size, s + 2);
  const Tensor ref = frame_to_tensor(upsample_420_to_444(pair.ref));
  const Tensor target = frame_to_tensor(upsample_420_to_444(pair.target));
  const Tensor flow = block_matching_flow(ref, target);
  const Tensor* parts[] = {&ref, &target, &flow};
  const Tensor input = concat_channels<float>(parts);

  auto& enc = w.network(kMvEncoder);
  Tensor x = calibrate_hidden(enc, input);
  calibrate_last(enc, x, {latent_rms});
  const Tensor y = apply_layer(x, enc.back());

  auto& henc = w.network(kHyperEncoder);
  x = calibrate_hidden(henc, y);
  calibrate_last(henc, x, {kHyperRms});
  const LatentGrid z_hat = quantize_round(apply_layer(x, henc.back()), w.z_prior->support());

  auto& hdec = w.network(kHyperDecoder);
  x = calibrate_hidden(hdec, z_hat.to_tensor());
  std::vector<double> hyper_targets(2 * cy, kMeanHeadRms);
  std::fill(hyper_targets.begin() + cy, hyper_targets.end(), kScaleHeadRms);
  calibrate_last(hdec, x, hyper_targets);
  const float scale_bias =
      static_cast<float>(inverse_softplus(kScaleMargin * latent_rms / std::sqrt(2.0)));
  std::fill(hdec.back().bias.begin() + cy, hdec.back().bias.end(), scale_bias);

  auto& dec = w.network(kMvDecoder);
  x = calibrate_hidden(dec, quantize_round(y).to_tensor());
  const int taps = config.sdc_taps;
  std::vector<double> head_targets(config.head_channels(), kKernelHeadRms);
  head_targets[0] = head_targets[1] = kFlowHeadRms;
  for (int c = 2 + 2 * taps; c < config.head_channels(); ++c) head_targets[c] = kResidualHeadRms;
  calibrate_last(dec, x, head_targets);
  dec.back().bias[2 + taps / 2] = static_cast<float>(kKernelCentreBias);
  dec.back().bias[2 + taps + taps / 2] = static_cast<float>(kKernelCentreBias);

  auto& post = w.network(kPostproc);
  x = calibrate_hidden(post, ref);
  calibrate_last(post, x, {kPostprocRms});

  if (precision == Precision::kF16) {
    for (auto& net : w.networks) {
      for (auto& l : net.layers) {
        for (float& v : l.weights) v = round_to_half(v);
        for (float& v : l.bias) v = round_to_half(v);
      }
    }
  }
  validate_model(w);
  return w;
}

Tensor encode_latent(const Tensor& ref, const Tensor& target, const Tensor& flow,
                     const ModelWeights& w) {
  check_image(ref, 3, "reference");
  check_image(target, 3, "target");
  check_image(flow, 2, "flow");
  require(ref.shape() == target.shape() && flow.height() == ref.height() &&
              flow.width() == ref.width(),
          ErrorKind::kShape, "reference, target and flow must share spatial dimensions");
  check_aligned(ref.height(), ref.width(), model_alignment(w));
  const Tensor* parts[] = {&ref, &target, &flow};
  return run_chain(concat_channels<float>(parts), w.network(kMvEncoder));
}

Tensor hyper_encode(const Tensor& y, const ModelWeights& w) {
  const auto& layers = w.network(kHyperEncoder);
  require(y.channels() == layers.front().in_channels, ErrorKind::kShape,
          "latent " + to_string(y.shape()) + " does not match hyper_encoder input");
  check_aligned(y.height(), y.width(), stride_product(layers));
  return run_chain(y, layers);
}

LaplacianField split_laplacian_heads(const Tensor& raw, int latent_channels) {
  require(raw.channels() == 2 * latent_channels, ErrorKind::kConfig,
          "hyper_decoder emitted " + std::to_string(raw.channels()) + " channels, expected " +
              std::to_string(2 * latent_channels));
  LaplacianField f{slice_channels(raw, 0, latent_channels),
                   slice_channels(raw, latent_channels, latent_channels)};
  for (float& v : f.sigma.values()) {
    v = static_cast<float>(softplus(static_cast<double>(v)) + kScaleFloor);
  }
  return f;
}

LaplacianField hyper_decode(const LatentGrid& z_hat, const ModelWeights& w) {
  const auto& layers = w.network(kHyperDecoder);
  require(z_hat.shape.channels == layers.front().in_channels, ErrorKind::kShape,
          "hyper-latent " + to_string(z_hat.shape) + " does not match hyper_decoder input");
  const int cy = w.network(kMvEncoder).back().out_channels;
  return split_laplacian_heads(run_chain(z_hat.to_tensor(), layers), cy);
}

MotionResidual split_motion_heads(const Tensor& raw, int taps) {
  require(taps >= 1 && taps % 2 == 1 && raw.channels() == 2 + 2 * taps + 3, ErrorKind::kConfig,
          "decoder emitted " + std::to_string(raw.channels()) + " channels, cannot split into " +
              "flow, two " + std::to_string(taps) + "-tap kernels and residual");
  MotionResidual m{slice_channels(raw, 0, 2),
                   {slice_channels(raw, 2, taps), slice_channels(raw, 2 + taps, taps)},
                   slice_channels(raw, 2 + 2 * taps, 3)};
  for (float& v : m.flow.values()) {
    v = static_cast<float>(kFlowBound * std::tanh(static_cast<double>(v)));
  }
  for (float& v : m.residual.values()) v = static_cast<float>(std::tanh(static_cast<double>(v)));
  const std::size_t plane = raw.shape().plane();
  std::vector<double> e(static_cast<std::size_t>(taps));
  for (Tensor* field : {&m.kernels.u, &m.kernels.v}) {
    auto vals = field->values();
    for (std::size_t p = 0; p < plane; ++p) {
      double top = vals[p];
      for (int t = 1; t < taps; ++t) top = std::max(top, static_cast<double>(vals[t * plane + p]));
      double sum = 0.0;
      for (int t = 0; t < taps; ++t) {
        e[t] = std::exp(static_cast<double>(vals[t * plane + p]) - top);
        sum += e[t];
      }
      for (int t = 0; t < taps; ++t) vals[t * plane + p] = static_cast<float>(e[t] / sum);
    }
  }
  return m;
}

MotionResidual decode_motion_residual(const LatentGrid& y_hat, const ModelWeights& w) {
  const auto& layers = w.network(kMvDecoder);
  require(y_hat.shape.channels == layers.front().in_channels, ErrorKind::kShape,
          "latent " + to_string(y_hat.shape) + " does not match mv_decoder input");
  const int heads = layers.back().out_channels;
  require(heads >= 5 && (heads - 5) % 2 == 0, ErrorKind::kConfig,
          "mv_decoder head width " + std::to_string(heads) + " is not 2 + 2K + 3");
  return split_motion_heads(run_chain(y_hat.to_tensor(), layers), (heads - 5) / 2);
}

}  // namespace mvr
