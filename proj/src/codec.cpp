#include "mvr/codec.hpp"

#include <algorithm>
#include <cmath>

#include "mvr/postproc.hpp"
#include "mvr/sdc_motion.hpp"

namespace mvr {
namespace {

int mirror(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

Tensor crop(const Tensor& t, int height, int width) {
  Tensor out(t.channels(), height, width);
  for (int c = 0; c < t.channels(); ++c) {
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) out(c, y, x) = t(c, y, x);
    }
  }
  return out;
}

Tensor padded_input(const Frame420& f, int height, int width) {
  return pad_reflect(frame_to_tensor(upsample_420_to_444(f)), height, width);
}

const FactorizedPrior& require_prior(const ModelWeights& w) {
  require(w.z_prior.has_value(), ErrorKind::kConfig, "weights lack the hyper-latent prior");
  return *w.z_prior;
}

// Shared decoder-side synthesis: latents back to the post-processed frame at true size.
Frame444 reconstruct(const LatentGrid& y_hat, const Tensor& ref, const ModelWeights& w,
                     int height, int width) {
  const MotionResidual m = decode_motion_residual(y_hat, w);
  Tensor pred = sdc_warp(ref, m.flow, m.kernels);
  auto p = pred.values();
  auto r = m.residual.values();
  for (std::size_t i = 0; i < p.size(); ++i) p[i] += r[i];
  return tensor_to_frame(crop(postprocess(pred, w), height, width));
}

void check_pair(const Frame420& ref, const Frame420& target) {
  require(ref.width == target.width && ref.height == target.height, ErrorKind::kDimension,
          "reference " + std::to_string(ref.width) + "x" + std::to_string(ref.height) +
              " and target " + std::to_string(target.width) + "x" +
              std::to_string(target.height) + " differ");
}

}  // namespace

int round_up(int value, int multiple) { return (value + multiple - 1) / multiple * multiple; }

Tensor pad_reflect(const Tensor& t, int height, int width) {
  require(height >= t.height() && width >= t.width(), ErrorKind::kShape,
          "padding cannot shrink a tensor");
  Tensor out(t.channels(), height, width);
  for (int c = 0; c < t.channels(); ++c) {
    for (int y = 0; y < height; ++y) {
      const int sy = mirror(y, t.height());
      for (int x = 0; x < width; ++x) out(c, y, x) = t(c, sy, mirror(x, t.width()));
    }
  }
  return out;
}

CdfTable laplace_table(double mu, double sigma, AlphabetBounds bounds) {
  std::vector<double> pmf(static_cast<std::size_t>(bounds.size()));
  // Away from the bin holding mu the masses are geometric with ratio exp(-1/sigma).
  const double ratio = std::exp(-1.0 / sigma);
  const int centre_bin = static_cast<int>(
      std::clamp(std::round(mu), static_cast<double>(bounds.min), static_cast<double>(bounds.max)));
  for (int k = centre_bin - 1; k <= centre_bin + 1; ++k) {
    if (bounds.contains(k)) pmf[k - bounds.min] = laplace_pmf(k, mu, sigma);
  }
  for (int k = centre_bin + 2; k <= bounds.max; ++k) {
    const double prev = pmf[k - 1 - bounds.min];
    if (prev == 0.0) break;
    pmf[k - bounds.min] = prev * ratio;
  }
  for (int k = centre_bin - 2; k >= bounds.min; --k) {
    const double prev = pmf[k + 1 - bounds.min];
    if (prev == 0.0) break;
    pmf[k - bounds.min] = prev * ratio;
  }
  double sum = 0.0;
  for (double p : pmf) sum += p;
  if (sum > 0.0 && std::isfinite(sum)) {
    for (double& p : pmf) p /= sum;
  } else {
    std::fill(pmf.begin(), pmf.end(), 0.0);
    const double centre = std::clamp(std::round(mu), static_cast<double>(bounds.min),
                                     static_cast<double>(bounds.max));
    pmf[static_cast<std::size_t>(centre - bounds.min)] = 1.0;
  }
  return build_cdf(pmf, bounds.min);
}

std::vector<CdfTable> prior_tables(const FactorizedPrior& prior) {
  const AlphabetBounds b = prior.support();
  std::vector<CdfTable> tables;
  std::vector<double> pmf(static_cast<std::size_t>(b.size()));
  for (int c = 0; c < static_cast<int>(prior.channels.size()); ++c) {
    double sum = 0.0;
    for (int k = b.min; k <= b.max; ++k) sum += pmf[k - b.min] = factorized_pmf(k, prior, c);
    require(sum > 0.0, ErrorKind::kDomain, "prior channel " + std::to_string(c) + " is empty");
    for (double& p : pmf) p /= sum;
    tables.push_back(build_cdf(pmf, b.min));
  }
  return tables;
}

std::vector<std::uint8_t> encode_latent_grid(const LatentGrid& y, const LaplacianField& field) {
  require(field.mu.shape() == y.shape && field.sigma.shape() == y.shape, ErrorKind::kShape,
          "Laplacian field " + to_string(field.mu.shape()) + " does not match latent " +
              to_string(y.shape));
  y.validate();
  RangeEncoder enc;
  auto mu = field.mu.values();
  auto sigma = field.sigma.values();
  for (std::size_t i = 0; i < y.values.size(); ++i) {
    enc.encode(y.values[i], laplace_table(mu[i], sigma[i], y.bounds));
  }
  return std::move(enc).finish();
}

LatentGrid decode_latent_grid(std::span<const std::uint8_t> bytes, const LaplacianField& field) {
  require(field.mu.shape() == field.sigma.shape(), ErrorKind::kShape, "malformed Laplacian field");
  LatentGrid y(field.mu.shape(), kLatentBounds);
  RangeDecoder dec(bytes);
  auto mu = field.mu.values();
  auto sigma = field.sigma.values();
  for (std::size_t i = 0; i < y.values.size(); ++i) {
    y.values[i] = dec.decode(laplace_table(mu[i], sigma[i], y.bounds));
  }
  return y;
}

std::vector<std::uint8_t> encode_hyper_grid(const LatentGrid& z, const FactorizedPrior& prior) {
  require(z.shape.channels == static_cast<int>(prior.channels.size()), ErrorKind::kShape,
          "hyper-latent " + to_string(z.shape) + " does not match the prior's channel count");
  const auto tables = prior_tables(prior);
  RangeEncoder enc;
  const std::size_t plane = z.shape.plane();
  for (std::size_t i = 0; i < z.values.size(); ++i) enc.encode(z.values[i], tables[i / plane]);
  return std::move(enc).finish();
}

LatentGrid decode_hyper_grid(std::span<const std::uint8_t> bytes, Shape3 shape,
                             const FactorizedPrior& prior) {
  require(shape.channels == static_cast<int>(prior.channels.size()), ErrorKind::kShape,
          "hyper-latent " + to_string(shape) + " does not match the prior's channel count");
  const auto tables = prior_tables(prior);
  LatentGrid z(shape, prior.support());
  RangeDecoder dec(bytes);
  const std::size_t plane = shape.plane();
  for (std::size_t i = 0; i < z.values.size(); ++i) z.values[i] = dec.decode(tables[i / plane]);
  return z;
}

EncodeResult encode_frame(const Frame420& ref, const Frame420& target, const ModelWeights& w,
                          const EncodeOptions& options) {
  check_pair(ref, target);
  const FactorizedPrior& prior = require_prior(w);
  const int align = model_alignment(w);
  const int ph = round_up(ref.height, align);
  const int pw = round_up(ref.width, align);
  const Tensor ref_t = padded_input(ref, ph, pw);
  const Tensor target_t = padded_input(target, ph, pw);

  Tensor flow;
  if (options.flow) {
    require(options.flow->channels() == 2 && options.flow->height() == ref.height &&
                options.flow->width() == ref.width,
            ErrorKind::kShape,
            "external flow " + to_string(options.flow->shape()) + " does not match the frame");
    flow = pad_reflect(*options.flow, ph, pw);
  } else {
    flow = block_matching_flow(ref_t, target_t, options.block, options.search_radius);
  }

  EncodeResult r;
  const Tensor y = encode_latent(ref_t, target_t, flow, w);
  r.y_hat = quantize_round(y, kLatentBounds);
  r.z_hat = quantize_round(hyper_encode(y, w), prior.support());
  const LaplacianField field = hyper_decode(r.z_hat, w);
  r.rate_y_bits = laplace_rate_bits(r.y_hat, field);
  r.rate_z_bits = factorized_rate_bits(r.z_hat, prior);

  r.container.width = ref.width;
  r.container.height = ref.height;
  r.container.quality = w.quality;
  r.container.flags = options.flow ? kFlagExternalFlow : 0;
  r.container.z_bytes = encode_hyper_grid(r.z_hat, prior);
  r.container.y_bytes = encode_latent_grid(r.y_hat, field);

  r.recon = reconstruct(r.y_hat, ref_t, w, ref.height, ref.width);
  const Frame444 original = upsample_420_to_444(target);
  r.msssim = ms_ssim(original, r.recon);
  r.psnr = psnr(original, r.recon);
  return r;
}

DecodeResult decode_frame(const Container& c, const Frame420& ref, const ModelWeights& w) {
  require(c.quality == w.quality, ErrorKind::kConfig,
          "container was coded at q" + std::to_string(c.quality) + " but weights are q" +
              std::to_string(w.quality));
  require(ref.width == c.width && ref.height == c.height, ErrorKind::kDimension,
          "reference " + std::to_string(ref.width) + "x" + std::to_string(ref.height) +
              " does not match the coded frame " + std::to_string(c.width) + "x" +
              std::to_string(c.height));
  const FactorizedPrior& prior = require_prior(w);
  const int align = model_alignment(w);
  const int ph = round_up(c.height, align);
  const int pw = round_up(c.width, align);
  const auto& henc = w.network(kHyperEncoder);
  const auto& enc = w.network(kMvEncoder);
  int down = 1;
  for (const auto& l : enc) down *= l.stride;
  int hdown = down;
  for (const auto& l : henc) hdown *= l.stride;

  DecodeResult r;
  r.z_hat = decode_hyper_grid(c.z_bytes, {henc.back().out_channels, ph / hdown, pw / hdown},
                              prior);
  const LaplacianField field = hyper_decode(r.z_hat, w);
  r.y_hat = decode_latent_grid(c.y_bytes, field);
  require(r.y_hat.shape == Shape3{enc.back().out_channels, ph / down, pw / down},
          ErrorKind::kShape, "hyper decoder output does not match the latent grid");
  r.recon = reconstruct(r.y_hat, padded_input(ref, ph, pw), w, c.height, c.width);
  return r;
}

std::filesystem::path weight_file(const std::filesystem::path& dir, int quality) {
  return dir / ("q" + std::to_string(quality) + ".mvrw");
}

ModelWeights load_quality(const std::filesystem::path& dir, int quality) {
  const auto path = weight_file(dir, quality);
  require(std::filesystem::exists(path), ErrorKind::kConfig,
          "no weight set for q" + std::to_string(quality) + " (" + path.string() + ")");
  ModelWeights w = load_weights_file(path);
  require(w.quality == quality, ErrorKind::kConfig,
          path.string() + " holds weights for q" + std::to_string(w.quality));
  validate_model(w);
  return w;
}

}  // namespace mvr
