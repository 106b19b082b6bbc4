#include "mvr/weights.hpp"

#include <Eigen/Core>
#include <set>

#include "mvr/byte_io.hpp"
#include "mvr/frame_io.hpp"

namespace mvr {
namespace {

constexpr std::string_view kMagic = "MVRW";

void write_value(ByteWriter& out, float v, Precision p) {
  if (p == Precision::kF16) {
    out.u16(Eigen::numext::bit_cast<std::uint16_t>(Eigen::half(v)));
  } else {
    out.f32(v);
  }
}

float read_value(ByteReader& in, Precision p) {
  if (p == Precision::kF16) {
    return static_cast<float>(Eigen::half(Eigen::half_impl::raw_uint16_to_half(in.u16())));
  }
  return in.f32();
}

void write_layer(ByteWriter& out, const ConvLayer& l, Precision p) {
  l.validate();
  out.u8(static_cast<std::uint8_t>(l.mode));
  out.u32(static_cast<std::uint32_t>(l.stride));
  out.u8(static_cast<std::uint8_t>(l.activation));
  out.u32(static_cast<std::uint32_t>(l.out_channels));
  out.u32(static_cast<std::uint32_t>(l.in_channels));
  out.u32(static_cast<std::uint32_t>(l.kernel_h));
  out.u32(static_cast<std::uint32_t>(l.kernel_w));
  for (float v : l.weights) write_value(out, v, p);
  for (float v : l.bias) write_value(out, v, p);
}

int read_extent(ByteReader& in, const char* what) {
  const std::uint32_t v = in.u32();
  require(v >= 1 && v <= (1u << 16), ErrorKind::kFormat,
          std::string("implausible layer ") + what + " " + std::to_string(v));
  return static_cast<int>(v);
}

ConvLayer read_layer(ByteReader& in, Precision p) {
  ConvLayer l;
  const std::uint8_t mode = in.u8();
  require(mode <= 1, ErrorKind::kFormat, "unknown layer mode " + std::to_string(mode));
  l.mode = static_cast<ConvMode>(mode);
  l.stride = read_extent(in, "stride");
  const std::uint8_t act = in.u8();
  require(act <= 1, ErrorKind::kFormat, "unknown activation " + std::to_string(act));
  l.activation = static_cast<Activation>(act);
  l.out_channels = read_extent(in, "out_channels");
  l.in_channels = read_extent(in, "in_channels");
  l.kernel_h = read_extent(in, "kernel_h");
  l.kernel_w = read_extent(in, "kernel_w");
  const std::size_t count = l.weight_count();
  const std::size_t width = p == Precision::kF16 ? 2 : 4;
  require(count * width <= in.remaining(), ErrorKind::kTruncation,
          "weight file truncated inside a layer payload");
  l.weights.resize(count);
  for (float& v : l.weights) v = read_value(in, p);
  l.bias.resize(static_cast<std::size_t>(l.out_channels));
  for (float& v : l.bias) v = read_value(in, p);
  return l;
}

void write_prior(ByteWriter& out, const FactorizedPrior& prior) {
  prior.validate();
  out.u32(static_cast<std::uint32_t>(prior.channels.size()));
  for (const auto& ch : prior.channels) {
    out.u32(static_cast<std::uint32_t>(ch.knots.size()));
    for (float v : ch.knots) out.f32(v);
    for (float v : ch.cdf) out.f32(v);
  }
}

FactorizedPrior read_prior(ByteReader& in) {
  FactorizedPrior prior;
  const std::uint32_t channels = in.u32();
  require(channels >= 1 && channels <= (1u << 16), ErrorKind::kFormat,
          "implausible prior channel count " + std::to_string(channels));
  prior.channels.resize(channels);
  for (auto& ch : prior.channels) {
    const std::uint32_t knots = in.u32();
    require(knots >= 2 && knots <= (1u << 16), ErrorKind::kFormat,
            "implausible prior knot count " + std::to_string(knots));
    ch.knots.resize(knots);
    ch.cdf.resize(knots);
    for (float& v : ch.knots) v = in.f32();
    for (float& v : ch.cdf) v = in.f32();
  }
  prior.validate();
  return prior;
}

}  // namespace

const std::vector<ConvLayer>& ModelWeights::network(std::string_view name) const {
  for (const auto& n : networks) {
    if (n.name == name) return n.layers;
  }
  fail(ErrorKind::kConfig, "weights lack sub-network '" + std::string(name) + "'");
}

std::vector<ConvLayer>& ModelWeights::network(std::string_view name) {
  for (auto& n : networks) {
    if (n.name == name) return n.layers;
  }
  fail(ErrorKind::kConfig, "weights lack sub-network '" + std::string(name) + "'");
}

bool ModelWeights::has_network(std::string_view name) const {
  for (const auto& n : networks) {
    if (n.name == name) return true;
  }
  return false;
}

void ModelWeights::validate_chains() const {
  for (const auto& n : networks) {
    for (std::size_t k = 0; k < n.layers.size(); ++k) {
      n.layers[k].validate();
      if (k + 1 < n.layers.size()) {
        require(n.layers[k].out_channels == n.layers[k + 1].in_channels, ErrorKind::kShape,
                "shape chain broken in " + n.name + ": layer " + std::to_string(k) +
                    " emits " + std::to_string(n.layers[k].out_channels) +
                    " channels, layer " + std::to_string(k + 1) + " expects " +
                    std::to_string(n.layers[k + 1].in_channels));
      }
    }
  }
}

float round_to_half(float v) { return static_cast<float>(Eigen::half(v)); }

std::size_t layer_payload_bytes(const ModelWeights& w) {
  const std::size_t width = w.precision == Precision::kF16 ? 2 : 4;
  std::size_t n = 0;
  for (const auto& net : w.networks) {
    for (const auto& l : net.layers) n += (l.weights.size() + l.bias.size()) * width;
  }
  return n;
}

std::vector<std::uint8_t> save_weights(const ModelWeights& w) {
  w.validate_chains();
  ByteWriter out;
  out.text(kMagic);
  out.u32(kWeightFileVersion);
  out.u8(static_cast<std::uint8_t>(w.precision));
  out.u8(w.quality);
  for (const auto& net : w.networks) {
    require(net.name != kZPrior && !net.name.empty() && net.name.size() < 256,
            ErrorKind::kConfig, "invalid sub-network name '" + net.name + "'");
    out.u16(static_cast<std::uint16_t>(net.name.size()));
    out.text(net.name);
    out.u32(static_cast<std::uint32_t>(net.layers.size()));
    for (const auto& l : net.layers) write_layer(out, l, w.precision);
  }
  if (w.z_prior) {
    out.u16(static_cast<std::uint16_t>(kZPrior.size()));
    out.text(kZPrior);
    write_prior(out, *w.z_prior);
  }
  return std::move(out).take();
}

ModelWeights load_weights(std::span<const std::uint8_t> bytes) {
  ByteReader in(bytes, "weight file");
  require(bytes.size() >= kMagic.size() && in.text(kMagic.size()) == kMagic, ErrorKind::kFormat,
          "bad weight file magic");
  const std::uint32_t version = in.u32();
  require(version == kWeightFileVersion, ErrorKind::kVersion,
          "weight file version " + std::to_string(version) + ", expected " +
              std::to_string(kWeightFileVersion));
  ModelWeights w;
  const std::uint8_t precision = in.u8();
  require(precision <= 1, ErrorKind::kFormat, "unknown precision flag " + std::to_string(precision));
  w.precision = static_cast<Precision>(precision);
  w.quality = in.u8();
  std::set<std::string> seen;
  while (!in.done()) {
    const std::uint16_t len = in.u16();
    std::string name = in.text(len);
    require(!name.empty() && seen.insert(name).second, ErrorKind::kFormat,
            "empty or duplicate section '" + name + "'");
    if (name == kZPrior) {
      w.z_prior = read_prior(in);
      continue;
    }
    const std::uint32_t count = in.u32();
    require(count <= 1024, ErrorKind::kFormat, "implausible layer count " + std::to_string(count));
    SubNetwork net{std::move(name), {}};
    for (std::uint32_t i = 0; i < count; ++i) net.layers.push_back(read_layer(in, w.precision));
    w.networks.push_back(std::move(net));
  }
  w.validate_chains();
  return w;
}

void save_weights_file(const std::filesystem::path& path, const ModelWeights& w) {
  write_file_atomic(path, save_weights(w));
}

ModelWeights load_weights_file(const std::filesystem::path& path) {
  return load_weights(read_file_bytes(path));
}

}  // namespace mvr
