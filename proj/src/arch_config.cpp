#include <cstdio>
#include <map>
#include <sstream>

#include "mvr/mvres_net.hpp"

namespace mvr {
namespace {

LayerSpec spec(int filters, int kernel, int stride, ConvMode mode, Activation act) {
  return {filters, kernel, kernel, stride, mode, act};
}

constexpr auto kDown = ConvMode::kDown;
constexpr auto kUp = ConvMode::kUp;
constexpr auto kLeaky = Activation::kLeakyRelu;
constexpr auto kLinear = Activation::kNone;

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::string layer_text(const LayerSpec& l) {
  return std::to_string(l.filters) + "x" + std::to_string(l.kernel_h) + "x" +
         std::to_string(l.kernel_w) + "/" + std::to_string(l.stride) +
         (l.mode == kDown ? " down" : " up") +
         (l.activation == kLeaky ? " leaky" : " linear");
}

LayerSpec parse_layer(const std::string& text) {
  std::istringstream in(text);
  std::string shape, mode, act, extra;
  in >> shape >> mode >> act;
  require(!shape.empty() && !mode.empty() && !act.empty() && !(in >> extra), ErrorKind::kConfig,
          "layer spec '" + text + "' should read like '64x5x5/2 down leaky'");
  LayerSpec l;
  char tail = 0;
  require(std::sscanf(shape.c_str(), "%dx%dx%d/%d%c", &l.filters, &l.kernel_h, &l.kernel_w,
                      &l.stride, &tail) == 4,
          ErrorKind::kConfig, "bad layer shape '" + shape + "'");
  if (mode == "down") {
    l.mode = kDown;
  } else if (mode == "up") {
    l.mode = kUp;
  } else {
    fail(ErrorKind::kConfig, "layer mode must be down or up, got '" + mode + "'");
  }
  if (act == "leaky") {
    l.activation = kLeaky;
  } else if (act == "linear") {
    l.activation = kLinear;
  } else {
    fail(ErrorKind::kConfig, "activation must be leaky or linear, got '" + act + "'");
  }
  return l;
}

std::vector<LayerSpec> parse_layers(const std::string& value) {
  std::vector<LayerSpec> out;
  std::size_t start = 0;
  while (start <= value.size()) {
    const auto comma = value.find(',', start);
    const auto item = trim(std::string_view(value).substr(
        start, comma == std::string::npos ? std::string::npos : comma - start));
    if (!item.empty()) out.push_back(parse_layer(item));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

int parse_int(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  int v = 0;
  try {
    v = std::stoi(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  require(used == value.size() && used > 0, ErrorKind::kConfig,
          "'" + key + "' needs an integer, got '" + value + "'");
  return v;
}

// Product of the strides of the layers running in `mode`.
int stride_product(const std::vector<LayerSpec>& layers, ConvMode mode, const char* name) {
  int p = 1;
  for (const auto& l : layers) {
    require(l.filters >= 1 && l.kernel_h >= 1 && l.kernel_w >= 1 && l.stride >= 1,
            ErrorKind::kConfig, std::string(name) + " has a non-positive layer extent");
    if (l.mode == mode) p *= l.stride;
  }
  return p;
}

std::vector<LayerSpec> specs_of(const std::vector<ConvLayer>& layers) {
  std::vector<LayerSpec> out;
  for (const auto& l : layers) {
    out.push_back({l.out_channels, l.kernel_h, l.kernel_w, l.stride, l.mode, l.activation});
  }
  return out;
}

}  // namespace

ArchitectureConfig ArchitectureConfig::default_config() {
  ArchitectureConfig c;
  c.latent_channels = 192;
  c.hyper_channels = 128;
  c.sdc_taps = 5;
  c.mv_encoder = {spec(64, 5, 2, kDown, kLeaky), spec(128, 5, 2, kDown, kLeaky),
                  spec(128, 5, 2, kDown, kLeaky), spec(192, 5, 2, kDown, kLinear)};
  c.mv_decoder = {spec(128, 5, 2, kUp, kLeaky), spec(128, 5, 2, kUp, kLeaky),
                  spec(64, 5, 2, kUp, kLeaky), spec(c.head_channels(), 5, 2, kUp, kLinear)};
  c.hyper_encoder = {spec(128, 3, 1, kDown, kLeaky), spec(128, 5, 2, kDown, kLeaky),
                     spec(128, 5, 2, kDown, kLinear)};
  c.hyper_decoder = {spec(128, 5, 2, kUp, kLeaky), spec(192, 5, 2, kUp, kLeaky),
                     spec(384, 3, 1, kDown, kLinear)};
  c.postproc = {spec(64, 3, 1, kDown, kLeaky), spec(64, 3, 1, kDown, kLeaky),
                spec(64, 3, 1, kDown, kLeaky), spec(3, 3, 1, kDown, kLinear)};
  return c;
}

ArchitectureConfig ArchitectureConfig::compact(int width, int latent_channels, int hyper_channels,
                                               int postproc_width) {
  ArchitectureConfig c;
  c.latent_channels = latent_channels;
  c.hyper_channels = hyper_channels;
  c.sdc_taps = 5;
  c.mv_encoder = {spec(width, 5, 2, kDown, kLeaky), spec(2 * width, 5, 2, kDown, kLeaky),
                  spec(2 * width, 5, 2, kDown, kLeaky),
                  spec(latent_channels, 5, 2, kDown, kLinear)};
  c.mv_decoder = {spec(2 * width, 5, 2, kUp, kLeaky), spec(2 * width, 5, 2, kUp, kLeaky),
                  spec(width, 5, 2, kUp, kLeaky), spec(c.head_channels(), 5, 2, kUp, kLinear)};
  c.hyper_encoder = {spec(hyper_channels, 3, 1, kDown, kLeaky),
                     spec(hyper_channels, 5, 2, kDown, kLeaky),
                     spec(hyper_channels, 5, 2, kDown, kLinear)};
  c.hyper_decoder = {spec(hyper_channels, 5, 2, kUp, kLeaky),
                     spec(latent_channels, 5, 2, kUp, kLeaky),
                     spec(2 * latent_channels, 3, 1, kDown, kLinear)};
  c.postproc = {spec(postproc_width, 3, 1, kDown, kLeaky),
                spec(postproc_width, 3, 1, kDown, kLeaky),
                spec(postproc_width, 3, 1, kDown, kLeaky), spec(3, 3, 1, kDown, kLinear)};
  return c;
}

int ArchitectureConfig::alignment() const {
  return stride_product(mv_encoder, kDown, "mv_encoder") *
         stride_product(hyper_encoder, kDown, "hyper_encoder");
}

void ArchitectureConfig::validate() const {
  require(latent_channels >= 1 && hyper_channels >= 1, ErrorKind::kConfig,
          "latent and hyper-latent channel counts must be positive");
  require(sdc_taps >= 1 && sdc_taps % 2 == 1, ErrorKind::kConfig,
          "SDC kernel size must be odd, got " + std::to_string(sdc_taps));
  const std::pair<const std::vector<LayerSpec>*, const char*> nets[] = {
      {&mv_encoder, "mv_encoder"},     {&mv_decoder, "mv_decoder"},
      {&hyper_encoder, "hyper_encoder"}, {&hyper_decoder, "hyper_decoder"},
      {&postproc, "postproc"}};
  for (const auto& [layers, name] : nets) {
    require(!layers->empty(), ErrorKind::kConfig, std::string(name) + " has no layers");
  }
  require(mv_encoder.back().filters == latent_channels, ErrorKind::kConfig,
          "mv_encoder must end in latent_channels filters");
  require(hyper_encoder.back().filters == hyper_channels, ErrorKind::kConfig,
          "hyper_encoder must end in hyper_channels filters");
  require(hyper_decoder.back().filters == 2 * latent_channels, ErrorKind::kConfig,
          "hyper_decoder must end in 2 * latent_channels filters, has " +
              std::to_string(hyper_decoder.back().filters));
  require(mv_decoder.back().filters == head_channels(), ErrorKind::kConfig,
          "mv_decoder must end in 2 + 2K + 3 = " + std::to_string(head_channels()) + " filters");
  require(postproc.size() == 4 && postproc.back().filters == 3, ErrorKind::kConfig,
          "postproc must have 4 layers ending in 3 filters");
  require(stride_product(postproc, kDown, "postproc") == 1, ErrorKind::kConfig,
          "postproc layers must be stride 1");
  const int mv_down = stride_product(mv_encoder, kDown, "mv_encoder");
  require(stride_product(mv_encoder, kUp, "mv_encoder") == 1, ErrorKind::kConfig,
          "mv_encoder cannot upsample");
  require(stride_product(mv_decoder, kUp, "mv_decoder") == mv_down &&
              stride_product(mv_decoder, kDown, "mv_decoder") == 1,
          ErrorKind::kConfig, "mv_decoder must upsample by the mv_encoder's total stride");
  const int hyper_down = stride_product(hyper_encoder, kDown, "hyper_encoder");
  require(stride_product(hyper_encoder, kUp, "hyper_encoder") == 1, ErrorKind::kConfig,
          "hyper_encoder cannot upsample");
  require(stride_product(hyper_decoder, kUp, "hyper_decoder") == hyper_down &&
              stride_product(hyper_decoder, kDown, "hyper_decoder") == 1,
          ErrorKind::kConfig, "hyper_decoder must upsample by the hyper_encoder's total stride");
}

std::string ArchitectureConfig::to_text() const {
  std::ostringstream out;
  out << "latent_channels = " << latent_channels << "\n";
  out << "hyper_channels = " << hyper_channels << "\n";
  out << "sdc_taps = " << sdc_taps << "\n";
  auto emit = [&](const char* key, const std::vector<LayerSpec>& layers) {
    out << key << " =";
    for (std::size_t i = 0; i < layers.size(); ++i) {
      out << (i ? ", " : " ") << layer_text(layers[i]);
    }
    out << "\n";
  };
  emit("mv_encoder", mv_encoder);
  emit("mv_decoder", mv_decoder);
  emit("hyper_encoder", hyper_encoder);
  emit("hyper_decoder", hyper_decoder);
  emit("postproc", postproc);
  return out.str();
}

ArchitectureConfig ArchitectureConfig::parse(std::string_view text) {
  std::map<std::string, std::string> kv;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    require(eq != std::string::npos, ErrorKind::kConfig,
            "line " + std::to_string(lineno) + ": expected key = value");
    auto key = trim(std::string_view(line).substr(0, eq));
    auto value = trim(std::string_view(line).substr(eq + 1));
    require(kv.emplace(key, value).second, ErrorKind::kConfig, "duplicate key '" + key + "'");
  }
  ArchitectureConfig c;
  auto take = [&](const std::string& key) {
    const auto it = kv.find(key);
    require(it != kv.end(), ErrorKind::kConfig, "missing key '" + key + "'");
    auto v = it->second;
    kv.erase(it);
    return v;
  };
  c.latent_channels = parse_int("latent_channels", take("latent_channels"));
  c.hyper_channels = parse_int("hyper_channels", take("hyper_channels"));
  c.sdc_taps = parse_int("sdc_taps", take("sdc_taps"));
  c.mv_encoder = parse_layers(take("mv_encoder"));
  c.mv_decoder = parse_layers(take("mv_decoder"));
  c.hyper_encoder = parse_layers(take("hyper_encoder"));
  c.hyper_decoder = parse_layers(take("hyper_decoder"));
  c.postproc = parse_layers(take("postproc"));
  require(kv.empty(), ErrorKind::kConfig,
          "unknown key '" + (kv.empty() ? std::string() : kv.begin()->first) + "'");
  c.validate();
  return c;
}

ArchitectureConfig infer_architecture(const ModelWeights& w) {
  ArchitectureConfig c;
  c.mv_encoder = specs_of(w.network(kMvEncoder));
  c.mv_decoder = specs_of(w.network(kMvDecoder));
  c.hyper_encoder = specs_of(w.network(kHyperEncoder));
  c.hyper_decoder = specs_of(w.network(kHyperDecoder));
  c.postproc = specs_of(w.network(kPostproc));
  for (const auto* layers : {&c.mv_encoder, &c.mv_decoder, &c.hyper_encoder, &c.hyper_decoder}) {
    require(!layers->empty(), ErrorKind::kConfig, "weights contain an empty sub-network");
  }
  c.latent_channels = c.mv_encoder.back().filters;
  c.hyper_channels = c.hyper_encoder.back().filters;
  const int heads = c.mv_decoder.back().filters;
  require(heads >= 5 && (heads - 5) % 2 == 0, ErrorKind::kConfig,
          "mv_decoder head width " + std::to_string(heads) + " is not 2 + 2K + 3");
  c.sdc_taps = (heads - 5) / 2;
  return c;
}

void validate_model(const ModelWeights& w) {
  w.validate_chains();
  const auto c = infer_architecture(w);
  c.validate();
  auto first_in = [&](std::string_view name) { return w.network(name).front().in_channels; };
  require(first_in(kMvEncoder) == kMotionInputChannels, ErrorKind::kConfig,
          "mv_encoder must take 8 input channels");
  require(first_in(kMvDecoder) == c.latent_channels && first_in(kHyperEncoder) == c.latent_channels,
          ErrorKind::kConfig, "latent consumers must take latent_channels inputs");
  require(first_in(kHyperDecoder) == c.hyper_channels, ErrorKind::kConfig,
          "hyper_decoder must take hyper_channels inputs");
  require(first_in(kPostproc) == 3, ErrorKind::kConfig, "postproc must take 3 input channels");
  require(w.z_prior.has_value(), ErrorKind::kConfig, "weights lack the z_prior section");
  require(static_cast<int>(w.z_prior->channels.size()) == c.hyper_channels, ErrorKind::kConfig,
          "z_prior has " + std::to_string(w.z_prior->channels.size()) +
              " channels, hyper-latent has " + std::to_string(c.hyper_channels));
}

int model_alignment(const ModelWeights& w) { return infer_architecture(w).alignment(); }

}  // namespace mvr
