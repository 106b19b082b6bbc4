#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mvr/entropy_model.hpp"
#include "mvr/nn.hpp"

namespace mvr {

enum class Precision : std::uint8_t { kF32 = 0, kF16 = 1 };

inline constexpr std::string_view kMvEncoder = "mv_encoder";
inline constexpr std::string_view kMvDecoder = "mv_decoder";
inline constexpr std::string_view kHyperEncoder = "hyper_encoder";
inline constexpr std::string_view kHyperDecoder = "hyper_decoder";
inline constexpr std::string_view kPostproc = "postproc";
inline constexpr std::string_view kZPrior = "z_prior";

inline constexpr std::uint32_t kWeightFileVersion = 1;

struct SubNetwork {
  std::string name;
  std::vector<ConvLayer> layers;
  bool operator==(const SubNetwork&) const = default;
};

// One quality level's parameters. `precision` is the storage format; in memory every value is
// a float (f16 files are widened on load).
struct ModelWeights {
  Precision precision = Precision::kF32;
  std::uint8_t quality = 0;
  std::vector<SubNetwork> networks;
  std::optional<FactorizedPrior> z_prior;

  // Throws kConfig when the sub-network is absent.
  const std::vector<ConvLayer>& network(std::string_view name) const;
  std::vector<ConvLayer>& network(std::string_view name);
  bool has_network(std::string_view name) const;

  // Throws kShape when layer k's out_channels differ from layer k+1's in_channels.
  void validate_chains() const;

  bool operator==(const ModelWeights&) const = default;
};

// Nearest binary16 value (round to nearest even), returned widened to float.
float round_to_half(float v);

// Serialized weight+bias payload of all conv layers at the model's storage precision.
std::size_t layer_payload_bytes(const ModelWeights& w);

std::vector<std::uint8_t> save_weights(const ModelWeights& w);
ModelWeights load_weights(std::span<const std::uint8_t> bytes);
void save_weights_file(const std::filesystem::path& path, const ModelWeights& w);
ModelWeights load_weights_file(const std::filesystem::path& path);

}  // namespace mvr
