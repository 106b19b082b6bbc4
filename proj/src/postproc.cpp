#include "mvr/postproc.hpp"

#include <algorithm>

namespace mvr {

Tensor postprocess(const Tensor& recon, const ModelWeights& w) {
  const auto& layers = w.network(kPostproc);
  require(layers.size() == kPostprocLayers, ErrorKind::kConfig,
          "postproc has " + std::to_string(layers.size()) + " layers, expected " +
              std::to_string(kPostprocLayers));
  require(layers.front().in_channels == 3 && layers.back().out_channels == 3, ErrorKind::kConfig,
          "postproc must map 3 channels to 3");
  require(recon.channels() == 3, ErrorKind::kShape,
          "postproc input must have 3 channels, got " + to_string(recon.shape()));
  Tensor out = run_chain(recon, layers);
  auto o = out.values();
  auto r = recon.values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = std::clamp(r[i] + o[i], 0.0f, 1.0f);
  return out;
}

}  // namespace mvr
