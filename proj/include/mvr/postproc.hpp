#pragma once

#include "mvr/tensor.hpp"
#include "mvr/weights.hpp"

namespace mvr {

inline constexpr int kPostprocLayers = 4;

// recon + net(recon), clamped to [0, 1]. Throws kConfig unless the postproc section has four
// layers mapping 3 channels back to 3.
Tensor postprocess(const Tensor& recon, const ModelWeights& w);

}  // namespace mvr
