#pragma once

#include <array>
#include <cstdint>
#include <span>

#include "mvr/frame_io.hpp"

namespace mvr {

inline constexpr std::array<double, 5> kMsSsimWeights = {0.0448, 0.2856, 0.3001, 0.2363, 0.1333};
inline constexpr int kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;

struct MsSsimResult {
  double score = 0.0;
  int scales = 0;        // scales actually evaluated
  bool reduced = false;  // fewer than five because the frame is too small
};

// Luma MS-SSIM of two 8-bit planes. Scales are dropped (weights renormalized) while the
// coarsest plane would be narrower than the window; throws kDimension below one scale.
MsSsimResult ms_ssim_plane(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b,
                           int width, int height);
MsSsimResult ms_ssim(const Frame444& a, const Frame444& b);
MsSsimResult ms_ssim(const Frame420& a, const Frame420& b);

// Returns +infinity for identical inputs.
double psnr(const Frame444& a, const Frame444& b);
double psnr(const Frame420& a, const Frame420& b);

}  // namespace mvr
