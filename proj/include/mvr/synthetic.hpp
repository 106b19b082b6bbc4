#pragma once

#include <cstdint>

#include "mvr/frame_io.hpp"

namespace mvr {

struct FramePair {
  Frame420 ref;
  Frame420 target;
};

// Seeded textured content (sinusoid mixture, soft blobs, sensor noise) and a second frame of
// the same scene under smooth sub-pixel motion of up to about 8 px.
FramePair synthetic_pair(int width, int height, std::uint64_t seed);

}  // namespace mvr
