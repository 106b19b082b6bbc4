#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <tuple>

#include "mvr/byte_io.hpp"
#include "mvr/frame_io.hpp"
#include "mvr/sdc_motion.hpp"

namespace mvr {
namespace {

constexpr float kFloMagic = 202021.25f;

std::vector<int> luma_bytes(const Tensor& t) {
  auto src = t.channel(0);
  std::vector<int> out(src.size());
  for (std::size_t i = 0; i < src.size(); ++i) out[i] = unit_to_byte(src[i]);
  return out;
}

// Bilinear interpolation of per-block values at pixel centres; block b's centre sits at
// b * block + (block - 1) / 2.
float interpolate_axis_weight(int pixel, int block, int blocks, int& b0, int& b1) {
  const double t = (pixel - (block - 1) / 2.0) / block;
  const double fl = std::floor(t);
  b0 = std::clamp(static_cast<int>(fl), 0, blocks - 1);
  b1 = std::clamp(static_cast<int>(fl) + 1, 0, blocks - 1);
  return static_cast<float>(t - fl);
}

}  // namespace

Tensor block_matching_flow(const Tensor& ref, const Tensor& target, int block, int radius) {
  require(ref.shape() == target.shape(), ErrorKind::kShape,
          "reference " + to_string(ref.shape()) + " and target " + to_string(target.shape()) +
              " differ");
  require(block > 0 && radius >= 0, ErrorKind::kUsage, "block must be > 0 and radius >= 0");
  const int h = ref.height(), w = ref.width();
  require(h % block == 0 && w % block == 0, ErrorKind::kShape,
          "frame " + std::to_string(w) + "x" + std::to_string(h) + " is not a multiple of block " +
              std::to_string(block));
  const auto r = luma_bytes(ref);
  const auto t = luma_bytes(target);
  const int bw = w / block, bh = h / block;
  std::vector<int> bu(static_cast<std::size_t>(bw) * bh), bv(bu.size());

  for (int by = 0; by < bh; ++by) {
    for (int bx = 0; bx < bw; ++bx) {
      // Lexicographic key: (SAD, |u|+|v|, v, u).
      auto best = std::make_tuple(std::numeric_limits<long>::max(), 0, 0, 0);
      for (int v = -radius; v <= radius; ++v) {
        for (int u = -radius; u <= radius; ++u) {
          long sad = 0;
          for (int y = by * block; y < (by + 1) * block; ++y) {
            const int sy = std::clamp(y + v, 0, h - 1);
            const int* trow = t.data() + static_cast<std::size_t>(y) * w;
            const int* rrow = r.data() + static_cast<std::size_t>(sy) * w;
            for (int x = bx * block; x < (bx + 1) * block; ++x) {
              sad += std::abs(trow[x] - rrow[std::clamp(x + u, 0, w - 1)]);
            }
          }
          const auto key = std::make_tuple(sad, std::abs(u) + std::abs(v), v, u);
          if (key < best) best = key;
        }
      }
      bu[static_cast<std::size_t>(by) * bw + bx] = std::get<3>(best);
      bv[static_cast<std::size_t>(by) * bw + bx] = std::get<2>(best);
    }
  }

  Tensor flow(2, h, w);
  for (int y = 0; y < h; ++y) {
    int y0, y1;
    const float fy = interpolate_axis_weight(y, block, bh, y0, y1);
    for (int x = 0; x < w; ++x) {
      int x0, x1;
      const float fx = interpolate_axis_weight(x, block, bw, x0, x1);
      for (int c = 0; c < 2; ++c) {
        const auto& f = c == 0 ? bu : bv;
        const float a = static_cast<float>(f[static_cast<std::size_t>(y0) * bw + x0]);
        const float b = static_cast<float>(f[static_cast<std::size_t>(y0) * bw + x1]);
        const float cc = static_cast<float>(f[static_cast<std::size_t>(y1) * bw + x0]);
        const float d = static_cast<float>(f[static_cast<std::size_t>(y1) * bw + x1]);
        const float top = a + fx * (b - a);
        const float bottom = cc + fx * (d - cc);
        flow(c, y, x) = top + fy * (bottom - top);
      }
    }
  }
  return flow;
}

std::vector<std::uint8_t> write_flo(const Tensor& flow) {
  require(flow.channels() == 2, ErrorKind::kShape,
          "flow must have 2 channels, got " + to_string(flow.shape()));
  ByteWriter out;
  out.f32(kFloMagic);
  out.i32(flow.width());
  out.i32(flow.height());
  for (int y = 0; y < flow.height(); ++y) {
    for (int x = 0; x < flow.width(); ++x) {
      out.f32(flow(0, y, x));
      out.f32(flow(1, y, x));
    }
  }
  return std::move(out).take();
}

Tensor read_flo(std::span<const std::uint8_t> bytes, float max_abs) {
  ByteReader in(bytes, "flow file");
  const float magic = in.f32();
  require(magic == kFloMagic, ErrorKind::kFormat, "bad .flo magic");
  const int w = in.i32();
  const int h = in.i32();
  require(w > 0 && h > 0 && w < (1 << 16) && h < (1 << 16), ErrorKind::kFormat,
          "bad .flo dimensions " + std::to_string(w) + "x" + std::to_string(h));
  Tensor flow(2, h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      flow(0, y, x) = in.f32();
      flow(1, y, x) = in.f32();
    }
  }
  require(in.done(), ErrorKind::kFormat, "trailing bytes after .flo payload");
  for (float v : flow.values()) {
    require(std::isfinite(v) && std::abs(v) <= max_abs, ErrorKind::kFormat,
            "flow value " + std::to_string(v) + " is not finite or exceeds " +
                std::to_string(max_abs));
  }
  return flow;
}

void write_flo_file(const std::filesystem::path& path, const Tensor& flow) {
  write_file_atomic(path, write_flo(flow));
}

Tensor read_flo_file(const std::filesystem::path& path, float max_abs) {
  return read_flo(read_file_bytes(path), max_abs);
}

}  // namespace mvr
