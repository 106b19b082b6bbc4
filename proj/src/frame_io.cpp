#include "mvr/frame_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <system_error>

namespace mvr {
namespace {

void check_even_positive(int width, int height) {
  require(width > 0 && height > 0, ErrorKind::kDimension,
          "frame dimensions must be positive, got " + std::to_string(width) + "x" +
              std::to_string(height));
  require(width % 2 == 0 && height % 2 == 0, ErrorKind::kDimension,
          "4:2:0 frame dimensions must be even, got " + std::to_string(width) + "x" +
              std::to_string(height));
}

}  // namespace

Frame420::Frame420(int w, int h) : width(w), height(h) {
  check_even_positive(w, h);
  y.assign(static_cast<std::size_t>(w) * h, 0);
  u.assign(static_cast<std::size_t>(w / 2) * (h / 2), 0);
  v.assign(u.size(), 0);
}

Frame444::Frame444(int w, int h) : width(w), height(h) {
  require(w > 0 && h > 0, ErrorKind::kDimension, "frame dimensions must be positive");
  y.assign(static_cast<std::size_t>(w) * h, 0);
  u.assign(y.size(), 0);
  v.assign(y.size(), 0);
}

std::span<const std::uint8_t> Frame444::plane(int index) const {
  switch (index) {
    case 0: return y;
    case 1: return u;
    case 2: return v;
  }
  fail(ErrorKind::kIndex, "plane index " + std::to_string(index));
}

std::span<std::uint8_t> Frame444::plane(int index) {
  switch (index) {
    case 0: return y;
    case 1: return u;
    case 2: return v;
  }
  fail(ErrorKind::kIndex, "plane index " + std::to_string(index));
}

std::size_t yuv420_frame_bytes(int width, int height) {
  return static_cast<std::size_t>(width) * height * 3 / 2;
}

Frame420 read_yuv420(std::span<const std::uint8_t> bytes, int width, int height) {
  check_even_positive(width, height);
  const std::size_t expected = yuv420_frame_bytes(width, height);
  require(bytes.size() == expected, ErrorKind::kFormat,
          "expected " + std::to_string(expected) + " bytes for a " + std::to_string(width) +
              "x" + std::to_string(height) + " YUV420 frame, got " +
              std::to_string(bytes.size()));
  Frame420 f(width, height);
  auto it = bytes.begin();
  std::copy_n(it, f.y.size(), f.y.begin());
  it += static_cast<std::ptrdiff_t>(f.y.size());
  std::copy_n(it, f.u.size(), f.u.begin());
  it += static_cast<std::ptrdiff_t>(f.u.size());
  std::copy_n(it, f.v.size(), f.v.begin());
  return f;
}

std::vector<std::uint8_t> write_yuv420(const Frame420& f) {
  std::vector<std::uint8_t> out;
  out.reserve(f.byte_size());
  out.insert(out.end(), f.y.begin(), f.y.end());
  out.insert(out.end(), f.u.begin(), f.u.end());
  out.insert(out.end(), f.v.begin(), f.v.end());
  return out;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorKind::kIo, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return bytes;
}

void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    require(static_cast<bool>(out), ErrorKind::kIo, "cannot create " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) {
      out.close();
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      fail(ErrorKind::kIo, "short write to " + tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    fail(ErrorKind::kIo, "cannot rename onto " + path.string());
  }
}

int count_yuv420_frames(const std::filesystem::path& path, int width, int height) {
  check_even_positive(width, height);
  std::error_code ec;
  const auto size = std::filesystem::file_size(path, ec);
  require(!ec, ErrorKind::kIo, "cannot stat " + path.string());
  const auto frame = yuv420_frame_bytes(width, height);
  require(size % frame == 0 && size > 0, ErrorKind::kFormat,
          path.string() + " size " + std::to_string(size) +
              " is not a whole number of " + std::to_string(frame) + "-byte frames");
  return static_cast<int>(size / frame);
}

Frame420 read_yuv420_file(const std::filesystem::path& path, int width, int height, int index) {
  if (index == 0) {
    auto bytes = read_file_bytes(path);
    // A single-frame read of a longer file takes the first frame.
    const auto frame = yuv420_frame_bytes(width, height);
    if (bytes.size() > frame && bytes.size() % frame == 0) bytes.resize(frame);
    return read_yuv420(bytes, width, height);
  }
  const int frames = count_yuv420_frames(path, width, height);
  require(index >= 0 && index < frames, ErrorKind::kIndex,
          "frame " + std::to_string(index) + " out of " + std::to_string(frames));
  const auto frame = yuv420_frame_bytes(width, height);
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorKind::kIo, "cannot open " + path.string());
  in.seekg(static_cast<std::streamoff>(frame * index));
  std::vector<std::uint8_t> bytes(frame);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(frame));
  require(static_cast<std::size_t>(in.gcount()) == frame, ErrorKind::kTruncation,
          "short read from " + path.string());
  return read_yuv420(bytes, width, height);
}

void write_yuv420_file(const std::filesystem::path& path, const Frame420& f) {
  write_file_atomic(path, write_yuv420(f));
}

Frame444 upsample_420_to_444(const Frame420& f) {
  check_even_positive(f.width, f.height);
  require(f.y.size() == static_cast<std::size_t>(f.width) * f.height &&
              f.u.size() == f.y.size() / 4 && f.v.size() == f.y.size() / 4,
          ErrorKind::kFormat, "plane lengths do not match frame dimensions");
  Frame444 out(f.width, f.height);
  out.y = f.y;
  const int cw = f.width / 2;
  for (int yy = 0; yy < f.height; ++yy) {
    const std::size_t src = static_cast<std::size_t>(yy / 2) * cw;
    const std::size_t dst = static_cast<std::size_t>(yy) * f.width;
    for (int x = 0; x < f.width; ++x) {
      out.u[dst + x] = f.u[src + x / 2];
      out.v[dst + x] = f.v[src + x / 2];
    }
  }
  return out;
}

Frame420 downsample_444_to_420(const Frame444& f) {
  check_even_positive(f.width, f.height);
  Frame420 out(f.width, f.height);
  out.y = f.y;
  const int cw = f.width / 2;
  const int ch = f.height / 2;
  auto reduce = [&](const std::vector<std::uint8_t>& src, std::vector<std::uint8_t>& dst) {
    for (int yy = 0; yy < ch; ++yy) {
      const std::size_t r0 = static_cast<std::size_t>(2 * yy) * f.width;
      const std::size_t r1 = r0 + f.width;
      for (int x = 0; x < cw; ++x) {
        const int sum = src[r0 + 2 * x] + src[r0 + 2 * x + 1] + src[r1 + 2 * x] +
                        src[r1 + 2 * x + 1];
        dst[static_cast<std::size_t>(yy) * cw + x] = static_cast<std::uint8_t>((sum + 2) / 4);
      }
    }
  };
  reduce(f.u, out.u);
  reduce(f.v, out.v);
  return out;
}

std::uint8_t unit_to_byte(double value) {
  const double clamped = std::clamp(value, 0.0, 1.0);
  return static_cast<std::uint8_t>(std::round(clamped * 255.0));
}

Tensor frame_to_tensor(const Frame444& f) {
  Tensor t(3, f.height, f.width);
  for (int c = 0; c < 3; ++c) {
    auto src = f.plane(c);
    auto dst = t.channel(c);
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = static_cast<float>(src[i]) / 255.0f;
  }
  return t;
}

Frame444 tensor_to_frame(const Tensor& t) {
  require(t.channels() == 3, ErrorKind::kShape,
          "tensor_to_frame needs 3 channels, got " + to_string(t.shape()));
  Frame444 f(t.width(), t.height());
  for (int c = 0; c < 3; ++c) {
    auto src = t.channel(c);
    auto dst = f.plane(c);
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = unit_to_byte(src[i]);
  }
  return f;
}

}  // namespace mvr
