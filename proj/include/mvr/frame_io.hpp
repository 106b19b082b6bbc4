#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "mvr/tensor.hpp"

namespace mvr {

// 8-bit planar YUV 4:2:0. Width and height are even.
struct Frame420 {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> y;
  std::vector<std::uint8_t> u;
  std::vector<std::uint8_t> v;

  Frame420() = default;
  Frame420(int width, int height);  // zero-filled

  std::size_t byte_size() const { return y.size() + u.size() + v.size(); }
  bool operator==(const Frame420&) const = default;
};

// 8-bit planar YUV 4:4:4; all planes width x height.
struct Frame444 {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> y;
  std::vector<std::uint8_t> u;
  std::vector<std::uint8_t> v;

  Frame444() = default;
  Frame444(int width, int height);

  std::span<const std::uint8_t> plane(int index) const;
  std::span<std::uint8_t> plane(int index);
  bool operator==(const Frame444&) const = default;
};

std::size_t yuv420_frame_bytes(int width, int height);

Frame420 read_yuv420(std::span<const std::uint8_t> bytes, int width, int height);
std::vector<std::uint8_t> write_yuv420(const Frame420& f);

// Raw headerless files. read_yuv420_file reads frame `index` of a multi-frame file.
Frame420 read_yuv420_file(const std::filesystem::path& path, int width, int height,
                          int index = 0);
int count_yuv420_frames(const std::filesystem::path& path, int width, int height);
void write_yuv420_file(const std::filesystem::path& path, const Frame420& f);

Frame444 upsample_420_to_444(const Frame420& f);
Frame420 downsample_444_to_420(const Frame444& f);

Tensor frame_to_tensor(const Frame444& f);
Frame444 tensor_to_frame(const Tensor& t);

// Half-away-from-zero rounding of a unit-range value to a byte, with clamping.
std::uint8_t unit_to_byte(double value);

// Whole-file helpers shared by the CLI and container code.
std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
// Writes to a sibling temp file and renames over the destination.
void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace mvr
