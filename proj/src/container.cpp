#include <zlib.h>

#include <algorithm>

#include "mvr/byte_io.hpp"
#include "mvr/codec.hpp"

namespace mvr {
namespace {

constexpr std::string_view kMagic = "MVRC";

}  // namespace

std::uint32_t payload_crc(const Container& c) {
  uLong crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, c.z_bytes.data(), static_cast<uInt>(c.z_bytes.size()));
  crc = crc32(crc, c.y_bytes.data(), static_cast<uInt>(c.y_bytes.size()));
  return static_cast<std::uint32_t>(crc);
}

std::vector<std::uint8_t> serialize_container(const Container& c) {
  require(c.width > 0 && c.height > 0, ErrorKind::kDimension, "container needs positive dimensions");
  ByteWriter out;
  out.text(kMagic);
  out.u16(kContainerVersion);
  out.u32(static_cast<std::uint32_t>(c.width));
  out.u32(static_cast<std::uint32_t>(c.height));
  out.u8(c.quality);
  out.u8(c.flags);
  out.u32(static_cast<std::uint32_t>(c.z_bytes.size()));
  out.bytes(c.z_bytes);
  out.u32(static_cast<std::uint32_t>(c.y_bytes.size()));
  out.bytes(c.y_bytes);
  out.u32(payload_crc(c));
  return std::move(out).take();
}

Container parse_container(std::span<const std::uint8_t> bytes) {
  ByteReader in(bytes, "container");
  require(bytes.size() >= kMagic.size() && in.text(kMagic.size()) == kMagic, ErrorKind::kFormat,
          "not an MVRC container");
  const std::uint16_t version = in.u16();
  require(version == kContainerVersion, ErrorKind::kVersion,
          "container version " + std::to_string(version) + ", expected " +
              std::to_string(kContainerVersion));
  Container c;
  const std::uint32_t w = in.u32();
  const std::uint32_t h = in.u32();
  require(w >= 1 && h >= 1 && w <= (1u << 16) && h <= (1u << 16), ErrorKind::kFormat,
          "implausible frame size " + std::to_string(w) + "x" + std::to_string(h));
  c.width = static_cast<int>(w);
  c.height = static_cast<int>(h);
  c.quality = in.u8();
  c.flags = in.u8();
  const std::uint32_t zlen = in.u32();
  auto z = in.bytes(zlen);
  c.z_bytes.assign(z.begin(), z.end());
  const std::uint32_t ylen = in.u32();
  auto y = in.bytes(ylen);
  c.y_bytes.assign(y.begin(), y.end());
  const std::uint32_t crc = in.u32();
  require(in.done(), ErrorKind::kFormat, "trailing bytes after container");
  require(crc == payload_crc(c), ErrorKind::kCorruption, "container checksum mismatch");
  return c;
}

}  // namespace mvr
