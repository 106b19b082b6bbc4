#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace mvr {

inline constexpr int kCdfPrecisionBits = 16;
inline constexpr std::uint32_t kCdfTotal = 1u << kCdfPrecisionBits;

// Quantized cumulative frequencies over a contiguous integer alphabet starting at `offset`.
// cum has alphabet_size + 1 entries, strictly increasing from 0 to kCdfTotal.
struct CdfTable {
  std::vector<std::uint32_t> cum;
  int offset = 0;

  int alphabet_size() const { return static_cast<int>(cum.size()) - 1; }
  std::uint32_t frequency(int index) const { return cum[index + 1] - cum[index]; }
  bool contains(int symbol) const {
    return symbol >= offset && symbol - offset < alphabet_size();
  }
  bool operator==(const CdfTable&) const = default;
};

// Cumulative sums of the normalized pmf rounded half up to 1/65536, then every empty bin
// given frequency 1 by taking units from the current largest bin (lowest index on ties).
// Throws kCapacity when the alphabet exceeds 65536 symbols and kDomain when the pmf is not
// normalized to within 1e-6.
CdfTable build_cdf(std::span<const double> pmf, int offset = 0);

// 32-bit renormalizing range coder with byte-wise carry propagation.
class RangeEncoder {
 public:
  void encode(int symbol, const CdfTable& table);
  // Flushes the coder state; the encoder must not be used afterwards.
  std::vector<std::uint8_t> finish() &&;

 private:
  void shift_low();

  std::uint64_t low_ = 0;
  std::uint32_t range_ = 0xFFFFFFFFu;
  std::uint8_t cache_ = 0;
  std::uint64_t cache_size_ = 1;
  std::uint64_t count_ = 0;
  std::vector<std::uint8_t> out_;
};

class RangeDecoder {
 public:
  explicit RangeDecoder(std::span<const std::uint8_t> bytes);

  int decode(const CdfTable& table);
  std::size_t consumed() const { return pos_; }

 private:
  std::uint8_t next_byte();

  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
  std::uint32_t code_ = 0;
  std::uint32_t range_ = 0xFFFFFFFFu;
  std::uint64_t count_ = 0;
};

// Symbol i is coded with tables[i] (or tables[0] when a single table is given).
std::vector<std::uint8_t> encode_symbols(std::span<const int> symbols,
                                         std::span<const CdfTable> tables);
std::vector<int> decode_symbols(std::span<const std::uint8_t> bytes,
                                std::span<const CdfTable> tables, std::size_t count);

// Sum of -log2(freq / 65536) over the coded symbols.
double table_cost_bits(std::span<const int> symbols, std::span<const CdfTable> tables);

}  // namespace mvr
