#include "mvr/range_coder.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mvr/error.hpp"

namespace mvr {
namespace {

constexpr std::uint32_t kTop = 1u << 24;

const CdfTable& table_for(std::span<const CdfTable> tables, std::size_t i) {
  require(!tables.empty(), ErrorKind::kCoding, "no CDF tables supplied");
  if (tables.size() == 1) return tables[0];
  require(i < tables.size(), ErrorKind::kCoding,
          "no CDF table for symbol index " + std::to_string(i));
  return tables[i];
}

}  // namespace

CdfTable build_cdf(std::span<const double> pmf, int offset) {
  const std::size_t n = pmf.size();
  require(n >= 1, ErrorKind::kCapacity, "empty alphabet");
  require(n <= kCdfTotal, ErrorKind::kCapacity,
          "alphabet of " + std::to_string(n) + " symbols exceeds " + std::to_string(kCdfTotal));
  double sum = 0.0;
  for (double p : pmf) {
    if (!(p >= 0.0 && std::isfinite(p))) fail(ErrorKind::kDomain, "pmf entries must be finite and >= 0");
    sum += p;
  }
  require(std::abs(sum - 1.0) <= 1e-6, ErrorKind::kDomain,
          "pmf sums to " + std::to_string(sum) + ", expected 1");

  CdfTable table;
  table.offset = offset;
  table.cum.resize(n + 1);
  table.cum[0] = 0;
  double prefix = 0.0;
  for (std::size_t i = 1; i < n; ++i) {
    prefix += pmf[i - 1];
    const double scaled = std::floor(prefix / sum * kCdfTotal + 0.5);
    table.cum[i] = static_cast<std::uint32_t>(std::clamp(scaled, 0.0, double(kCdfTotal)));
  }
  table.cum[n] = kCdfTotal;

  std::vector<std::uint32_t> freq(n);
  std::uint32_t deficit = 0;
  for (std::size_t i = 0; i < n; ++i) {
    freq[i] = table.cum[i + 1] - table.cum[i];
    if (freq[i] == 0) {
      freq[i] = 1;
      ++deficit;
    }
  }
  // Taking one unit at a time from the largest bin (lowest index on ties) levels every bin
  // above some L + 1 down to L + 1, then takes one more unit from the lowest-indexed bins
  // sitting at L + 1.
  if (deficit > 0) {
    // Probed levels are all >= 1, so only bins above 1 can contribute.
    std::vector<std::uint32_t> donors;
    for (std::uint32_t f : freq) {
      if (f > 1) donors.push_back(f);
    }
    auto excess = [&](std::uint32_t level) {
      std::uint64_t s = 0;
      for (std::uint32_t f : donors) s += f > level ? f - level : 0;
      return s;
    };
    std::uint32_t lo = 0;  // excess(lo) >= deficit, since the total is at least n
    std::uint32_t hi = *std::max_element(freq.begin(), freq.end());  // excess(hi) == 0
    while (hi - lo > 1) {
      const std::uint32_t mid = lo + (hi - lo) / 2;
      (excess(mid) >= deficit ? lo : hi) = mid;
    }
    std::uint64_t extra = deficit - excess(hi);
    for (std::uint32_t& f : freq) {
      if (f >= hi) {
        f = hi;
        if (extra > 0) {
          --f;
          --extra;
        }
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i) table.cum[i + 1] = table.cum[i] + freq[i];
  return table;
}

void RangeEncoder::encode(int symbol, const CdfTable& table) {
  if (!table.contains(symbol)) {
    fail(ErrorKind::kCoding, "symbol " + std::to_string(symbol) + " at index " +
                                 std::to_string(count_) + " outside the table alphabet");
  }
  const int idx = symbol - table.offset;
  const std::uint32_t r = range_ >> kCdfPrecisionBits;
  low_ += static_cast<std::uint64_t>(r) * table.cum[idx];
  range_ = r * table.frequency(idx);
  while (range_ < kTop) {
    range_ <<= 8;
    shift_low();
  }
  ++count_;
}

void RangeEncoder::shift_low() {
  if (static_cast<std::uint32_t>(low_) < 0xFF000000u || (low_ >> 32) != 0) {
    const auto carry = static_cast<std::uint8_t>(low_ >> 32);
    std::uint8_t pending = cache_;
    do {
      out_.push_back(static_cast<std::uint8_t>(pending + carry));
      pending = 0xFF;
    } while (--cache_size_ != 0);
    cache_ = static_cast<std::uint8_t>(low_ >> 24);
  }
  ++cache_size_;
  low_ = (low_ & 0x00FFFFFFu) << 8;
}

std::vector<std::uint8_t> RangeEncoder::finish() && {
  for (int i = 0; i < 5; ++i) shift_low();
  // The first byte is the initial cache, which can never receive a carry: the coded interval
  // always stays inside [0, 2^32).
  out_.erase(out_.begin());
  return std::move(out_);
}

RangeDecoder::RangeDecoder(std::span<const std::uint8_t> bytes) : in_(bytes) {
  for (int i = 0; i < 4; ++i) code_ = (code_ << 8) | next_byte();
}

std::uint8_t RangeDecoder::next_byte() {
  if (pos_ >= in_.size()) {
    fail(ErrorKind::kTruncation, "range coder stream exhausted after " +
                                     std::to_string(in_.size()) + " bytes (symbol " +
                                     std::to_string(count_) + ")");
  }
  return in_[pos_++];
}

int RangeDecoder::decode(const CdfTable& table) {
  const std::uint32_t r = range_ >> kCdfPrecisionBits;
  const std::uint32_t target = code_ / r;
  if (target >= kCdfTotal) {
    fail(ErrorKind::kCoding, "corrupt range coder stream at symbol " + std::to_string(count_));
  }
  const auto it = std::upper_bound(table.cum.begin() + 1, table.cum.end(), target);
  const int idx = static_cast<int>(it - table.cum.begin()) - 1;
  code_ -= r * table.cum[idx];
  range_ = r * table.frequency(idx);
  while (range_ < kTop) {
    code_ = (code_ << 8) | next_byte();
    range_ <<= 8;
  }
  ++count_;
  return idx + table.offset;
}

std::vector<std::uint8_t> encode_symbols(std::span<const int> symbols,
                                         std::span<const CdfTable> tables) {
  RangeEncoder enc;
  for (std::size_t i = 0; i < symbols.size(); ++i) enc.encode(symbols[i], table_for(tables, i));
  return std::move(enc).finish();
}

std::vector<int> decode_symbols(std::span<const std::uint8_t> bytes,
                                std::span<const CdfTable> tables, std::size_t count) {
  RangeDecoder dec(bytes);
  std::vector<int> out(count);
  for (std::size_t i = 0; i < count; ++i) out[i] = dec.decode(table_for(tables, i));
  return out;
}

double table_cost_bits(std::span<const int> symbols, std::span<const CdfTable> tables) {
  double bits = 0.0;
  for (std::size_t i = 0; i < symbols.size(); ++i) {
    const auto& t = table_for(tables, i);
    require(t.contains(symbols[i]), ErrorKind::kCoding, "symbol outside table alphabet");
    bits += kCdfPrecisionBits - std::log2(static_cast<double>(t.frequency(symbols[i] - t.offset)));
  }
  return bits;
}

}  // namespace mvr
