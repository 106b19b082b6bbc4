#pragma once

// binary16 from first principles: decode every bit pattern, round by nearest search.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

namespace oracle {

inline double half_bits_to_double(std::uint16_t bits) {
  const int sign = bits >> 15, exp = (bits >> 10) & 0x1f, man = bits & 0x3ff;
  double v;
  if (exp == 0) {
    v = std::ldexp(man, -24);
  } else if (exp == 31) {
    v = man ? NAN : INFINITY;
  } else {
    v = std::ldexp(1024 + man, exp - 25);
  }
  return sign ? -v : v;
}

struct HalfTable {
  std::vector<std::pair<double, std::uint16_t>> finite;  // sorted, +0 only

  HalfTable() {
    for (int b = 0; b < 0x10000; ++b) {
      const double v = half_bits_to_double(static_cast<std::uint16_t>(b));
      if (std::isfinite(v) && !(v == 0 && b != 0)) finite.push_back({v, static_cast<std::uint16_t>(b)});
    }
    std::sort(finite.begin(), finite.end());
  }

  // Nearest binary16 value to v (ties to even mantissa); overflow past 65520 gives infinity.
  double round(double v) const {
    if (std::abs(v) >= 65520.0) return v > 0 ? INFINITY : -INFINITY;
    auto it = std::lower_bound(finite.begin(), finite.end(), std::make_pair(v, std::uint16_t{0}));
    if (it == finite.end()) return finite.back().first;
    if (it->first == v || it == finite.begin()) return it->first;
    const auto lo = *(it - 1), hi = *it;
    const double dl = v - lo.first, dh = hi.first - v;
    if (dl < dh) return lo.first;
    if (dh < dl) return hi.first;
    return (lo.second & 1) == 0 ? lo.first : hi.first;
  }
};

}  // namespace oracle
