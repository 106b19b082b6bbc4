#include <cmath>

#include "mvr/range_coder.hpp"
#include "test_util.hpp"

using namespace mvr;

namespace {

std::vector<std::uint32_t> freqs(const CdfTable& t) {
  std::vector<std::uint32_t> f;
  for (int i = 0; i < t.alphabet_size(); ++i) f.push_back(t.frequency(i));
  return f;
}

// One unit at a time from the largest bin, lowest index on ties.
std::vector<std::uint32_t> floor_by_single_steps(std::vector<std::uint32_t> f) {
  std::uint32_t deficit = 0;
  for (auto& x : f) {
    if (x == 0) {
      x = 1;
      ++deficit;
    }
  }
  while (deficit-- > 0) {
    std::size_t top = 0;
    for (std::size_t i = 1; i < f.size(); ++i) {
      if (f[i] > f[top]) top = i;
    }
    --f[top];
  }
  return f;
}

std::vector<double> random_pmf(Rng& rng, int n, bool spiky) {
  std::vector<double> p(n);
  double s = 0;
  for (auto& x : p) {
    x = spiky ? std::pow(rng.uniform(), 12) : rng.uniform();
    if (spiky && rng.uniform() < 0.5) x = 0;
    s += x;
  }
  if (s == 0) {
    p[0] = s = 1;
  }
  for (auto& x : p) x /= s;
  return p;
}

}  // namespace

TEST_CASE("build_cdf examples") {
  CHECK(build_cdf(std::vector<double>{0.5, 0.5}).cum == std::vector<std::uint32_t>{0, 32768, 65536});
  CHECK(freqs(build_cdf(std::vector<double>{1.0, 0.0})) == std::vector<std::uint32_t>{65535, 1});
  CHECK(freqs(build_cdf(std::vector<double>{0.6, 0.3, 0.1})) ==
        std::vector<std::uint32_t>{39322, 19660, 6554});
  CHECK(build_cdf(std::vector<double>{1.0}, 7).cum == std::vector<std::uint32_t>{0, 65536});
}

TEST_CASE("build_cdf errors") {
  CHECK_KIND(build_cdf(std::vector<double>(65537, 1.0 / 65537)), ErrorKind::kCapacity);
  CHECK_KIND(build_cdf(std::vector<double>{0.5, 0.4}), ErrorKind::kDomain);
  CHECK_KIND(build_cdf(std::vector<double>{1.5, -0.5}), ErrorKind::kDomain);
}

TEST_CASE("build_cdf floor matches unit-by-unit stealing") {
  Rng rng(1);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = static_cast<int>(rng.uniform_int(1, trial % 3 == 0 ? 3000 : 600));
    const auto pmf = random_pmf(rng, n, trial % 2 == 0);
    const CdfTable t = build_cdf(pmf);
    REQUIRE(t.cum.back() == kCdfTotal);
    // Unfloored frequencies: cumulative rounding half up.
    std::vector<std::uint32_t> raw;
    double prefix = 0;
    std::uint32_t prev = 0;
    for (int i = 1; i <= n; ++i) {
      prefix += pmf[i - 1];
      const auto c = i == n ? kCdfTotal
                            : static_cast<std::uint32_t>(std::floor(prefix * kCdfTotal + 0.5));
      raw.push_back(c - prev);
      prev = c;
    }
    CHECK(freqs(t) == floor_by_single_steps(raw));
    for (int i = 0; i < n; ++i) CHECK(t.frequency(i) >= 1);
  }
}

TEST_CASE("roundtrip of random symbols") {
  Rng rng(2);
  std::vector<CdfTable> tables;
  std::vector<int> symbols;
  for (int i = 0; i < 10000; ++i) {
    const int n = static_cast<int>(rng.uniform_int(1, 40));
    const int offset = static_cast<int>(rng.uniform_int(-20, 20));
    tables.push_back(build_cdf(random_pmf(rng, n, i % 3 == 0), offset));
    symbols.push_back(offset + static_cast<int>(rng.uniform_int(0, n - 1)));
  }
  const auto bytes = encode_symbols(symbols, tables);
  CHECK(decode_symbols(bytes, tables, symbols.size()) == symbols);
  CHECK(encode_symbols(symbols, tables) == bytes);
  CHECK(bytes.size() * 8.0 <= table_cost_bits(symbols, tables) + 32 * 8);
}

TEST_CASE("near-degenerate tables roundtrip") {
  Rng rng(3);
  std::vector<double> pmf(511, 0.0);
  pmf[300] = 1.0;
  const CdfTable t = build_cdf(pmf, -255);
  std::vector<int> symbols;
  for (int i = 0; i < 3000; ++i) {
    symbols.push_back(rng.uniform() < 0.9 ? 45 : static_cast<int>(rng.uniform_int(-255, 255)));
  }
  const std::vector<CdfTable> one{t};
  CHECK(decode_symbols(encode_symbols(symbols, one), one, symbols.size()) == symbols);
}

TEST_CASE("uniform four-symbol stream size") {
  Rng rng(4);
  const std::vector<CdfTable> t{build_cdf(std::vector<double>{0.25, 0.25, 0.25, 0.25})};
  std::vector<int> symbols;
  for (int i = 0; i < 1024; ++i) symbols.push_back(static_cast<int>(rng.uniform_int(0, 3)));
  const auto bytes = encode_symbols(symbols, t);
  CHECK(bytes.size() >= 256);
  CHECK(bytes.size() <= 262);
}

TEST_CASE("empty stream") {
  const std::vector<CdfTable> t{build_cdf(std::vector<double>{0.5, 0.5})};
  const auto bytes = encode_symbols({}, t);
  CHECK(decode_symbols(bytes, t, 0).empty());
}

TEST_CASE("coder errors") {
  const std::vector<CdfTable> t{build_cdf(std::vector<double>{0.5, 0.5})};
  const std::vector<int> bad{0, 1, 2};
  CHECK_KIND(encode_symbols(bad, t), ErrorKind::kCoding);
  Rng rng(5);
  std::vector<int> symbols;
  for (int i = 0; i < 400; ++i) symbols.push_back(static_cast<int>(rng.uniform_int(0, 1)));
  auto bytes = encode_symbols(symbols, t);
  bytes.resize(bytes.size() / 2);
  CHECK_KIND(decode_symbols(bytes, t, symbols.size()), ErrorKind::kTruncation);
}

TEST_CASE("compression efficiency over random trials") {
  Rng rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = static_cast<int>(rng.uniform_int(2, 64));
    const std::vector<CdfTable> t{build_cdf(random_pmf(rng, n, trial % 2 == 1))};
    std::vector<int> symbols;
    const int count = static_cast<int>(rng.uniform_int(0, 5000));
    // Draw from the quantized table itself.
    for (int i = 0; i < count; ++i) {
      const auto u = static_cast<std::uint32_t>(rng.uniform_int(0, kCdfTotal - 1));
      const auto it = std::upper_bound(t[0].cum.begin(), t[0].cum.end(), u);
      symbols.push_back(static_cast<int>(it - t[0].cum.begin()) - 1);
    }
    const auto bytes = encode_symbols(symbols, t);
    CHECK(bytes.size() <= table_cost_bits(symbols, t) / 8 + 32);
    CHECK(decode_symbols(bytes, t, symbols.size()) == symbols);
  }
}
