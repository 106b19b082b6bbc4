#pragma once

#include <doctest.h>

#include <algorithm>
#include <functional>
#include <optional>

#include "mvr/error.hpp"
#include "mvr/frame_io.hpp"
#include "mvr/random.hpp"

// Runs f and reports the ErrorKind it threw (or nullopt).
inline std::optional<mvr::ErrorKind> thrown_kind(const std::function<void()>& f) {
  try {
    f();
  } catch (const mvr::Error& e) {
    return e.kind();
  }
  return std::nullopt;
}

#define CHECK_KIND(expr, kind) CHECK(thrown_kind([&] { (void)(expr); }) == (kind))

inline mvr::Frame420 random_frame(int w, int h, mvr::Rng& rng) {
  mvr::Frame420 f(w, h);
  for (auto* p : {&f.y, &f.u, &f.v}) {
    for (auto& b : *p) b = static_cast<std::uint8_t>(rng.uniform_int(0, 255));
  }
  return f;
}

inline mvr::Tensor random_tensor(mvr::Shape3 s, mvr::Rng& rng, double scale = 1.0) {
  mvr::Tensor t(s);
  for (float& v : t.values()) v = static_cast<float>(scale * rng.normal());
  return t;
}
