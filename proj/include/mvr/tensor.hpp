#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "mvr/error.hpp"

namespace mvr {

struct Shape3 {
  int channels = 0;
  int height = 0;
  int width = 0;

  std::size_t size() const {
    return static_cast<std::size_t>(channels) * height * width;
  }
  std::size_t plane() const { return static_cast<std::size_t>(height) * width; }
  bool operator==(const Shape3&) const = default;
};

std::string to_string(const Shape3& s);

// Dense (C, H, W) array, channel-major then row-major.
template <typename T>
class BasicTensor {
 public:
  using value_type = T;

  BasicTensor() = default;
  explicit BasicTensor(Shape3 shape, T fill = T(0))
      : shape_(shape), data_(shape.size(), fill) {
    require(shape.channels >= 0 && shape.height >= 0 && shape.width >= 0,
            ErrorKind::kShape, "negative tensor extent " + to_string(shape));
  }
  BasicTensor(int c, int h, int w, T fill = T(0)) : BasicTensor(Shape3{c, h, w}, fill) {}
  BasicTensor(Shape3 shape, std::vector<T> data) : shape_(shape), data_(std::move(data)) {
    require(data_.size() == shape.size(), ErrorKind::kShape,
            "data length " + std::to_string(data_.size()) + " does not match " +
                to_string(shape));
  }

  const Shape3& shape() const { return shape_; }
  int channels() const { return shape_.channels; }
  int height() const { return shape_.height; }
  int width() const { return shape_.width; }
  std::size_t size() const { return data_.size(); }

  T& operator()(int c, int y, int x) {
    return data_[(static_cast<std::size_t>(c) * shape_.height + y) * shape_.width + x];
  }
  const T& operator()(int c, int y, int x) const {
    return data_[(static_cast<std::size_t>(c) * shape_.height + y) * shape_.width + x];
  }

  std::span<T> channel(int c) {
    return std::span<T>(data_).subspan(static_cast<std::size_t>(c) * shape_.plane(),
                                       shape_.plane());
  }
  std::span<const T> channel(int c) const {
    return std::span<const T>(data_).subspan(static_cast<std::size_t>(c) * shape_.plane(),
                                             shape_.plane());
  }

  std::span<T> values() { return data_; }
  std::span<const T> values() const { return data_; }
  std::vector<T>& storage() { return data_; }
  const std::vector<T>& storage() const { return data_; }

  bool operator==(const BasicTensor&) const = default;

 private:
  Shape3 shape_{};
  std::vector<T> data_;
};

using Tensor = BasicTensor<float>;
using TensorD = BasicTensor<double>;

// Channel range [first, first + count) as a new tensor.
template <typename T>
BasicTensor<T> slice_channels(const BasicTensor<T>& t, int first, int count) {
  require(first >= 0 && count >= 0 && first + count <= t.channels(), ErrorKind::kShape,
          "channel slice out of range for " + to_string(t.shape()));
  BasicTensor<T> out(count, t.height(), t.width());
  for (int c = 0; c < count; ++c) {
    auto src = t.channel(first + c);
    std::copy(src.begin(), src.end(), out.channel(c).begin());
  }
  return out;
}

template <typename T>
BasicTensor<T> concat_channels(std::span<const BasicTensor<T>* const> parts) {
  require(!parts.empty(), ErrorKind::kShape, "concat of zero tensors");
  const int h = parts.front()->height();
  const int w = parts.front()->width();
  int c = 0;
  for (const auto* p : parts) {
    require(p->height() == h && p->width() == w, ErrorKind::kShape,
            "concat spatial mismatch " + to_string(p->shape()));
    c += p->channels();
  }
  BasicTensor<T> out(c, h, w);
  auto dst = out.values().begin();
  for (const auto* p : parts) dst = std::copy(p->values().begin(), p->values().end(), dst);
  return out;
}

template <typename To, typename From>
BasicTensor<To> tensor_cast(const BasicTensor<From>& t) {
  std::vector<To> data(t.values().begin(), t.values().end());
  return BasicTensor<To>(t.shape(), std::move(data));
}

}  // namespace mvr
