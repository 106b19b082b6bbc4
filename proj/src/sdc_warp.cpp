#include <algorithm>
#include <cmath>

#include "mvr/sdc_motion.hpp"

namespace mvr {
namespace {

template <typename T>
void check_inputs(const BasicTensor<T>& ref, const BasicTensor<T>& flow,
                  const BasicKernelField<T>& k) {
  const int h = ref.height(), w = ref.width();
  require(flow.channels() == 2 && flow.height() == h && flow.width() == w, ErrorKind::kShape,
          "flow " + to_string(flow.shape()) + " does not match reference " +
              to_string(ref.shape()));
  require(k.u.shape() == k.v.shape(), ErrorKind::kShape, "kernel fields differ in shape");
  require(k.u.height() == h && k.u.width() == w, ErrorKind::kShape,
          "kernel field " + to_string(k.u.shape()) + " does not match reference " +
              to_string(ref.shape()));
  require(k.taps() >= 1 && k.taps() % 2 == 1, ErrorKind::kShape,
          "kernel size must be odd, got " + std::to_string(k.taps()));
}

// Bilinear footprint of a displaced point: columns x0, x1 and rows y0, y1 (edge-clamped),
// fractional offsets fx, fy. Every tap of the separable kernel shares the fractions.
template <typename T>
struct Footprint {
  int base_x;
  int base_y;
  T fx;
  T fy;
};

template <typename T>
Footprint<T> footprint(int px, int py, T u, T v) {
  const T x = static_cast<T>(px) + u;
  const T y = static_cast<T>(py) + v;
  const T flx = std::floor(x);
  const T fly = std::floor(y);
  return {static_cast<int>(flx), static_cast<int>(fly), x - flx, y - fly};
}

inline int clamp_index(int i, int n) { return std::clamp(i, 0, n - 1); }

}  // namespace

template <typename T>
void check_kernel_field(const BasicKernelField<T>& k, double tol) {
  require(k.u.shape() == k.v.shape(), ErrorKind::kShape, "kernel fields differ in shape");
  const int taps = k.taps();
  const std::size_t plane = k.u.shape().plane();
  for (const auto* field : {&k.u, &k.v}) {
    auto vals = field->values();
    for (std::size_t p = 0; p < plane; ++p) {
      double sum = 0.0;
      for (int t = 0; t < taps; ++t) {
        const T val = vals[t * plane + p];
        require(val >= T(-tol), ErrorKind::kContract, "negative kernel tap");
        sum += static_cast<double>(val);
      }
      if (!(std::abs(sum - 1.0) <= tol)) {
        fail(ErrorKind::kContract,
             "kernel taps sum to " + std::to_string(sum) + " at pixel " + std::to_string(p));
      }
    }
  }
}

template <typename T>
BasicTensor<T> sdc_warp(const BasicTensor<T>& ref, const BasicTensor<T>& flow,
                        const BasicKernelField<T>& kernels, bool check_simplex) {
  check_inputs(ref, flow, kernels);
  if (check_simplex) check_kernel_field(kernels);
  const int h = ref.height(), w = ref.width(), channels = ref.channels();
  const int taps = kernels.taps();
  const int half = taps / 2;
  BasicTensor<T> out(ref.shape());
  std::vector<int> cols(static_cast<std::size_t>(taps) + 1);
  std::vector<int> rows(static_cast<std::size_t>(taps) + 1);
  for (int py = 0; py < h; ++py) {
    for (int px = 0; px < w; ++px) {
      const auto fp = footprint<T>(px, py, flow(0, py, px), flow(1, py, px));
      for (int t = 0; t <= taps; ++t) {
        cols[t] = clamp_index(fp.base_x + t - half, w);
        rows[t] = clamp_index(fp.base_y + t - half, h);
      }
      for (int c = 0; c < channels; ++c) {
        T acc = 0;
        for (int i = 0; i < taps; ++i) {
          const T kv = kernels.v(i, py, px);
          T row_acc = 0;
          for (int j = 0; j < taps; ++j) {
            const T a = ref(c, rows[i], cols[j]);
            const T b = ref(c, rows[i], cols[j + 1]);
            const T cc = ref(c, rows[i + 1], cols[j]);
            const T d = ref(c, rows[i + 1], cols[j + 1]);
            const T top = a + fp.fx * (b - a);
            const T bottom = cc + fp.fx * (d - cc);
            row_acc += kernels.u(j, py, px) * (top + fp.fy * (bottom - top));
          }
          acc += kv * row_acc;
        }
        out(c, py, px) = acc;
      }
    }
  }
  return out;
}

template <typename T>
SdcGradients<T> sdc_warp_vjp(const BasicTensor<T>& ref, const BasicTensor<T>& flow,
                             const BasicKernelField<T>& kernels, const BasicTensor<T>& upstream,
                             bool check_simplex) {
  check_inputs(ref, flow, kernels);
  if (check_simplex) check_kernel_field(kernels);
  require(upstream.shape() == ref.shape(), ErrorKind::kShape,
          "upstream gradient " + to_string(upstream.shape()) + " does not match output " +
              to_string(ref.shape()));
  const int h = ref.height(), w = ref.width(), channels = ref.channels();
  const int taps = kernels.taps();
  const int half = taps / 2;
  SdcGradients<T> g{BasicTensor<T>(flow.shape()),
                    {BasicTensor<T>(kernels.u.shape()), BasicTensor<T>(kernels.v.shape())},
                    BasicTensor<T>(ref.shape())};
  std::vector<int> cols(static_cast<std::size_t>(taps) + 1);
  std::vector<int> rows(static_cast<std::size_t>(taps) + 1);
  for (int py = 0; py < h; ++py) {
    for (int px = 0; px < w; ++px) {
      const auto fp = footprint<T>(px, py, flow(0, py, px), flow(1, py, px));
      for (int t = 0; t <= taps; ++t) {
        cols[t] = clamp_index(fp.base_x + t - half, w);
        rows[t] = clamp_index(fp.base_y + t - half, h);
      }
      T gu = 0, gv = 0;
      for (int c = 0; c < channels; ++c) {
        const T up = upstream(c, py, px);
        for (int i = 0; i < taps; ++i) {
          const T kv = kernels.v(i, py, px);
          for (int j = 0; j < taps; ++j) {
            const T ku = kernels.u(j, py, px);
            const T a = ref(c, rows[i], cols[j]);
            const T b = ref(c, rows[i], cols[j + 1]);
            const T cc = ref(c, rows[i + 1], cols[j]);
            const T d = ref(c, rows[i + 1], cols[j + 1]);
            const T top = a + fp.fx * (b - a);
            const T bottom = cc + fp.fx * (d - cc);
            const T sample = top + fp.fy * (bottom - top);
            const T weight = kv * ku;
            g.kernels.u(j, py, px) += up * kv * sample;
            g.kernels.v(i, py, px) += up * ku * sample;
            const T dsdx = (1 - fp.fy) * (b - a) + fp.fy * (d - cc);
            const T dsdy = bottom - top;
            gu += up * weight * dsdx;
            gv += up * weight * dsdy;
            const T gw = up * weight;
            g.ref(c, rows[i], cols[j]) += gw * (1 - fp.fy) * (1 - fp.fx);
            g.ref(c, rows[i], cols[j + 1]) += gw * (1 - fp.fy) * fp.fx;
            g.ref(c, rows[i + 1], cols[j]) += gw * fp.fy * (1 - fp.fx);
            g.ref(c, rows[i + 1], cols[j + 1]) += gw * fp.fy * fp.fx;
          }
        }
      }
      g.flow(0, py, px) = gu;
      g.flow(1, py, px) = gv;
    }
  }
  return g;
}

template void check_kernel_field<float>(const BasicKernelField<float>&, double);
template void check_kernel_field<double>(const BasicKernelField<double>&, double);
template BasicTensor<float> sdc_warp<float>(const BasicTensor<float>&, const BasicTensor<float>&,
                                            const BasicKernelField<float>&, bool);
template BasicTensor<double> sdc_warp<double>(const BasicTensor<double>&,
                                              const BasicTensor<double>&,
                                              const BasicKernelField<double>&, bool);
template SdcGradients<float> sdc_warp_vjp<float>(const BasicTensor<float>&,
                                                 const BasicTensor<float>&,
                                                 const BasicKernelField<float>&,
                                                 const BasicTensor<float>&, bool);
template SdcGradients<double> sdc_warp_vjp<double>(const BasicTensor<double>&,
                                                   const BasicTensor<double>&,
                                                   const BasicKernelField<double>&,
                                                   const BasicTensor<double>&, bool);

}  // namespace mvr
