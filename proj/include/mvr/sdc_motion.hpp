#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "mvr/tensor.hpp"

namespace mvr {

// Flow fields are tensors of shape (2, H, W): channel 0 is the horizontal displacement u,
// channel 1 the vertical displacement v, in pixels. The prediction at p samples the
// reference at p + (u, v).
inline constexpr float kDefaultMaxFlow = 64.0f;

// Per-pixel separable kernels, each (K, H, W) and simplex-valued along K.
template <typename T>
struct BasicKernelField {
  BasicTensor<T> u;  // horizontal taps
  BasicTensor<T> v;  // vertical taps

  int taps() const { return u.channels(); }
};
using KernelField = BasicKernelField<float>;
using KernelFieldD = BasicKernelField<double>;

// Exhaustive integer SAD block matching on the luma channel (channel 0). Ties go to the
// smallest |u| + |v|, then smallest v, then smallest u. Block vectors are bilinearly
// interpolated between block centres to give a per-pixel field.
Tensor block_matching_flow(const Tensor& ref, const Tensor& target, int block = 8,
                           int radius = 16);

// Middlebury .flo: float magic 202021.25, i32 width, i32 height, interleaved (u, v) f32.
std::vector<std::uint8_t> write_flo(const Tensor& flow);
Tensor read_flo(std::span<const std::uint8_t> bytes, float max_abs = kDefaultMaxFlow);
void write_flo_file(const std::filesystem::path& path, const Tensor& flow);
Tensor read_flo_file(const std::filesystem::path& path, float max_abs = kDefaultMaxFlow);

// Throws kContract unless both kernel fields are nonnegative and sum to 1 within `tol`
// per pixel.
template <typename T>
void check_kernel_field(const BasicKernelField<T>& k, double tol = 1e-4);

// Spatially-displaced convolution: out_c(p) = sum_{i,j} kv_i(p) ku_j(p) ref_c(p + flow(p) +
// (j - K/2, i - K/2)) with bilinear, edge-clamped sampling. `check_simplex` may be turned off
// for finite-difference probing off the simplex.
template <typename T>
BasicTensor<T> sdc_warp(const BasicTensor<T>& ref, const BasicTensor<T>& flow,
                        const BasicKernelField<T>& kernels, bool check_simplex = true);

template <typename T>
struct SdcGradients {
  BasicTensor<T> flow;
  BasicKernelField<T> kernels;
  BasicTensor<T> ref;
};

// Vector-Jacobian product of sdc_warp with `upstream`. At integer sample positions the
// bilinear derivative takes the right-continuous branch.
template <typename T>
SdcGradients<T> sdc_warp_vjp(const BasicTensor<T>& ref, const BasicTensor<T>& flow,
                             const BasicKernelField<T>& kernels, const BasicTensor<T>& upstream,
                             bool check_simplex = true);

}  // namespace mvr
