#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "reconv/tensor.hpp"

// The five primitives of the network together with their adjoints
// (vector-Jacobian products). Activations are H x W x C, kernels are
// kh x kw x Cin x Cout.
namespace reconv::ops {

inline constexpr double kNormEpsilon = 1e-12;

// Offset that centers a kernel of the given extent. Even extents bias the
// center toward the top-left: an 8-wide kernel spans [-3, +4].
constexpr std::size_t same_offset(std::size_t extent) noexcept { return (extent - 1) / 2; }

// Stride-1 convolution with zero padding and output extent equal to the
// input extent:
//   out(i,j,co) = sum k(di,dj,ci,co) * in(i+di-oh, j+dj-ow, ci)
Tensor conv2d_same(const Tensor& input, const Tensor& kernels);

// Cotangent with respect to the input: correlation of grad_out with the
// spatially flipped, channel-transposed kernel.
Tensor conv2d_same_input_grad(const Tensor& grad_out, const Tensor& kernels);

// Cotangent with respect to the kernels: correlation of the zero-padded
// input with grad_out over every output position.
Tensor conv2d_same_kernel_grad(const Tensor& input, const Tensor& grad_out, const Shape& kernel_shape);

struct PoolIndex {
  Shape input_shape;
  std::size_t extent = 0;
  // Flat input offset of the winning element for each output element.
  std::vector<std::uint32_t> argmax;

  // Winning (row, col) inside the pooling block of output element `cell`.
  std::pair<std::size_t, std::size_t> in_block(std::size_t cell) const;
};

struct PoolResult {
  Tensor output;
  PoolIndex index;
};

// Non-overlapping max pooling. Ties resolve to the first element in a
// row-major scan of the block.
PoolResult max_pool(const Tensor& input, std::size_t extent);
inline PoolResult maxpool4(const Tensor& input) { return max_pool(input, 4); }

// Routes each output cotangent to its recorded argmax; every other input
// position receives zero.
Tensor max_pool_backward(const Tensor& grad_out, const PoolIndex& index);

Tensor relu(const Tensor& x);
void relu_inplace(Tensor& x) noexcept;

// Passes grad where x > 0. Since relu(x) > 0 exactly when x > 0, either the
// pre-activation or the rectified output may be supplied as `x`.
Tensor relu_backward(const Tensor& x, const Tensor& grad);

// Scales each pixel's channel vector to unit L2 norm. Norms below
// kNormEpsilon are clamped to it.
Tensor l2norm_pixel(const Tensor& z);

// Per pixel: (I - u u^T) g / |z| with u = z / |z|, or g / eps when the norm is
// at or below the guard.
Tensor l2norm_pixel_backward(const Tensor& z, const Tensor& grad);

// Max-subtracted softmax over a rank-1 tensor.
Tensor softmax(const Tensor& logits);

}  // namespace reconv::ops
