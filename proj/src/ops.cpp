#include "reconv/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "reconv/error.hpp"

namespace reconv::ops {
namespace {

void require_rank(const Tensor& t, std::size_t rank, const char* what) {
  if (t.rank() != rank) {
    throw ShapeError(std::string(what) + ": expected rank " + std::to_string(rank) + ", got " +
                     shape_string(t.shape()));
  }
}

void check_conv_shapes(const Tensor& activations, const Tensor& kernels, std::size_t channel_axis_extent,
                       const char* what) {
  require_rank(activations, 3, what);
  require_rank(kernels, 4, what);
  if (activations.dim(2) != channel_axis_extent) {
    throw ShapeError(std::string(what) + ": activation channels " + std::to_string(activations.dim(2)) +
                     " do not match kernel " + shape_string(kernels.shape()));
  }
}

// Range of kernel taps d in [0, k) with 0 <= pos + d - offset < n.
struct TapRange {
  std::size_t begin;
  std::size_t end;
};

TapRange taps(std::size_t pos, std::size_t offset, std::size_t k, std::size_t n) noexcept {
  std::size_t begin = offset > pos ? offset - pos : 0;
  std::size_t end = std::min(k, n + offset - pos);
  return {begin, end};
}

}  // namespace

Tensor conv2d_same(const Tensor& input, const Tensor& kernels) {
  require_rank(kernels, 4, "conv2d_same");
  check_conv_shapes(input, kernels, kernels.dim(2), "conv2d_same");
  const std::size_t h = input.dim(0), w = input.dim(1), cin = input.dim(2);
  const std::size_t kh = kernels.dim(0), kw = kernels.dim(1), cout = kernels.dim(3);
  const std::size_t oh = same_offset(kh), ow = same_offset(kw);

  Tensor out({h, w, cout});
  for (std::size_t i = 0; i < h; ++i) {
    const auto rows = taps(i, oh, kh, h);
    for (std::size_t j = 0; j < w; ++j) {
      const auto cols = taps(j, ow, kw, w);
      double* dst = &out.at(i, j, 0);
      for (std::size_t di = rows.begin; di < rows.end; ++di) {
        const std::size_t ii = i + di - oh;
        for (std::size_t dj = cols.begin; dj < cols.end; ++dj) {
          const std::size_t jj = j + dj - ow;
          const double* src = &input.at(ii, jj, 0);
          for (std::size_t ci = 0; ci < cin; ++ci) {
            const double x = src[ci];
            const double* k = &kernels.at(di, dj, ci, 0);
            for (std::size_t co = 0; co < cout; ++co) dst[co] += x * k[co];
          }
        }
      }
    }
  }
  return out;
}

Tensor conv2d_same_input_grad(const Tensor& grad_out, const Tensor& kernels) {
  require_rank(kernels, 4, "conv2d_same_input_grad");
  check_conv_shapes(grad_out, kernels, kernels.dim(3), "conv2d_same_input_grad");
  const std::size_t h = grad_out.dim(0), w = grad_out.dim(1), cout = grad_out.dim(2);
  const std::size_t kh = kernels.dim(0), kw = kernels.dim(1), cin = kernels.dim(2);
  const std::size_t oh = same_offset(kh), ow = same_offset(kw);

  Tensor grad_in({h, w, cin});
  for (std::size_t i = 0; i < h; ++i) {
    const auto rows = taps(i, oh, kh, h);
    for (std::size_t j = 0; j < w; ++j) {
      const auto cols = taps(j, ow, kw, w);
      const double* g = &grad_out.at(i, j, 0);
      for (std::size_t di = rows.begin; di < rows.end; ++di) {
        const std::size_t ii = i + di - oh;
        for (std::size_t dj = cols.begin; dj < cols.end; ++dj) {
          const std::size_t jj = j + dj - ow;
          double* dst = &grad_in.at(ii, jj, 0);
          for (std::size_t ci = 0; ci < cin; ++ci) {
            const double* k = &kernels.at(di, dj, ci, 0);
            double acc = 0.0;
            for (std::size_t co = 0; co < cout; ++co) acc += k[co] * g[co];
            dst[ci] += acc;
          }
        }
      }
    }
  }
  return grad_in;
}

Tensor conv2d_same_kernel_grad(const Tensor& input, const Tensor& grad_out, const Shape& kernel_shape) {
  require_rank(input, 3, "conv2d_same_kernel_grad");
  require_rank(grad_out, 3, "conv2d_same_kernel_grad");
  if (kernel_shape.size() != 4 || kernel_shape[2] != input.dim(2) || kernel_shape[3] != grad_out.dim(2) ||
      input.dim(0) != grad_out.dim(0) || input.dim(1) != grad_out.dim(1)) {
    throw ShapeError("conv2d_same_kernel_grad: input " + shape_string(input.shape()) + ", grad " +
                     shape_string(grad_out.shape()) + " and kernel " + shape_string(kernel_shape) +
                     " are inconsistent");
  }
  const std::size_t h = input.dim(0), w = input.dim(1), cin = input.dim(2), cout = grad_out.dim(2);
  const std::size_t kh = kernel_shape[0], kw = kernel_shape[1];
  const std::size_t oh = same_offset(kh), ow = same_offset(kw);

  Tensor grad_k(kernel_shape);
  for (std::size_t i = 0; i < h; ++i) {
    const auto rows = taps(i, oh, kh, h);
    for (std::size_t j = 0; j < w; ++j) {
      const auto cols = taps(j, ow, kw, w);
      const double* g = &grad_out.at(i, j, 0);
      for (std::size_t di = rows.begin; di < rows.end; ++di) {
        const std::size_t ii = i + di - oh;
        for (std::size_t dj = cols.begin; dj < cols.end; ++dj) {
          const std::size_t jj = j + dj - ow;
          const double* src = &input.at(ii, jj, 0);
          for (std::size_t ci = 0; ci < cin; ++ci) {
            const double x = src[ci];
            double* dst = &grad_k.at(di, dj, ci, 0);
            for (std::size_t co = 0; co < cout; ++co) dst[co] += x * g[co];
          }
        }
      }
    }
  }
  return grad_k;
}

std::pair<std::size_t, std::size_t> PoolIndex::in_block(std::size_t cell) const {
  const std::size_t w = input_shape[1], c = input_shape[2];
  const std::size_t pixel = argmax.at(cell) / c;
  return {(pixel / w) % extent, (pixel % w) % extent};
}

PoolResult max_pool(const Tensor& input, std::size_t extent) {
  require_rank(input, 3, "max_pool");
  const std::size_t h = input.dim(0), w = input.dim(1), c = input.dim(2);
  if (extent == 0 || h % extent != 0 || w % extent != 0) {
    throw ShapeError("max_pool: extent " + std::to_string(extent) + " does not divide input " +
                     shape_string(input.shape()));
  }
  const std::size_t ph = h / extent, pw = w / extent;
  PoolResult result{Tensor({ph, pw, c}), PoolIndex{input.shape(), extent, {}}};
  result.index.argmax.resize(result.output.size());

  for (std::size_t i = 0; i < ph; ++i) {
    for (std::size_t j = 0; j < pw; ++j) {
      for (std::size_t m = 0; m < c; ++m) {
        double best = -std::numeric_limits<double>::infinity();
        std::size_t best_at = 0;
        bool first = true;
        for (std::size_t di = 0; di < extent; ++di) {
          for (std::size_t dj = 0; dj < extent; ++dj) {
            const std::size_t at = ((i * extent + di) * w + (j * extent + dj)) * c + m;
            if (first || input[at] > best) {
              best = input[at];
              best_at = at;
              first = false;
            }
          }
        }
        const std::size_t cell = (i * pw + j) * c + m;
        result.output[cell] = best;
        result.index.argmax[cell] = static_cast<std::uint32_t>(best_at);
      }
    }
  }
  return result;
}

Tensor max_pool_backward(const Tensor& grad_out, const PoolIndex& index) {
  if (grad_out.size() != index.argmax.size()) {
    throw ShapeError("max_pool_backward: cotangent " + shape_string(grad_out.shape()) +
                     " does not match the pooling record");
  }
  Tensor grad_in(index.input_shape);
  for (std::size_t cell = 0; cell < index.argmax.size(); ++cell) grad_in[index.argmax[cell]] += grad_out[cell];
  return grad_in;
}

Tensor relu(const Tensor& x) {
  Tensor y = x;
  relu_inplace(y);
  return y;
}

void relu_inplace(Tensor& x) noexcept {
  for (auto& v : x.values()) v = v > 0.0 ? v : 0.0;
}

Tensor relu_backward(const Tensor& x, const Tensor& grad) {
  require_same_shape(x, grad, "relu_backward");
  Tensor out(grad.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] > 0.0 ? grad[i] : 0.0;
  return out;
}

Tensor l2norm_pixel(const Tensor& z) {
  require_rank(z, 3, "l2norm_pixel");
  const std::size_t pixels = z.dim(0) * z.dim(1), c = z.dim(2);
  Tensor out(z.shape());
  for (std::size_t p = 0; p < pixels; ++p) {
    const double* src = z.data() + p * c;
    double* dst = out.data() + p * c;
    double sq = 0.0;
    for (std::size_t m = 0; m < c; ++m) sq += src[m] * src[m];
    const double norm = std::max(std::sqrt(sq), kNormEpsilon);
    for (std::size_t m = 0; m < c; ++m) dst[m] = src[m] / norm;
  }
  return out;
}

Tensor l2norm_pixel_backward(const Tensor& z, const Tensor& grad) {
  require_rank(z, 3, "l2norm_pixel_backward");
  require_same_shape(z, grad, "l2norm_pixel_backward");
  const std::size_t pixels = z.dim(0) * z.dim(1), c = z.dim(2);
  Tensor out(z.shape());
  for (std::size_t p = 0; p < pixels; ++p) {
    const double* zp = z.data() + p * c;
    const double* gp = grad.data() + p * c;
    double* dst = out.data() + p * c;
    double sq = 0.0;
    for (std::size_t m = 0; m < c; ++m) sq += zp[m] * zp[m];
    const double norm = std::sqrt(sq);
    if (norm <= kNormEpsilon) {
      for (std::size_t m = 0; m < c; ++m) dst[m] = gp[m] / kNormEpsilon;
      continue;
    }
    // u.g with u = z / |z|
    double dot = 0.0;
    for (std::size_t m = 0; m < c; ++m) dot += zp[m] * gp[m];
    dot /= norm;
    for (std::size_t m = 0; m < c; ++m) dst[m] = (gp[m] - (zp[m] / norm) * dot) / norm;
  }
  return out;
}

Tensor softmax(const Tensor& logits) {
  require_rank(logits, 1, "softmax");
  double top = -std::numeric_limits<double>::infinity();
  for (double v : logits.values()) top = std::max(top, v);
  Tensor out(logits.shape());
  double total = 0.0;
  for (std::size_t k = 0; k < logits.size(); ++k) {
    out[k] = std::exp(logits[k] - top);
    total += out[k];
  }
  out *= 1.0 / total;
  return out;
}

}  // namespace reconv::ops
