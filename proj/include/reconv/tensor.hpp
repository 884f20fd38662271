#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace reconv {

using Shape = std::vector<std::size_t>;

std::string shape_string(const Shape& shape);

// Dense row-major array of doubles. The last axis varies fastest, so an
// H x W x C activation stores the channel vector of each pixel contiguously.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  static Tensor zeros_like(const Tensor& other) { return Tensor(other.shape_); }

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }
  double* data() noexcept { return data_.data(); }
  const double* data() const noexcept { return data_.data(); }

  double& operator[](std::size_t i) noexcept { return data_[i]; }
  double operator[](std::size_t i) const noexcept { return data_[i]; }

  // Rank-3 (H x W x C) accessors.
  double& at(std::size_t i, std::size_t j, std::size_t c) noexcept {
    return data_[(i * shape_[1] + j) * shape_[2] + c];
  }
  const double& at(std::size_t i, std::size_t j, std::size_t c) const noexcept {
    return data_[(i * shape_[1] + j) * shape_[2] + c];
  }

  // Rank-4 (kh x kw x Cin x Cout) accessors.
  double& at(std::size_t a, std::size_t b, std::size_t c, std::size_t d) noexcept {
    return data_[((a * shape_[1] + b) * shape_[2] + c) * shape_[3] + d];
  }
  const double& at(std::size_t a, std::size_t b, std::size_t c, std::size_t d) const noexcept {
    return data_[((a * shape_[1] + b) * shape_[2] + c) * shape_[3] + d];
  }

  void fill(double value) noexcept;
  Tensor& operator+=(const Tensor& other);
  Tensor& operator*=(double scale) noexcept;

  bool all_finite() const noexcept;

  friend bool operator==(const Tensor& a, const Tensor& b) = default;

 private:
  Shape shape_;
  std::vector<double> data_;
};

std::size_t element_count(const Shape& shape);

// Throws ShapeError naming `what` if the shapes differ.
void require_same_shape(const Tensor& a, const Tensor& b, const char* what);

}  // namespace reconv
