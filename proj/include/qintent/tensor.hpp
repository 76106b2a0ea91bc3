#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace qintent {

/// Dense row-major tensor of doubles. Rank 1 and rank 2 are the only ranks
/// the models use, but the container itself accepts any shape.
class Tensor {
public:
  using Shape = std::vector<std::size_t>;

  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  static Tensor vector(std::vector<double> values);
  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> values);
  static Tensor zeros_like(const Tensor& other) { return Tensor(other.shape_); }

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }
  std::size_t rows() const;
  std::size_t cols() const;

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  double& at(std::size_t r, std::size_t c) { return data_[r * shape_[1] + c]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * shape_[1] + c]; }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }
  std::span<double> row(std::size_t r);
  std::span<const double> row(std::size_t r) const;

  void fill(double value);
  bool all_finite() const;
  std::string shape_string() const;

  friend bool operator==(const Tensor&, const Tensor&) = default;

private:
  Shape shape_;
  std::vector<double> data_;
};

std::string shape_string(const Tensor::Shape& shape);

// Value-returning operations. Shape mismatches throw std::invalid_argument
// naming both shapes.
Tensor matmul(const Tensor& a, const Tensor& b);  // (m×k)·(k×n) or (m×k)·(k)
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor hadamard(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
Tensor concat(std::span<const Tensor> parts);  // rank-1 inputs only
Tensor sigmoid(const Tensor& a);
Tensor tanh(const Tensor& a);
Tensor relu(const Tensor& a);

double sigmoid(double x);

/// In-place kernels used on the training hot path. Callers guarantee sizes.
namespace kernels {

/// out += x · W  where W is (x.size() × out.size()).
void vecmat_acc(std::span<const double> x, const Tensor& w, std::span<double> out);
/// out += W · y  where W is (out.size() × y.size()).
void matvec_acc(const Tensor& w, std::span<const double> y, std::span<double> out);
/// G += x yᵀ
void outer_acc(std::span<const double> x, std::span<const double> y, Tensor& g);
void axpy(double alpha, std::span<const double> x, std::span<double> y);

}  // namespace kernels

}  // namespace qintent
