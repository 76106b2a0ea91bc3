#include "qintent/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace qintent {

namespace {

std::size_t element_count(const Tensor::Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

[[noreturn]] void shape_error(const char* op, const Tensor& a, const Tensor& b) {
  throw std::invalid_argument(std::string(op) + ": shape mismatch " + a.shape_string() + " vs " +
                              b.shape_string());
}

template <typename Fn>
Tensor map(const Tensor& a, Fn fn) {
  Tensor out = Tensor::zeros_like(a);
  auto src = a.values();
  auto dst = out.values();
  std::transform(src.begin(), src.end(), dst.begin(), fn);
  return out;
}

template <typename Fn>
Tensor zip(const char* op, const Tensor& a, const Tensor& b, Fn fn) {
  if (a.shape() != b.shape()) {
    shape_error(op, a, b);
  }
  Tensor out = Tensor::zeros_like(a);
  auto x = a.values();
  auto y = b.values();
  auto dst = out.values();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    dst[i] = fn(x[i], y[i]);
  }
  return out;
}

}  // namespace

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)), data_(element_count(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
  if (data_.size() != element_count(shape_)) {
    throw std::invalid_argument("Tensor: " + std::to_string(data_.size()) +
                                " values do not fill shape " + qintent::shape_string(shape_));
  }
}

Tensor Tensor::vector(std::vector<double> values) {
  const std::size_t n = values.size();
  return Tensor({n}, std::move(values));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> values) {
  return Tensor({rows, cols}, std::move(values));
}

std::size_t Tensor::rows() const { return shape_.empty() ? 0 : shape_[0]; }

std::size_t Tensor::cols() const { return shape_.size() < 2 ? 1 : shape_[1]; }

std::span<double> Tensor::row(std::size_t r) {
  const std::size_t c = cols();
  return std::span<double>(data_).subspan(r * c, c);
}

std::span<const double> Tensor::row(std::size_t r) const {
  const std::size_t c = cols();
  return std::span<const double>(data_).subspan(r * c, c);
}

void Tensor::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

std::string Tensor::shape_string() const { return qintent::shape_string(shape_); }

std::string shape_string(const Tensor::Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    os << (i ? "x" : "") << shape[i];
  }
  os << ']';
  return os.str();
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || (b.rank() != 1 && b.rank() != 2) || a.shape()[1] != b.shape()[0]) {
    shape_error("matmul", a, b);
  }
  const std::size_t m = a.rows();
  const std::size_t k = a.cols();
  if (b.rank() == 1) {
    Tensor out({m});
    for (std::size_t i = 0; i < m; ++i) {
      auto arow = a.row(i);
      out[i] = std::inner_product(arow.begin(), arow.end(), b.values().begin(), 0.0);
    }
    return out;
  }
  const std::size_t n = b.cols();
  Tensor out({m, n});
  for (std::size_t i = 0; i < m; ++i) {
    auto orow = out.row(i);
    for (std::size_t p = 0; p < k; ++p) {
      kernels::axpy(a.at(i, p), b.row(p), orow);
    }
  }
  return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
  return zip("add", a, b, [](double x, double y) { return x + y; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return zip("sub", a, b, [](double x, double y) { return x - y; });
}

Tensor hadamard(const Tensor& a, const Tensor& b) {
  return zip("hadamard", a, b, [](double x, double y) { return x * y; });
}

Tensor scale(const Tensor& a, double factor) {
  return map(a, [factor](double x) { return x * factor; });
}

Tensor concat(std::span<const Tensor> parts) {
  std::vector<double> out;
  for (const Tensor& part : parts) {
    if (part.rank() != 1) {
      throw std::invalid_argument("concat: expected rank-1 tensors, got " + part.shape_string());
    }
    out.insert(out.end(), part.values().begin(), part.values().end());
  }
  return Tensor::vector(std::move(out));
}

double sigmoid(double x) {
  x = std::clamp(x, -30.0, 30.0);
  return 1.0 / (1.0 + std::exp(-x));
}

Tensor sigmoid(const Tensor& a) {
  return map(a, [](double x) { return sigmoid(x); });
}

Tensor tanh(const Tensor& a) {
  return map(a, [](double x) { return std::tanh(x); });
}

Tensor relu(const Tensor& a) {
  return map(a, [](double x) { return x > 0.0 ? x : 0.0; });
}

namespace kernels {

void vecmat_acc(std::span<const double> x, const Tensor& w, std::span<double> out) {
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double xi = x[i];
    if (xi == 0.0) {
      continue;
    }
    axpy(xi, w.row(i), out);
  }
}

void matvec_acc(const Tensor& w, std::span<const double> y, std::span<double> out) {
  for (std::size_t i = 0; i < out.size(); ++i) {
    auto wrow = w.row(i);
    double acc = 0.0;
    for (std::size_t j = 0; j < y.size(); ++j) {
      acc += wrow[j] * y[j];
    }
    out[i] += acc;
  }
}

void outer_acc(std::span<const double> x, std::span<const double> y, Tensor& g) {
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] == 0.0) {
      continue;
    }
    axpy(x[i], y, g.row(i));
  }
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  const double* __restrict xs = x.data();
  double* __restrict ys = y.data();
  const std::size_t n = x.size();
  for (std::size_t i = 0; i < n; ++i) {
    ys[i] += alpha * xs[i];
  }
}

}  // namespace kernels

}  // namespace qintent
