#include "sslspk/tensor.hpp"

#include <cmath>
#include <string>

#include "sslspk/errors.hpp"

namespace sslspk {

namespace {
std::size_t shape_product(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}
}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape)
    : shape_(std::move(shape)), data_(shape_product(shape_), 0.0) {}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (shape_product(shape_) != data_.size()) {
    throw ShapeError("tensor: shape product " +
                     std::to_string(shape_product(shape_)) +
                     " != data length " + std::to_string(data_.size()));
  }
  check_finite("tensor construction");
}

Tensor Tensor::zeros(std::size_t rows, std::size_t cols) {
  return Tensor({rows, cols});
}

Tensor Tensor::filled(std::size_t rows, std::size_t cols, double value) {
  return Tensor({rows, cols}, std::vector<double>(rows * cols, value));
}

Tensor Tensor::scalar(double v) { return Tensor({1, 1}, {v}); }

Tensor Tensor::row(std::vector<double> v) {
  std::size_t n = v.size();
  return Tensor({1, n}, std::move(v));
}

Tensor Tensor::col(std::vector<double> v) {
  std::size_t n = v.size();
  return Tensor({n, 1}, std::move(v));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols,
                      std::vector<double> data) {
  return Tensor({rows, cols}, std::move(data));
}

Tensor Tensor::identity(std::size_t n) {
  Tensor t({n, n});
  for (std::size_t i = 0; i < n; ++i) t.at(i, i) = 1.0;
  return t;
}

std::size_t Tensor::rows() const {
  if (!is_matrix()) throw ShapeError("tensor: rows() on non-matrix");
  return shape_[0];
}

std::size_t Tensor::cols() const {
  if (!is_matrix()) throw ShapeError("tensor: cols() on non-matrix");
  return shape_[1];
}

double& Tensor::at(std::size_t i, std::size_t j) {
  if (!is_matrix() || i >= shape_[0] || j >= shape_[1]) {
    throw ShapeError("tensor: index (" + std::to_string(i) + "," +
                     std::to_string(j) + ") out of range");
  }
  return data_[i * shape_[1] + j];
}

double Tensor::at(std::size_t i, std::size_t j) const {
  return const_cast<Tensor*>(this)->at(i, j);
}

Tensor Tensor::with_grad() const {
  Tensor t = *this;
  t.requires_grad_ = true;
  return t;
}

void Tensor::check_finite(const char* what) const {
  for (std::size_t i = 0; i < data_.size(); ++i) {
    if (!std::isfinite(data_[i])) {
      throw NumericError(std::string(what) + ": non-finite value at flat index " +
                         std::to_string(i));
    }
  }
}

}  // namespace sslspk
