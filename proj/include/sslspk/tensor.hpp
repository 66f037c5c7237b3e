#pragma once

#include <cstddef>
#include <vector>

namespace sslspk {

// Dense 64-bit float array, row-major. Values are validated finite at
// construction; NaN/Inf anywhere is rejected. The toolkit only ever builds
// 2-D tensors (scalars are 1x1, row vectors 1xD, columns Nx1).
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape);  // zero-filled
  Tensor(std::vector<std::size_t> shape, std::vector<double> data);

  static Tensor zeros(std::size_t rows, std::size_t cols);
  static Tensor filled(std::size_t rows, std::size_t cols, double value);
  static Tensor scalar(double v);
  static Tensor row(std::vector<double> v);
  static Tensor col(std::vector<double> v);
  static Tensor matrix(std::size_t rows, std::size_t cols,
                       std::vector<double> data);
  static Tensor identity(std::size_t n);

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }
  bool is_matrix() const { return shape_.size() == 2; }
  std::size_t rows() const;
  std::size_t cols() const;

  double& at(std::size_t i, std::size_t j);
  double at(std::size_t i, std::size_t j) const;
  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  const std::vector<double>& values() const { return data_; }

  bool requires_grad() const { return requires_grad_; }
  void set_requires_grad(bool b) { requires_grad_ = b; }
  Tensor with_grad() const;

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

  // throws NumericError if any entry is NaN/Inf; `what` names the context
  void check_finite(const char* what) const;

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
  bool requires_grad_ = false;
};

}  // namespace sslspk
