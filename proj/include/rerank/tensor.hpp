#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

#include "rerank/errors.hpp"

namespace rerank {

// Dense row-major matrix of 64-bit floats. Row vectors are 1 x n, scalars
// 1 x 1. Shape is kept as a dimension list to stay self-describing in
// checkpoints.
class Tensor {
 public:
  Tensor() : shape_{0, 0} {}

  Tensor(std::size_t rows, std::size_t cols)
      : shape_{rows, cols}, data_(rows * cols, 0.0) {}

  Tensor(std::size_t rows, std::size_t cols, std::vector<double> values)
      : shape_{rows, cols}, data_(std::move(values)) {
    if (data_.size() != rows * cols) {
      throw ShapeError("Tensor: data length " + std::to_string(data_.size()) +
                       " does not match shape " + std::to_string(rows) + "x" +
                       std::to_string(cols));
    }
  }

  static Tensor scalar(double v) { return Tensor(1, 1, {v}); }

  static Tensor row(std::vector<double> values) {
    const std::size_t n = values.size();
    return Tensor(1, n, std::move(values));
  }

  static Tensor identity(std::size_t n) {
    Tensor t(n, n);
    for (std::size_t i = 0; i < n; ++i) t.at(i, i) = 1.0;
    return t;
  }

  std::size_t rows() const { return shape_[0]; }
  std::size_t cols() const { return shape_[1]; }
  std::size_t size() const { return data_.size(); }
  const std::vector<std::size_t>& shape() const { return shape_; }

  double& at(std::size_t r, std::size_t c) { return data_[r * shape_[1] + c]; }
  double at(std::size_t r, std::size_t c) const {
    return data_[r * shape_[1] + c];
  }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::vector<double>& flat() { return data_; }
  const std::vector<double>& flat() const { return data_; }

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

  bool empty() const { return data_.empty(); }

  bool all_finite() const {
    for (double v : data_) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }

  void fill(double v) {
    for (double& x : data_) x = v;
  }

  Tensor transposed() const {
    Tensor t(cols(), rows());
    for (std::size_t i = 0; i < rows(); ++i) {
      for (std::size_t j = 0; j < cols(); ++j) t.at(j, i) = at(i, j);
    }
    return t;
  }

  std::string shape_str() const {
    return std::to_string(rows()) + "x" + std::to_string(cols());
  }

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

namespace detail {

// c (p x r) += a (p x q) * b (q x r)
inline void gemm_nn_accum(const Tensor& a, const Tensor& b, Tensor& c) {
  const std::size_t p = a.rows(), q = a.cols(), r = b.cols();
  const double* ad = a.data();
  const double* bd = b.data();
  double* cd = c.data();
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t k = 0; k < q; ++k) {
      const double aik = ad[i * q + k];
      if (aik == 0.0) continue;
      const double* brow = bd + k * r;
      double* crow = cd + i * r;
      for (std::size_t j = 0; j < r; ++j) crow[j] += aik * brow[j];
    }
  }
}

// c (p x q) += a (p x r) * b^T, with b (q x r)
inline void gemm_nt_accum(const Tensor& a, const Tensor& b, Tensor& c) {
  const std::size_t p = a.rows(), r = a.cols(), q = b.rows();
  const double* ad = a.data();
  const double* bd = b.data();
  for (std::size_t i = 0; i < p; ++i) {
    const double* arow = ad + i * r;
    for (std::size_t j = 0; j < q; ++j) {
      const double* brow = bd + j * r;
      double acc = 0.0;
      for (std::size_t k = 0; k < r; ++k) acc += arow[k] * brow[k];
      c.at(i, j) += acc;
    }
  }
}

// c (q x r) += a^T * b, with a (p x q), b (p x r)
inline void gemm_tn_accum(const Tensor& a, const Tensor& b, Tensor& c) {
  const std::size_t p = a.rows(), q = a.cols(), r = b.cols();
  const double* ad = a.data();
  const double* bd = b.data();
  double* cd = c.data();
  for (std::size_t k = 0; k < p; ++k) {
    const double* arow = ad + k * q;
    const double* brow = bd + k * r;
    for (std::size_t i = 0; i < q; ++i) {
      const double aki = arow[i];
      if (aki == 0.0) continue;
      double* crow = cd + i * r;
      for (std::size_t j = 0; j < r; ++j) crow[j] += aki * brow[j];
    }
  }
}

}  // namespace detail

inline Tensor matmul_value(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: inner dimensions differ, " + a.shape_str() +
                     " vs " + b.shape_str());
  }
  Tensor c(a.rows(), b.cols());
  detail::gemm_nn_accum(a, b, c);
  return c;
}

}  // namespace rerank
