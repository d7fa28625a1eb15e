#pragma once

#include <cmath>
#include <cstddef>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "loram/errors.hpp"

namespace loram {

/// Row-major d×r real matrix holding one LoRAM factor (or a gradient block).
class DenseThin {
 public:
  DenseThin() = default;

  DenseThin(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {
    if (rows == 0 || cols == 0) {
      throw ShapeError("DenseThin needs at least one row and one column");
    }
  }

  DenseThin(std::size_t rows, std::size_t cols, std::vector<double> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (rows == 0 || cols == 0) {
      throw ShapeError("DenseThin needs at least one row and one column");
    }
    if (data_.size() != rows * cols) {
      throw ShapeError("DenseThin data length " + std::to_string(data_.size()) +
                       " does not match " + std::to_string(rows) + "x" + std::to_string(cols));
    }
  }

  /// Entries are i.i.d. standard normal.
  template <class Rng>
  static DenseThin gaussian(std::size_t rows, std::size_t cols, Rng& rng) {
    DenseThin m(rows, cols);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (auto& v : m.data_) v = normal(rng);
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t i, std::size_t k) noexcept { return data_[i * cols_ + k]; }
  double operator()(std::size_t i, std::size_t k) const noexcept { return data_[i * cols_ + k]; }

  std::span<double> row(std::size_t i) noexcept { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const noexcept {
    return {data_.data() + i * cols_, cols_};
  }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  bool same_shape(const DenseThin& other) const noexcept {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

  DenseThin& operator*=(double s) noexcept {
    for (auto& v : data_) v *= s;
    return *this;
  }

  // this += alpha * other
  void axpy(double alpha, const DenseThin& other) {
    require_same_shape(other);
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += alpha * other.data_[k];
  }

  double dot(const DenseThin& other) const {
    require_same_shape(other);
    double acc = 0.0;
    for (std::size_t k = 0; k < data_.size(); ++k) acc += data_[k] * other.data_[k];
    return acc;
  }

  double squared_norm() const noexcept {
    double acc = 0.0;
    for (double v : data_) acc += v * v;
    return acc;
  }

  double norm() const noexcept { return std::sqrt(squared_norm()); }

  bool all_finite() const noexcept {
    for (double v : data_) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }

  friend bool operator==(const DenseThin&, const DenseThin&) = default;

 private:
  void require_same_shape(const DenseThin& other) const {
    if (!same_shape(other)) {
      throw ShapeError("thin matrix shapes differ: " + std::to_string(rows_) + "x" +
                       std::to_string(cols_) + " vs " + std::to_string(other.rows_) + "x" +
                       std::to_string(other.cols_));
    }
  }

  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

inline DenseThin operator-(DenseThin a, const DenseThin& b) {
  a.axpy(-1.0, b);
  return a;
}

/// A point of the product space ℝ^{d×r} × ℝ^{d×r} with the Euclidean metric
/// <z, w> = tr(z₁ᵀw₁) + tr(z₂ᵀw₂). Used both for factor pairs (X, Y) and for
/// gradients (∇_X, ∇_Y).
struct FactorPair {
  DenseThin x;
  DenseThin y;

  std::size_t dim() const noexcept { return x.rows(); }
  std::size_t rank() const noexcept { return x.cols(); }

  bool same_shape(const FactorPair& o) const noexcept {
    return x.same_shape(o.x) && y.same_shape(o.y);
  }

  void axpy(double alpha, const FactorPair& o) {
    x.axpy(alpha, o.x);
    y.axpy(alpha, o.y);
  }

  FactorPair& operator*=(double s) noexcept {
    x *= s;
    y *= s;
    return *this;
  }

  double dot(const FactorPair& o) const { return x.dot(o.x) + y.dot(o.y); }
  double squared_norm() const noexcept { return x.squared_norm() + y.squared_norm(); }
  double norm() const noexcept { return std::sqrt(squared_norm()); }
  bool all_finite() const noexcept { return x.all_finite() && y.all_finite(); }

  friend bool operator==(const FactorPair&, const FactorPair&) = default;
};

inline FactorPair operator-(FactorPair a, const FactorPair& b) {
  a.axpy(-1.0, b);
  return a;
}

using LoramFactors = FactorPair;
using GradPair = FactorPair;

inline FactorPair zeros_like(const FactorPair& p) {
  return {DenseThin(p.x.rows(), p.x.cols()), DenseThin(p.y.rows(), p.y.cols())};
}

}  // namespace loram
