#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace trimap {

using Index = std::int64_t;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or unreadable input. Carries the 1-based line/column when known.
class InputError : public Error {
 public:
  explicit InputError(const std::string& what, Index line = 0, Index column = 0)
      : Error(what), line_(line), column_(column) {}
  Index line() const noexcept { return line_; }
  Index column() const noexcept { return column_; }

 private:
  Index line_;
  Index column_;
};

// Violated precondition on arguments (sizes, ranges, parameters).
class ArgumentError : public Error {
 public:
  using Error::Error;
};

// Optimization produced a non-finite value.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, Index iteration) : Error(what), iteration_(iteration) {}
  Index iteration() const noexcept { return iteration_; }

 private:
  Index iteration_;
};

namespace detail {

inline bool all_finite(const RowMatrix& values) { return values.allFinite(); }

}  // namespace detail

// n points in m dimensions, one point per row.
class DataMatrix {
 public:
  DataMatrix() = default;

  explicit DataMatrix(RowMatrix values) : values_(std::move(values)) {
    if (values_.rows() < 1 || values_.cols() < 1) {
      throw ArgumentError("data matrix must have at least one row and one column");
    }
    if (!detail::all_finite(values_)) {
      throw ArgumentError("data matrix contains non-finite values");
    }
  }

  Index n() const noexcept { return values_.rows(); }
  Index m() const noexcept { return values_.cols(); }
  const RowMatrix& values() const noexcept { return values_; }
  auto row(Index i) const { return values_.row(i); }
  double operator()(Index i, Index j) const { return values_(i, j); }

 private:
  RowMatrix values_;
};

// n points in d dimensions, one point per row.
class Embedding {
 public:
  Embedding() = default;

  explicit Embedding(RowMatrix values) : values_(std::move(values)) {
    if (values_.cols() < 1) {
      throw ArgumentError("embedding must have at least one dimension");
    }
    if (!detail::all_finite(values_)) {
      throw ArgumentError("embedding contains non-finite values");
    }
  }

  Index n() const noexcept { return values_.rows(); }
  Index d() const noexcept { return values_.cols(); }
  const RowMatrix& values() const noexcept { return values_; }
  auto row(Index i) const { return values_.row(i); }
  double operator()(Index i, Index j) const { return values_(i, j); }

 private:
  RowMatrix values_;
};

using LabelVector = std::vector<std::int64_t>;

}  // namespace trimap
