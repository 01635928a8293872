#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace adamf {

/// Dense row-major real tensor. Rank 1 and 2 are all the model needs, but the
/// shape is kept general so checkpoints can describe any layout.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> dims, double fill = 0.0);

  static Tensor vector(std::vector<double> values);
  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> values);

  std::size_t size() const { return data.size(); }
  std::size_t rank() const { return shape.size(); }
  std::size_t rows() const { return shape.empty() ? 0 : shape[0]; }
  /// Width of one row; for rank-1 tensors the whole vector is one row.
  std::size_t row_width() const;

  std::span<double> row(std::size_t r);
  std::span<const double> row(std::size_t r) const;

  bool all_finite() const;
  std::string shape_string() const;

  bool operator==(const Tensor&) const = default;
};

std::size_t shape_product(const std::vector<std::size_t>& shape);
std::string shape_string(const std::vector<std::size_t>& shape);

}  // namespace adamf
