#include "adamf/tensor.hpp"

#include <cmath>
#include <functional>
#include <numeric>

#include "adamf/errors.hpp"

namespace adamf {

std::size_t shape_product(const std::vector<std::size_t>& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(const std::vector<std::size_t>& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i > 0) out += "x";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

Tensor::Tensor(std::vector<std::size_t> dims, double fill)
    : shape(std::move(dims)), data(shape_product(shape), fill) {}

Tensor Tensor::vector(std::vector<double> values) {
  Tensor t;
  t.shape = {values.size()};
  t.data = std::move(values);
  return t;
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> values) {
  if (values.size() != rows * cols) {
    throw ContractViolation("Tensor::matrix: " + std::to_string(values.size()) +
                            " values for shape " + adamf::shape_string(std::vector<std::size_t>{rows, cols}));
  }
  Tensor t;
  t.shape = {rows, cols};
  t.data = std::move(values);
  return t;
}

std::size_t Tensor::row_width() const {
  if (shape.size() <= 1) return data.size();
  return data.size() / shape[0];
}

std::span<double> Tensor::row(std::size_t r) {
  const std::size_t w = row_width();
  return std::span<double>(data).subspan(r * w, w);
}

std::span<const double> Tensor::row(std::size_t r) const {
  const std::size_t w = row_width();
  return std::span<const double>(data).subspan(r * w, w);
}

bool Tensor::all_finite() const {
  for (double v : data) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

std::string Tensor::shape_string() const { return adamf::shape_string(shape); }

}  // namespace adamf
