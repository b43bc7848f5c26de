#include "lyre/tensor.hpp"

#include <cmath>
#include <functional>
#include <numeric>

#include "lyre/error.hpp"

namespace lyre {

std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

Tensor::Tensor(Shape s, double fill) : shape(std::move(s)), values(shape_size(shape), fill) {
  for (auto d : shape)
    if (d == 0) throw DimensionError("tensor dimensions must be positive: " + shape_string(shape));
}

Tensor::Tensor(Shape s, std::vector<double> v) : shape(std::move(s)), values(std::move(v)) {
  if (shape_size(shape) != values.size())
    throw DimensionError("shape " + shape_string(shape) + " does not hold " +
                         std::to_string(values.size()) + " values");
}

Tensor Tensor::matrix(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r ? rows.begin()->size() : 0;
  std::vector<double> v;
  v.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw DimensionError("ragged matrix literal");
    v.insert(v.end(), row.begin(), row.end());
  }
  return Tensor({r, c}, std::move(v));
}

Tensor Tensor::vector(std::vector<double> v) {
  const std::size_t n = v.size();
  return Tensor({n}, std::move(v));
}

double Tensor::item() const {
  if (values.size() != 1)
    throw ContractError("item() on tensor of shape " + shape_string(shape));
  return values[0];
}

bool Tensor::all_finite() const {
  for (double v : values)
    if (!std::isfinite(v)) return false;
  return true;
}

}  // namespace lyre
