#pragma once

#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

namespace lyre {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

/// Dense row-major array of doubles.
struct Tensor {
  Shape shape;
  std::vector<double> values;

  Tensor() = default;
  explicit Tensor(Shape s, double fill = 0.0);
  Tensor(Shape s, std::vector<double> v);

  static Tensor scalar(double v) { return Tensor({1}, {v}); }
  static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows);
  static Tensor vector(std::vector<double> v);

  std::size_t size() const noexcept { return values.size(); }
  std::size_t rank() const noexcept { return shape.size(); }
  std::size_t rows() const { return shape.at(0); }
  std::size_t cols() const { return shape.at(1); }

  double& at(std::size_t r, std::size_t c) { return values[r * shape[1] + c]; }
  double at(std::size_t r, std::size_t c) const { return values[r * shape[1] + c]; }
  double item() const;

  bool all_finite() const;

  bool operator==(const Tensor&) const = default;
};

}  // namespace lyre
