#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "mmaux/rng.hpp"

namespace mmaux {

// Dense row-major tensor of 64-bit floats. Plain value type; gradients and
// graph bookkeeping live in Tape.
struct Tensor {
  std::vector<int> shape;
  std::vector<double> data;

  Tensor() = default;
  Tensor(std::vector<int> s, std::vector<double> d);

  static Tensor zeros(std::vector<int> shape);
  static Tensor full(std::vector<int> shape, double value);
  static Tensor scalar(double value) { return Tensor({1}, {value}); }
  // Rank-2 tensor from nested initializer-style rows.
  static Tensor matrix(const std::vector<std::vector<double>>& rows);
  static Tensor uniform(std::vector<int> shape, double lo, double hi, Rng& rng);
  static Tensor gauss(std::vector<int> shape, double stddev, Rng& rng);

  int rank() const { return static_cast<int>(shape.size()); }
  std::size_t numel() const;
  bool same_shape(const Tensor& other) const { return shape == other.shape; }

  // Rank-2 accessors.
  int rows() const;
  int cols() const;
  double& at(int r, int c);
  double at(int r, int c) const;

  double& operator[](std::size_t i) { return data[i]; }
  double operator[](std::size_t i) const { return data[i]; }

  bool all_finite() const;
  void fill(double value);

  bool operator==(const Tensor& other) const { return shape == other.shape && data == other.data; }
};

std::size_t numel_of(const std::vector<int>& shape);
std::string shape_str(const std::vector<int>& shape);

// Plain forward-only matrix product; also the workhorse inside the tape op.
Tensor matmul_value(const Tensor& a, const Tensor& b);
Tensor transpose_value(const Tensor& a);

}  // namespace mmaux
