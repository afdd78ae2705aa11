#include "mmaux/tensor.hpp"

#include <cmath>
#include <sstream>

#include "mmaux/errors.hpp"

namespace mmaux {

std::size_t numel_of(const std::vector<int>& shape) {
  std::size_t n = 1;
  for (int d : shape) {
    if (d < 0) throw InputError("tensor: negative dimension in shape " + shape_str(shape));
    n *= static_cast<std::size_t>(d);
  }
  return n;
}

std::string shape_str(const std::vector<int>& shape) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ",";
    os << shape[i];
  }
  os << "]";
  return os.str();
}

Tensor::Tensor(std::vector<int> s, std::vector<double> d) : shape(std::move(s)), data(std::move(d)) {
  if (data.size() != numel_of(shape)) {
    throw InputError("tensor: data length " + std::to_string(data.size()) +
                     " does not match shape " + shape_str(shape));
  }
}

Tensor Tensor::zeros(std::vector<int> shape) {
  std::size_t n = numel_of(shape);
  return Tensor(std::move(shape), std::vector<double>(n, 0.0));
}

Tensor Tensor::full(std::vector<int> shape, double value) {
  std::size_t n = numel_of(shape);
  return Tensor(std::move(shape), std::vector<double>(n, value));
}

Tensor Tensor::matrix(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) return Tensor({0, 0}, {});
  const int r = static_cast<int>(rows.size());
  const int c = static_cast<int>(rows[0].size());
  std::vector<double> data;
  data.reserve(static_cast<std::size_t>(r) * c);
  for (const auto& row : rows) {
    if (static_cast<int>(row.size()) != c) throw InputError("tensor: ragged rows in matrix literal");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Tensor({r, c}, std::move(data));
}

Tensor Tensor::uniform(std::vector<int> shape, double lo, double hi, Rng& rng) {
  Tensor t = zeros(std::move(shape));
  for (double& v : t.data) v = lo + (hi - lo) * rng.next_double();
  return t;
}

Tensor Tensor::gauss(std::vector<int> shape, double stddev, Rng& rng) {
  Tensor t = zeros(std::move(shape));
  for (double& v : t.data) v = stddev * rng.next_gauss();
  return t;
}

std::size_t Tensor::numel() const { return data.size(); }

int Tensor::rows() const {
  if (rank() != 2) throw InputError("tensor: rows() on rank-" + std::to_string(rank()) + " tensor");
  return shape[0];
}

int Tensor::cols() const {
  if (rank() != 2) throw InputError("tensor: cols() on rank-" + std::to_string(rank()) + " tensor");
  return shape[1];
}

double& Tensor::at(int r, int c) {
  return data[static_cast<std::size_t>(r) * shape[1] + static_cast<std::size_t>(c)];
}

double Tensor::at(int r, int c) const {
  return data[static_cast<std::size_t>(r) * shape[1] + static_cast<std::size_t>(c)];
}

bool Tensor::all_finite() const {
  for (double v : data) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

void Tensor::fill(double value) {
  for (double& v : data) v = value;
}

Tensor matmul_value(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2) throw InputError("matmul: both operands must be rank-2");
  if (a.cols() != b.rows()) {
    throw InputError("matmul: inner dimensions disagree, " + shape_str(a.shape) + " x " +
                     shape_str(b.shape));
  }
  const int n = a.rows(), k = a.cols(), m = b.cols();
  Tensor out = Tensor::zeros({n, m});
  for (int i = 0; i < n; ++i) {
    for (int p = 0; p < k; ++p) {
      const double aip = a.at(i, p);
      const double* brow = &b.data[static_cast<std::size_t>(p) * m];
      double* orow = &out.data[static_cast<std::size_t>(i) * m];
      for (int j = 0; j < m; ++j) orow[j] += aip * brow[j];
    }
  }
  return out;
}

Tensor transpose_value(const Tensor& a) {
  if (a.rank() != 2) throw InputError("transpose: operand must be rank-2");
  Tensor out = Tensor::zeros({a.cols(), a.rows()});
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) out.at(j, i) = a.at(i, j);
  return out;
}

}  // namespace mmaux
