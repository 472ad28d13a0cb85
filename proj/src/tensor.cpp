#include "xag/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "xag/errors.hpp"

namespace xag {

namespace {

void require_nonempty(const Tensor& t, const char* op) {
  if (t.empty()) throw ContractError(std::string(op) + ": empty tensor operand");
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (!a.same_shape(b)) {
    throw DimensionError(std::string(op) + ": shape mismatch " + a.shape_str() + " vs " +
                         b.shape_str());
  }
}

Tensor map_elem(const Tensor& a, double (*f)(double)) {
  Tensor out(a.rows(), a.cols());
  const auto src = a.values();
  auto dst = out.values();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = f(src[i]);
  return out;
}

}  // namespace

Tensor::Tensor(int rows, int cols) : rows_(rows), cols_(cols) {
  if (rows < 1 || cols < 1) {
    throw ContractError("tensor dims must be >= 1, got " + std::to_string(rows) + "x" +
                        std::to_string(cols));
  }
  data_.assign(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols), 0.0);
}

Tensor::Tensor(int rows, int cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (rows < 1 || cols < 1) {
    throw ContractError("tensor dims must be >= 1, got " + std::to_string(rows) + "x" +
                        std::to_string(cols));
  }
  if (data_.size() != static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols)) {
    throw ContractError("tensor data length " + std::to_string(data_.size()) +
                        " does not match " + shape_str());
  }
}

Tensor Tensor::full(int rows, int cols, double value) {
  Tensor t(rows, cols);
  std::fill(t.data_.begin(), t.data_.end(), value);
  return t;
}

Tensor Tensor::identity(int n) {
  Tensor t(n, n);
  for (int i = 0; i < n; ++i) t.at(i, i) = 1.0;
  return t;
}

Tensor Tensor::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  int r = static_cast<int>(rows.size());
  if (r == 0) throw ContractError("from_rows: no rows");
  int c = static_cast<int>(rows.begin()->size());
  Tensor t(r, c);
  int i = 0;
  for (const auto& row : rows) {
    if (static_cast<int>(row.size()) != c) throw ContractError("from_rows: ragged rows");
    int j = 0;
    for (double v : row) t.at(i, j++) = v;
    ++i;
  }
  return t;
}

bool Tensor::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

std::string Tensor::shape_str() const {
  return std::to_string(rows_) + "x" + std::to_string(cols_);
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_nonempty(a, "matmul");
  require_nonempty(b, "matmul");
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: inner dims disagree, " + a.shape_str() + " x " +
                         b.shape_str());
  }
  Tensor out(a.rows(), b.cols());
  for (int i = 0; i < a.rows(); ++i) {
    for (int k = 0; k < a.cols(); ++k) {
      double aik = a.at(i, k);
      if (aik == 0.0) continue;
      for (int j = 0; j < b.cols(); ++j) out.at(i, j) += aik * b.at(k, j);
    }
  }
  return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  Tensor out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.size(); ++i) out.values()[i] = a.values()[i] + b.values()[i];
  return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  Tensor out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.size(); ++i) out.values()[i] = a.values()[i] - b.values()[i];
  return out;
}

Tensor hadamard(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "hadamard");
  Tensor out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.size(); ++i) out.values()[i] = a.values()[i] * b.values()[i];
  return out;
}

Tensor scale(const Tensor& a, double factor) {
  require_nonempty(a, "scale");
  Tensor out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.size(); ++i) out.values()[i] = factor * a.values()[i];
  return out;
}

Tensor transpose(const Tensor& a) {
  require_nonempty(a, "transpose");
  Tensor out(a.cols(), a.rows());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) out.at(j, i) = a.at(i, j);
  return out;
}

Tensor relu(const Tensor& a) {
  require_nonempty(a, "relu");
  Tensor out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.size(); ++i)
    out.values()[i] = a.values()[i] > 0.0 ? a.values()[i] : 0.0;
  return out;
}

Tensor log_elem(const Tensor& a) {
  require_nonempty(a, "log");
  return map_elem(a, [](double x) { return std::log(x); });
}

double sigmoid_scalar(double x) {
  double y;
  if (x >= 0.0) {
    y = 1.0 / (1.0 + std::exp(-x));
  } else {
    double e = std::exp(x);
    y = e / (1.0 + e);
  }
  // Keep the output strictly inside (0, 1) even when exp saturates.
  constexpr double lo = std::numeric_limits<double>::min();
  const double hi = 1.0 - std::numeric_limits<double>::epsilon() / 2.0;
  return std::min(hi, std::max(lo, y));
}

Tensor sigmoid(const Tensor& a) {
  require_nonempty(a, "sigmoid");
  return map_elem(a, &sigmoid_scalar);
}

Tensor row_softmax(const Tensor& a) {
  require_nonempty(a, "row_softmax");
  Tensor out(a.rows(), a.cols());
  for (int i = 0; i < a.rows(); ++i) {
    double m = a.at(i, 0);
    for (int j = 1; j < a.cols(); ++j) m = std::max(m, a.at(i, j));
    double denom = 0.0;
    for (int j = 0; j < a.cols(); ++j) {
      double e = std::exp(a.at(i, j) - m);
      out.at(i, j) = e;
      denom += e;
    }
    for (int j = 0; j < a.cols(); ++j) out.at(i, j) /= denom;
  }
  return out;
}

Tensor l2_normalize_rows(const Tensor& a, std::vector<int>* degenerate) {
  require_nonempty(a, "l2_normalize_rows");
  Tensor out(a.rows(), a.cols());
  for (int i = 0; i < a.rows(); ++i) {
    double sq = 0.0;
    for (int j = 0; j < a.cols(); ++j) sq += a.at(i, j) * a.at(i, j);
    double norm = std::sqrt(sq);
    if (norm < 1e-12) {
      if (degenerate) degenerate->push_back(i);
      for (int j = 0; j < a.cols(); ++j) out.at(i, j) = a.at(i, j);
    } else {
      for (int j = 0; j < a.cols(); ++j) out.at(i, j) = a.at(i, j) / norm;
    }
  }
  return out;
}

Tensor colmax(const Tensor& a) {
  require_nonempty(a, "colmax");
  Tensor out(1, a.cols());
  for (int j = 0; j < a.cols(); ++j) {
    double m = a.at(0, j);
    for (int i = 1; i < a.rows(); ++i) m = std::max(m, a.at(i, j));
    out.at(0, j) = m;
  }
  return out;
}

Tensor concat_rows(std::span<const Tensor> parts) {
  if (parts.empty()) throw ContractError("concat_rows: no parts");
  int cols = parts[0].cols();
  int rows = 0;
  for (const auto& p : parts) {
    require_nonempty(p, "concat_rows");
    if (p.cols() != cols) {
      throw DimensionError("concat_rows: column mismatch " + p.shape_str() + " vs " +
                           parts[0].shape_str());
    }
    rows += p.rows();
  }
  Tensor out(rows, cols);
  int r = 0;
  for (const auto& p : parts) {
    for (int i = 0; i < p.rows(); ++i, ++r)
      for (int j = 0; j < cols; ++j) out.at(r, j) = p.at(i, j);
  }
  return out;
}

Tensor concat_cols(std::span<const Tensor> parts) {
  if (parts.empty()) throw ContractError("concat_cols: no parts");
  int rows = parts[0].rows();
  int cols = 0;
  for (const auto& p : parts) {
    require_nonempty(p, "concat_cols");
    if (p.rows() != rows) {
      throw DimensionError("concat_cols: row mismatch " + p.shape_str() + " vs " +
                           parts[0].shape_str());
    }
    cols += p.cols();
  }
  Tensor out(rows, cols);
  int c = 0;
  for (const auto& p : parts) {
    for (int j = 0; j < p.cols(); ++j, ++c)
      for (int i = 0; i < rows; ++i) out.at(i, c) = p.at(i, j);
  }
  return out;
}

Tensor slice_rows(const Tensor& a, int begin, int end) {
  require_nonempty(a, "slice_rows");
  if (begin < 0 || end > a.rows() || begin >= end) {
    throw ContractError("slice_rows: bad range [" + std::to_string(begin) + ", " +
                        std::to_string(end) + ") for " + a.shape_str());
  }
  Tensor out(end - begin, a.cols());
  for (int i = begin; i < end; ++i)
    for (int j = 0; j < a.cols(); ++j) out.at(i - begin, j) = a.at(i, j);
  return out;
}

Tensor reshape(const Tensor& a, int rows, int cols) {
  require_nonempty(a, "reshape");
  if (static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols) != a.size()) {
    throw DimensionError("reshape: cannot view " + a.shape_str() + " as " +
                         std::to_string(rows) + "x" + std::to_string(cols));
  }
  std::vector<double> data(a.values().begin(), a.values().end());
  return Tensor(rows, cols, std::move(data));
}

double sum(const Tensor& a) {
  require_nonempty(a, "sum");
  double s = 0.0;
  for (double v : a.values()) s += v;
  return s;
}

double mean(const Tensor& a) { return sum(a) / static_cast<double>(a.size()); }

double dot_rows(const Tensor& a, int ra, const Tensor& b, int rb) {
  if (a.cols() != b.cols()) {
    throw DimensionError("dot_rows: width mismatch " + a.shape_str() + " vs " + b.shape_str());
  }
  double s = 0.0;
  for (int j = 0; j < a.cols(); ++j) s += a.at(ra, j) * b.at(rb, j);
  return s;
}

}  // namespace xag
