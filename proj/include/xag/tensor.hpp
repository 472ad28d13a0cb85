#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace xag {

/// Dense 2-D matrix of doubles in row-major order.
///
/// A constructed tensor always has rows >= 1 and cols >= 1; the
/// default-constructed state is empty and only valid as a placeholder
/// (e.g. an attack node that has not been learned yet).
class Tensor {
public:
  Tensor() = default;
  Tensor(int rows, int cols);
  Tensor(int rows, int cols, std::vector<double> data);

  static Tensor zeros(int rows, int cols) { return Tensor(rows, cols); }
  static Tensor full(int rows, int cols, double value);
  static Tensor identity(int n);
  static Tensor from_rows(std::initializer_list<std::initializer_list<double>> rows);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  bool empty() const { return data_.empty(); }
  std::size_t size() const { return data_.size(); }

  double& at(int r, int c) { return data_[index(r, c)]; }
  double at(int r, int c) const { return data_[index(r, c)]; }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }

  bool same_shape(const Tensor& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }
  bool all_finite() const;
  std::string shape_str() const;

  friend bool operator==(const Tensor&, const Tensor&) = default;

private:
  std::size_t index(int r, int c) const {
    return static_cast<std::size_t>(r) * static_cast<std::size_t>(cols_) +
           static_cast<std::size_t>(c);
  }

  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> data_;
};

// Pure (untracked) tensor math. The differentiable counterparts live on Tape.
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor hadamard(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
Tensor transpose(const Tensor& a);
Tensor relu(const Tensor& a);
Tensor log_elem(const Tensor& a);

/// Numerically stable logistic; outputs are clamped into the open (0, 1).
Tensor sigmoid(const Tensor& a);
double sigmoid_scalar(double x);

/// Softmax along each row with max-subtraction.
Tensor row_softmax(const Tensor& a);

/// Scales each row to unit Euclidean norm. Rows with norm below 1e-12 are
/// returned unchanged; their indices are appended to `degenerate` when given.
Tensor l2_normalize_rows(const Tensor& a, std::vector<int>* degenerate = nullptr);

/// Elementwise max over the rows: (K, D) -> (1, D).
Tensor colmax(const Tensor& a);

Tensor concat_rows(std::span<const Tensor> parts);
Tensor concat_cols(std::span<const Tensor> parts);
Tensor slice_rows(const Tensor& a, int begin, int end);
Tensor reshape(const Tensor& a, int rows, int cols);

double sum(const Tensor& a);
double mean(const Tensor& a);
double dot_rows(const Tensor& a, int ra, const Tensor& b, int rb);

}  // namespace xag
