#include "xag/autodiff.hpp"

#include <cmath>
#include <string>

#include "xag/errors.hpp"

namespace xag {

namespace {

void accumulate(Tensor& dst, const Tensor& src) {
  for (std::size_t i = 0; i < dst.size(); ++i) dst.values()[i] += src.values()[i];
}

}  // namespace

ValueId Tape::push(TapeNode n) {
  nodes_.push_back(std::move(n));
  return static_cast<ValueId>(nodes_.size() - 1);
}

ValueId Tape::check(ValueId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= nodes_.size()) {
    throw ContractError("tape: value id " + std::to_string(id) + " out of range");
  }
  return id;
}

const TapeNode& Tape::node(ValueId id) const { return nodes_[check(id)]; }
TapeNode& Tape::node_mut(ValueId id) { return nodes_[check(id)]; }

const Tensor& Tape::grad(ValueId id) const {
  const TapeNode& n = node(id);
  if (n.grad.empty()) throw StateError("tape: gradient not populated; call backward first");
  return n.grad;
}

double Tape::scalar(ValueId id) const {
  const Tensor& v = value(id);
  if (v.rows() != 1 || v.cols() != 1) {
    throw ContractError("tape: value " + v.shape_str() + " is not scalar");
  }
  return v.at(0, 0);
}

ValueId Tape::leaf(Tensor v) {
  if (v.empty()) throw ContractError("tape: empty leaf");
  return push({OpKind::Leaf, {}, std::move(v), {}});
}

ValueId Tape::constant(Tensor v) {
  if (v.empty()) throw ContractError("tape: empty constant");
  return push({OpKind::Constant, {}, std::move(v), {}});
}

ValueId Tape::matmul(ValueId a, ValueId b) {
  Tensor v = xag::matmul(value(a), value(b));
  return push({OpKind::MatMul, {check(a), check(b)}, std::move(v), {}});
}

ValueId Tape::add(ValueId a, ValueId b) {
  Tensor v = xag::add(value(a), value(b));
  return push({OpKind::Add, {check(a), check(b)}, std::move(v), {}});
}

ValueId Tape::sub(ValueId a, ValueId b) {
  Tensor v = xag::sub(value(a), value(b));
  return push({OpKind::Sub, {check(a), check(b)}, std::move(v), {}});
}

ValueId Tape::hadamard(ValueId a, ValueId b) {
  Tensor v = xag::hadamard(value(a), value(b));
  return push({OpKind::Hadamard, {check(a), check(b)}, std::move(v), {}});
}

ValueId Tape::scale(ValueId a, double factor) {
  Tensor v = xag::scale(value(a), factor);
  TapeNode n{OpKind::Scale, {check(a)}, std::move(v), {}};
  n.factor = factor;
  return push(std::move(n));
}

ValueId Tape::relu(ValueId a) {
  return push({OpKind::Relu, {check(a)}, xag::relu(value(a)), {}});
}

ValueId Tape::log(ValueId a) {
  return push({OpKind::Log, {check(a)}, xag::log_elem(value(a)), {}});
}

ValueId Tape::sigmoid(ValueId a) {
  return push({OpKind::Sigmoid, {check(a)}, xag::sigmoid(value(a)), {}});
}

ValueId Tape::row_softmax(ValueId a) {
  return push({OpKind::RowSoftmax, {check(a)}, xag::row_softmax(value(a)), {}});
}

ValueId Tape::l2_normalize_rows(ValueId a) {
  return push({OpKind::L2NormalizeRows, {check(a)}, xag::l2_normalize_rows(value(a)), {}});
}

ValueId Tape::colmax(ValueId a) {
  return push({OpKind::ColMax, {check(a)}, xag::colmax(value(a)), {}});
}

ValueId Tape::transpose(ValueId a) {
  return push({OpKind::Transpose, {check(a)}, xag::transpose(value(a)), {}});
}

ValueId Tape::sum(ValueId a) {
  Tensor v(1, 1, {xag::sum(value(a))});
  return push({OpKind::Sum, {check(a)}, std::move(v), {}});
}

ValueId Tape::mean(ValueId a) {
  Tensor v(1, 1, {xag::mean(value(a))});
  return push({OpKind::Mean, {check(a)}, std::move(v), {}});
}

ValueId Tape::concat_rows(std::span<const ValueId> parts) {
  std::vector<Tensor> vals;
  std::vector<ValueId> ids;
  vals.reserve(parts.size());
  for (ValueId p : parts) {
    ids.push_back(check(p));
    vals.push_back(value(p));
  }
  Tensor v = xag::concat_rows(vals);
  return push({OpKind::ConcatRows, std::move(ids), std::move(v), {}});
}

ValueId Tape::concat_cols(std::span<const ValueId> parts) {
  std::vector<Tensor> vals;
  std::vector<ValueId> ids;
  vals.reserve(parts.size());
  for (ValueId p : parts) {
    ids.push_back(check(p));
    vals.push_back(value(p));
  }
  Tensor v = xag::concat_cols(vals);
  return push({OpKind::ConcatCols, std::move(ids), std::move(v), {}});
}

ValueId Tape::slice_rows(ValueId a, int begin, int end) {
  Tensor v = xag::slice_rows(value(a), begin, end);
  TapeNode n{OpKind::SliceRows, {check(a)}, std::move(v), {}};
  n.aux0 = begin;
  n.aux1 = end;
  return push(std::move(n));
}

ValueId Tape::reshape(ValueId a, int rows, int cols) {
  Tensor v = xag::reshape(value(a), rows, cols);
  TapeNode n{OpKind::Reshape, {check(a)}, std::move(v), {}};
  n.aux0 = rows;
  n.aux1 = cols;
  return push(std::move(n));
}

void Tape::backward(ValueId root) {
  check(root);
  const Tensor& rv = nodes_[root].value;
  if (rv.rows() != 1 || rv.cols() != 1) {
    throw ContractError("backward: root must be scalar, got " + rv.shape_str());
  }

  for (auto& n : nodes_) n.grad = Tensor::zeros(n.value.rows(), n.value.cols());
  std::vector<char> touched(nodes_.size(), 0);
  nodes_[root].grad.at(0, 0) = 1.0;
  touched[root] = 1;

  for (ValueId id = root; id >= 0; --id) {
    if (!touched[id]) continue;
    TapeNode& n = nodes_[id];
    const Tensor& g = n.grad;
    auto touch = [&](ValueId in) { touched[in] = 1; };

    switch (n.kind) {
      case OpKind::Leaf:
      case OpKind::Constant:
        break;
      case OpKind::MatMul: {
        const Tensor& a = nodes_[n.inputs[0]].value;
        const Tensor& b = nodes_[n.inputs[1]].value;
        accumulate(nodes_[n.inputs[0]].grad, xag::matmul(g, xag::transpose(b)));
        accumulate(nodes_[n.inputs[1]].grad, xag::matmul(xag::transpose(a), g));
        touch(n.inputs[0]);
        touch(n.inputs[1]);
        break;
      }
      case OpKind::Add: {
        accumulate(nodes_[n.inputs[0]].grad, g);
        accumulate(nodes_[n.inputs[1]].grad, g);
        touch(n.inputs[0]);
        touch(n.inputs[1]);
        break;
      }
      case OpKind::Sub: {
        accumulate(nodes_[n.inputs[0]].grad, g);
        accumulate(nodes_[n.inputs[1]].grad, xag::scale(g, -1.0));
        touch(n.inputs[0]);
        touch(n.inputs[1]);
        break;
      }
      case OpKind::Hadamard: {
        accumulate(nodes_[n.inputs[0]].grad, xag::hadamard(g, nodes_[n.inputs[1]].value));
        accumulate(nodes_[n.inputs[1]].grad, xag::hadamard(g, nodes_[n.inputs[0]].value));
        touch(n.inputs[0]);
        touch(n.inputs[1]);
        break;
      }
      case OpKind::Scale: {
        accumulate(nodes_[n.inputs[0]].grad, xag::scale(g, n.factor));
        touch(n.inputs[0]);
        break;
      }
      case OpKind::Relu: {
        const Tensor& x = nodes_[n.inputs[0]].value;
        Tensor d(g.rows(), g.cols());
        for (std::size_t i = 0; i < d.size(); ++i)
          d.values()[i] = x.values()[i] > 0.0 ? g.values()[i] : 0.0;
        accumulate(nodes_[n.inputs[0]].grad, d);
        touch(n.inputs[0]);
        break;
      }
      case OpKind::Log: {
        const Tensor& x = nodes_[n.inputs[0]].value;
        Tensor d(g.rows(), g.cols());
        for (std::size_t i = 0; i < d.size(); ++i) d.values()[i] = g.values()[i] / x.values()[i];
        accumulate(nodes_[n.inputs[0]].grad, d);
        touch(n.inputs[0]);
        break;
      }
      case OpKind::Sigmoid: {
        const Tensor& y = n.value;
        Tensor d(g.rows(), g.cols());
        for (std::size_t i = 0; i < d.size(); ++i) {
          double yi = y.values()[i];
          d.values()[i] = g.values()[i] * yi * (1.0 - yi);
        }
        accumulate(nodes_[n.inputs[0]].grad, d);
        touch(n.inputs[0]);
        break;
      }
      case OpKind::RowSoftmax: {
        const Tensor& y = n.value;
        Tensor d(g.rows(), g.cols());
        for (int i = 0; i < y.rows(); ++i) {
          double gy = 0.0;
          for (int j = 0; j < y.cols(); ++j) gy += g.at(i, j) * y.at(i, j);
          for (int j = 0; j < y.cols(); ++j) d.at(i, j) = y.at(i, j) * (g.at(i, j) - gy);
        }
        accumulate(nodes_[n.inputs[0]].grad, d);
        touch(n.inputs[0]);
        break;
      }
      case OpKind::L2NormalizeRows: {
        const Tensor& x = nodes_[n.inputs[0]].value;
        const Tensor& y = n.value;
        Tensor d(g.rows(), g.cols());
        for (int i = 0; i < x.rows(); ++i) {
          double sq = 0.0;
          for (int j = 0; j < x.cols(); ++j) sq += x.at(i, j) * x.at(i, j);
          double norm = std::sqrt(sq);
          if (norm < 1e-12) {
            for (int j = 0; j < x.cols(); ++j) d.at(i, j) = g.at(i, j);  // identity row
          } else {
            double gy = 0.0;
            for (int j = 0; j < x.cols(); ++j) gy += g.at(i, j) * y.at(i, j);
            for (int j = 0; j < x.cols(); ++j)
              d.at(i, j) = (g.at(i, j) - gy * y.at(i, j)) / norm;
          }
        }
        accumulate(nodes_[n.inputs[0]].grad, d);
        touch(n.inputs[0]);
        break;
      }
      case OpKind::ColMax: {
        const Tensor& x = nodes_[n.inputs[0]].value;
        Tensor d(x.rows(), x.cols());
        for (int j = 0; j < x.cols(); ++j) {
          int arg = 0;
          for (int i = 1; i < x.rows(); ++i)
            if (x.at(i, j) > x.at(arg, j)) arg = i;  // ties go to the first row
          d.at(arg, j) = g.at(0, j);
        }
        accumulate(nodes_[n.inputs[0]].grad, d);
        touch(n.inputs[0]);
        break;
      }
      case OpKind::Transpose: {
        accumulate(nodes_[n.inputs[0]].grad, xag::transpose(g));
        touch(n.inputs[0]);
        break;
      }
      case OpKind::Sum: {
        const Tensor& x = nodes_[n.inputs[0]].value;
        accumulate(nodes_[n.inputs[0]].grad, Tensor::full(x.rows(), x.cols(), g.at(0, 0)));
        touch(n.inputs[0]);
        break;
      }
      case OpKind::Mean: {
        const Tensor& x = nodes_[n.inputs[0]].value;
        double v = g.at(0, 0) / static_cast<double>(x.size());
        accumulate(nodes_[n.inputs[0]].grad, Tensor::full(x.rows(), x.cols(), v));
        touch(n.inputs[0]);
        break;
      }
      case OpKind::ConcatRows: {
        int r = 0;
        for (ValueId in : n.inputs) {
          TapeNode& src = nodes_[in];
          for (int i = 0; i < src.value.rows(); ++i, ++r)
            for (int j = 0; j < src.value.cols(); ++j) src.grad.at(i, j) += g.at(r, j);
          touch(in);
        }
        break;
      }
      case OpKind::ConcatCols: {
        int c = 0;
        for (ValueId in : n.inputs) {
          TapeNode& src = nodes_[in];
          for (int j = 0; j < src.value.cols(); ++j, ++c)
            for (int i = 0; i < src.value.rows(); ++i) src.grad.at(i, j) += g.at(i, c);
          touch(in);
        }
        break;
      }
      case OpKind::SliceRows: {
        TapeNode& src = nodes_[n.inputs[0]];
        for (int i = n.aux0; i < n.aux1; ++i)
          for (int j = 0; j < g.cols(); ++j) src.grad.at(i, j) += g.at(i - n.aux0, j);
        touch(n.inputs[0]);
        break;
      }
      case OpKind::Reshape: {
        const Tensor& x = nodes_[n.inputs[0]].value;
        accumulate(nodes_[n.inputs[0]].grad, xag::reshape(g, x.rows(), x.cols()));
        touch(n.inputs[0]);
        break;
      }
    }
  }
}

}  // namespace xag
