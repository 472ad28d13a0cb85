#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "xag/tensor.hpp"

namespace xag {

using ValueId = std::int32_t;

enum class OpKind : std::uint8_t {
  Leaf,       // trainable input
  Constant,   // data input, gradient computed but never consumed
  MatMul,
  Add,
  Sub,
  Hadamard,
  Scale,
  Relu,
  Log,
  Sigmoid,
  RowSoftmax,
  L2NormalizeRows,
  ColMax,
  Transpose,
  Sum,
  Mean,
  ConcatRows,
  ConcatCols,
  SliceRows,
  Reshape,
};

struct TapeNode {
  OpKind kind;
  std::vector<ValueId> inputs;  // always reference strictly earlier nodes
  Tensor value;
  Tensor grad;       // shape of value; populated by backward
  double factor = 0.0;  // Scale
  int aux0 = 0;      // SliceRows begin / Reshape rows
  int aux1 = 0;      // SliceRows end / Reshape cols
};

/// Append-only record of a differentiable computation. One tape per training
/// step; not shared across threads.
class Tape {
public:
  ValueId leaf(Tensor v);
  ValueId constant(Tensor v);

  ValueId matmul(ValueId a, ValueId b);
  ValueId add(ValueId a, ValueId b);
  ValueId sub(ValueId a, ValueId b);
  ValueId hadamard(ValueId a, ValueId b);
  ValueId scale(ValueId a, double factor);
  ValueId relu(ValueId a);
  ValueId log(ValueId a);
  ValueId sigmoid(ValueId a);
  ValueId row_softmax(ValueId a);
  ValueId l2_normalize_rows(ValueId a);
  ValueId colmax(ValueId a);
  ValueId transpose(ValueId a);
  ValueId sum(ValueId a);
  ValueId mean(ValueId a);
  ValueId concat_rows(std::span<const ValueId> parts);
  ValueId concat_cols(std::span<const ValueId> parts);
  ValueId slice_rows(ValueId a, int begin, int end);
  ValueId reshape(ValueId a, int rows, int cols);

  /// Reverse pass from a scalar (1x1) root. Gradients of earlier backward
  /// calls on the same tape are discarded.
  void backward(ValueId root);

  const Tensor& value(ValueId id) const { return node(id).value; }
  const Tensor& grad(ValueId id) const;
  double scalar(ValueId id) const;

  std::size_t size() const { return nodes_.size(); }
  const TapeNode& node(ValueId id) const;

private:
  TapeNode& node_mut(ValueId id);
  ValueId push(TapeNode n);
  ValueId check(ValueId id) const;

  std::vector<TapeNode> nodes_;
};

}  // namespace xag
