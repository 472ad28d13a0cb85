#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "xag/autodiff.hpp"
#include "xag/rng.hpp"
#include "xag/tensor.hpp"

namespace xag {

enum class Modality : std::uint8_t { Image = 0, Text = 1 };

std::string modality_name(Modality m);

/// Per-sample structured graph. Node index l has fixed semantics: node l of
/// an image graph and node l of a text graph describe the same body region.
struct FeatureGraph {
  Tensor nodes;      // N x D
  Tensor adjacency;  // N x N, symmetric, nonnegative
  Modality modality = Modality::Image;
  int identity = 0;
};

/// Validates the adjacency invariants (square, symmetric within 1e-12,
/// nonnegative) and bundles the graph.
FeatureGraph make_feature_graph(Tensor nodes, Tensor adjacency, Modality modality,
                                int identity);

/// Graph with the external attack node appended as row/column N.
struct AugmentedGraph {
  Tensor adjacency;  // (N+1) x (N+1)
  Tensor nodes;      // (N+1) x D
  int attack_row = 0;
};

/// One learnable external node per modality.
struct AttackNode {
  Modality modality = Modality::Image;
  Tensor vector;  // 1 x D
};

/// Stack of square graph-convolution weights, applied in order.
struct GcnParams {
  std::vector<Tensor> layer_weights;  // each D x D
};

GcnParams init_gcn_params(int layer_count, int dim, Rng& rng);

/// Complete graph with self-loops; every entry 1/N, so each row sums to 1.
Tensor build_adjacency(int n_nodes);

/// Block extension of an adjacency: [[A, 1], [1^T, 0]]. Not renormalized.
Tensor augment_adjacency(const Tensor& adjacency);

AugmentedGraph implant_attack_node(const FeatureGraph& graph, const AttackNode& attack);

/// Repeated Sigmoid(A V W) layers. Output has the shape of `nodes` with all
/// entries in (0, 1).
Tensor gcn_forward(const Tensor& nodes, const Tensor& adjacency, const GcnParams& params);
ValueId gcn_forward(Tape& tape, ValueId nodes, ValueId adjacency,
                    std::span<const ValueId> layer_weights);

/// Drops the final (attack) row. Requires at least two rows.
Tensor strip_attack_node(const Tensor& convolved);
ValueId strip_attack_node(Tape& tape, ValueId convolved);

/// Concatenates node rows in ascending index into a single 1 x (N*D) feature.
Tensor concat_semantic_global(const Tensor& nodes);
ValueId concat_semantic_global(Tape& tape, ValueId nodes);

/// Debug dump: "N D modality identity" header, adjacency rows, node rows,
/// 17 significant digits.
void dump_graph(const FeatureGraph& graph, std::ostream& os);

}  // namespace xag
