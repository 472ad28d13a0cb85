#include "xag/graph.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

#include "xag/errors.hpp"

namespace xag {

std::string modality_name(Modality m) { return m == Modality::Image ? "image" : "text"; }

FeatureGraph make_feature_graph(Tensor nodes, Tensor adjacency, Modality modality,
                                int identity) {
  if (adjacency.rows() != adjacency.cols()) {
    throw DimensionError("feature graph: adjacency " + adjacency.shape_str() +
                         " is not square");
  }
  if (adjacency.rows() != nodes.rows()) {
    throw DimensionError("feature graph: adjacency " + adjacency.shape_str() +
                         " does not match nodes " + nodes.shape_str());
  }
  for (int i = 0; i < adjacency.rows(); ++i) {
    for (int j = 0; j < adjacency.cols(); ++j) {
      double v = adjacency.at(i, j);
      if (v < 0.0) throw ContractError("feature graph: negative adjacency entry");
      if (std::abs(v - adjacency.at(j, i)) > 1e-12)
        throw ContractError("feature graph: adjacency not symmetric");
    }
  }
  return FeatureGraph{std::move(nodes), std::move(adjacency), modality, identity};
}

GcnParams init_gcn_params(int layer_count, int dim, Rng& rng) {
  if (layer_count < 1) throw ContractError("gcn params: layer count must be >= 1");
  double bound = std::sqrt(6.0 / (2.0 * dim));
  GcnParams p;
  for (int l = 0; l < layer_count; ++l) {
    Tensor w(dim, dim);
    for (double& v : w.values()) v = rng.uniform(-bound, bound);
    p.layer_weights.push_back(std::move(w));
  }
  return p;
}

Tensor build_adjacency(int n_nodes) {
  if (n_nodes < 1) throw ContractError("build_adjacency: need at least one node");
  return Tensor::full(n_nodes, n_nodes, 1.0 / static_cast<double>(n_nodes));
}

Tensor augment_adjacency(const Tensor& adjacency) {
  if (adjacency.rows() != adjacency.cols()) {
    throw DimensionError("augment_adjacency: " + adjacency.shape_str() + " is not square");
  }
  int n = adjacency.rows();
  Tensor out(n + 1, n + 1);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) out.at(i, j) = adjacency.at(i, j);
  for (int i = 0; i < n; ++i) {
    out.at(i, n) = 1.0;
    out.at(n, i) = 1.0;
  }
  out.at(n, n) = 0.0;
  return out;
}

AugmentedGraph implant_attack_node(const FeatureGraph& graph, const AttackNode& attack) {
  if (attack.modality != graph.modality) {
    throw ContractError("implant_attack_node: " + modality_name(attack.modality) +
                        " attack node offered to a " + modality_name(graph.modality) +
                        " graph");
  }
  if (attack.vector.empty() || attack.vector.rows() != 1 ||
      attack.vector.cols() != graph.nodes.cols()) {
    throw DimensionError("implant_attack_node: attack vector " + attack.vector.shape_str() +
                         " does not fit nodes " + graph.nodes.shape_str());
  }
  AugmentedGraph out;
  out.adjacency = augment_adjacency(graph.adjacency);
  const Tensor parts[] = {graph.nodes, attack.vector};
  out.nodes = concat_rows(parts);
  out.attack_row = graph.nodes.rows();
  return out;
}

Tensor gcn_forward(const Tensor& nodes, const Tensor& adjacency, const GcnParams& params) {
  Tape tape;
  ValueId v = tape.constant(nodes);
  ValueId a = tape.constant(adjacency);
  std::vector<ValueId> ws;
  ws.reserve(params.layer_weights.size());
  for (const Tensor& w : params.layer_weights) ws.push_back(tape.constant(w));
  return tape.value(gcn_forward(tape, v, a, ws));
}

ValueId gcn_forward(Tape& tape, ValueId nodes, ValueId adjacency,
                    std::span<const ValueId> layer_weights) {
  if (layer_weights.empty()) throw ContractError("gcn_forward: no layers");
  const Tensor& a = tape.value(adjacency);
  if (a.rows() != a.cols() || a.rows() != tape.value(nodes).rows()) {
    throw DimensionError("gcn_forward: adjacency " + a.shape_str() + " does not match nodes " +
                         tape.value(nodes).shape_str());
  }
  ValueId v = nodes;
  for (ValueId w : layer_weights) {
    if (tape.value(w).rows() != tape.value(nodes).cols() ||
        tape.value(w).cols() != tape.value(nodes).cols()) {
      throw DimensionError("gcn_forward: weight " + tape.value(w).shape_str() +
                           " does not match feature dim");
    }
    v = tape.sigmoid(tape.matmul(tape.matmul(adjacency, v), w));
  }
  return v;
}

Tensor strip_attack_node(const Tensor& convolved) {
  if (convolved.rows() < 2)
    throw ContractError("strip_attack_node: need at least two rows, got " +
                        convolved.shape_str());
  return slice_rows(convolved, 0, convolved.rows() - 1);
}

ValueId strip_attack_node(Tape& tape, ValueId convolved) {
  int rows = tape.value(convolved).rows();
  if (rows < 2)
    throw ContractError("strip_attack_node: need at least two rows, got " +
                        tape.value(convolved).shape_str());
  return tape.slice_rows(convolved, 0, rows - 1);
}

Tensor concat_semantic_global(const Tensor& nodes) {
  return reshape(nodes, 1, nodes.rows() * nodes.cols());
}

ValueId concat_semantic_global(Tape& tape, ValueId nodes) {
  const Tensor& v = tape.value(nodes);
  return tape.reshape(nodes, 1, v.rows() * v.cols());
}

void dump_graph(const FeatureGraph& graph, std::ostream& os) {
  char buf[64];
  os << graph.nodes.rows() << ' ' << graph.nodes.cols() << ' '
     << modality_name(graph.modality) << ' ' << graph.identity << '\n';
  auto write_matrix = [&](const Tensor& t) {
    for (int i = 0; i < t.rows(); ++i) {
      for (int j = 0; j < t.cols(); ++j) {
        std::snprintf(buf, sizeof(buf), "%.17g", t.at(i, j));
        os << (j ? " " : "") << buf;
      }
      os << '\n';
    }
  };
  write_matrix(graph.adjacency);
  write_matrix(graph.nodes);
}

}  // namespace xag
