#include "xag/losses.hpp"

#include <cmath>
#include <string>

#include "xag/errors.hpp"

namespace xag {

namespace {

// sum_ij p_ij log(p_ij / (q_ij + eps)), unscaled.
ValueId kl_to_labels(Tape& tape, ValueId p, const Tensor& q, double eps) {
  const Tensor& pv = tape.value(p);
  if (!pv.same_shape(q)) {
    throw DimensionError("cmpm: p " + pv.shape_str() + " vs q " + q.shape_str());
  }
  Tensor log_q(q.rows(), q.cols());
  for (std::size_t i = 0; i < q.size(); ++i)
    log_q.values()[i] = std::log(q.values()[i] + eps);
  ValueId diff = tape.sub(tape.log(p), tape.constant(std::move(log_q)));
  return tape.sum(tape.hadamard(p, diff));
}

void check_node_sets(std::size_t nv, std::size_t nt) {
  if (nv == 0 || nv != nt) {
    throw ContractError("node CMPM: modalities disagree on node count (" +
                        std::to_string(nv) + " vs " + std::to_string(nt) + ")");
  }
}

}  // namespace

Tensor row_normalize_labels(const Tensor& y) {
  Tensor q(y.rows(), y.cols());
  for (int i = 0; i < y.rows(); ++i) {
    double total = 0.0;
    for (int j = 0; j < y.cols(); ++j) total += y.at(i, j);
    if (total <= 0.0)
      throw ContractError("labels: row " + std::to_string(i) + " has no positive entry");
    for (int j = 0; j < y.cols(); ++j) q.at(i, j) = y.at(i, j) / total;
  }
  return q;
}

MatchLabels make_match_labels(std::span<const int> image_ids, std::span<const int> text_ids) {
  if (image_ids.empty() || image_ids.size() != text_ids.size()) {
    throw ContractError("labels: need equally sized nonempty id lists");
  }
  int n = static_cast<int>(image_ids.size());
  Tensor y(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) y.at(i, j) = image_ids[i] == text_ids[j] ? 1.0 : 0.0;
  for (int j = 0; j < n; ++j) {
    bool any = false;
    for (int i = 0; i < n; ++i) any = any || y.at(i, j) > 0.0;
    if (!any) throw ContractError("labels: column " + std::to_string(j) + " has no positive");
  }
  MatchLabels labels;
  labels.q = row_normalize_labels(y);
  labels.y = std::move(y);
  return labels;
}

ValueId match_prob(Tape& tape, ValueId fv, ValueId ft) {
  const Tensor& a = tape.value(fv);
  const Tensor& b = tape.value(ft);
  if (a.cols() != b.cols()) {
    throw DimensionError("match_prob: feature dims disagree, " + a.shape_str() + " vs " +
                         b.shape_str());
  }
  ValueId normalized = tape.l2_normalize_rows(ft);
  return tape.row_softmax(tape.matmul(fv, tape.transpose(normalized)));
}

Tensor match_prob(const Tensor& fv, const Tensor& ft) {
  Tape tape;
  return tape.value(match_prob(tape, tape.constant(fv), tape.constant(ft)));
}

ValueId cmpm_directional(Tape& tape, ValueId p, const Tensor& q, double eps) {
  int n = tape.value(p).rows();
  return tape.scale(kl_to_labels(tape, p, q, eps), 1.0 / static_cast<double>(n));
}

double cmpm_directional(const Tensor& p, const Tensor& q, double eps) {
  Tape tape;
  return tape.scalar(cmpm_directional(tape, tape.constant(p), q, eps));
}

ValueId cmpm_node(Tape& tape, std::span<const ValueId> fv_nodes,
                  std::span<const ValueId> ft_nodes, const MatchLabels& labels, double eps) {
  check_node_sets(fv_nodes.size(), ft_nodes.size());
  const Tensor q_t2v = row_normalize_labels(transpose(labels.y));
  double inv_n_nodes = 1.0 / static_cast<double>(fv_nodes.size());
  ValueId v2t = -1;
  ValueId t2v = -1;
  for (std::size_t l = 0; l < fv_nodes.size(); ++l) {
    ValueId lv = cmpm_directional(tape, match_prob(tape, fv_nodes[l], ft_nodes[l]), labels.q,
                                  eps);
    ValueId lt = cmpm_directional(tape, match_prob(tape, ft_nodes[l], fv_nodes[l]), q_t2v,
                                  eps);
    v2t = (v2t < 0) ? lv : tape.add(v2t, lv);
    t2v = (t2v < 0) ? lt : tape.add(t2v, lt);
  }
  return tape.add(tape.scale(v2t, inv_n_nodes), tape.scale(t2v, inv_n_nodes));
}

double cmpm_node(std::span<const Tensor> fv_nodes, std::span<const Tensor> ft_nodes,
                 const MatchLabels& labels, double eps) {
  Tape tape;
  std::vector<ValueId> fv, ft;
  for (const Tensor& t : fv_nodes) fv.push_back(tape.constant(t));
  for (const Tensor& t : ft_nodes) ft.push_back(tape.constant(t));
  return tape.scalar(cmpm_node(tape, fv, ft, labels, eps));
}

ValueId cmpm_global(Tape& tape, ValueId fg_v, ValueId fg_t, const MatchLabels& labels,
                    double eps) {
  const Tensor q_t2v = row_normalize_labels(transpose(labels.y));
  ValueId v2t = cmpm_directional(tape, match_prob(tape, fg_v, fg_t), labels.q, eps);
  ValueId t2v = cmpm_directional(tape, match_prob(tape, fg_t, fg_v), q_t2v, eps);
  return tape.add(v2t, t2v);
}

double cmpm_global(const Tensor& fg_v, const Tensor& fg_t, const MatchLabels& labels,
                   double eps) {
  Tape tape;
  return tape.scalar(cmpm_global(tape, tape.constant(fg_v), tape.constant(fg_t), labels, eps));
}

ValueId attack_objective(Tape& tape, std::span<const ValueId> v_attacked_nodes,
                         std::span<const ValueId> t_attacked_nodes, const MatchLabels& labels,
                         double eps) {
  return cmpm_node(tape, v_attacked_nodes, t_attacked_nodes, labels, eps);
}

double attack_objective(std::span<const Tensor> v_attacked_nodes,
                        std::span<const Tensor> t_attacked_nodes, const MatchLabels& labels,
                        double eps) {
  return cmpm_node(v_attacked_nodes, t_attacked_nodes, labels, eps);
}

ValueId adversarial_cmpm(Tape& tape, ValueId pv, ValueId pt, const MatchLabels& labels,
                         double eps) {
  int n = tape.value(pv).rows();
  if (tape.value(pt).rows() != n) {
    throw DimensionError("adversarial_cmpm: batch sizes disagree, " +
                         tape.value(pv).shape_str() + " vs " + tape.value(pt).shape_str());
  }
  const Tensor q_t2v = row_normalize_labels(transpose(labels.y));
  ValueId v2t = kl_to_labels(tape, match_prob(tape, pv, pt), labels.q, eps);
  ValueId t2v = kl_to_labels(tape, match_prob(tape, pt, pv), q_t2v, eps);
  double inv_n2 = 1.0 / (static_cast<double>(n) * static_cast<double>(n));
  return tape.scale(tape.add(v2t, t2v), inv_n2);
}

double adversarial_cmpm(const Tensor& pv, const Tensor& pt, const MatchLabels& labels,
                        double eps) {
  Tape tape;
  return tape.scalar(
      adversarial_cmpm(tape, tape.constant(pv), tape.constant(pt), labels, eps));
}

ValueId total_adversarial_loss(Tape& tape, ValueId stage_term, ValueId node_term,
                               ValueId attack_term, const LossWeights& w) {
  ValueId out = tape.add(stage_term, tape.scale(node_term, w.lambda1));
  return tape.add(out, tape.scale(attack_term, w.lambda2));
}

}  // namespace xag
