#pragma once

#include <span>
#include <vector>

#include "xag/autodiff.hpp"
#include "xag/tensor.hpp"

namespace xag {

/// Identity-match ground truth for a batch of n image-text pairs.
/// y[i][j] = 1 iff image i and text j share an identity; q is y with rows
/// normalized to sum to 1. Every row and column of y must contain a positive.
struct MatchLabels {
  Tensor y;
  Tensor q;
};

MatchLabels make_match_labels(std::span<const int> image_ids, std::span<const int> text_ids);

/// Row-normalizes a nonnegative label matrix.
Tensor row_normalize_labels(const Tensor& y);

struct LossWeights {
  double lambda1 = 1.0;
  double lambda2 = 1.0;
  double epsilon = 1e-8;
};

/// Matching probabilities: softmax over rows of fv . normalize(ft)^T.
/// Only the text side is L2-normalized.
ValueId match_prob(Tape& tape, ValueId fv, ValueId ft);
Tensor match_prob(const Tensor& fv, const Tensor& ft);

/// Directional CMPM: (1/n) sum_ij p_ij log(p_ij / (q_ij + eps)).
ValueId cmpm_directional(Tape& tape, ValueId p, const Tensor& q, double eps);
double cmpm_directional(const Tensor& p, const Tensor& q, double eps);

/// Bidirectional node-level CMPM, averaged across the N per-node batches.
/// fv_nodes and ft_nodes each hold N values of shape n x D.
ValueId cmpm_node(Tape& tape, std::span<const ValueId> fv_nodes,
                  std::span<const ValueId> ft_nodes, const MatchLabels& labels, double eps);
double cmpm_node(std::span<const Tensor> fv_nodes, std::span<const Tensor> ft_nodes,
                 const MatchLabels& labels, double eps);

/// Bidirectional CMPM on global (concatenated) features.
ValueId cmpm_global(Tape& tape, ValueId fg_v, ValueId fg_t, const MatchLabels& labels,
                    double eps);
double cmpm_global(const Tensor& fg_v, const Tensor& fg_t, const MatchLabels& labels,
                   double eps);

/// Divergence the attack node ascends: bidirectional node CMPM computed on
/// attacked (implanted, convolved, stripped) node features.
ValueId attack_objective(Tape& tape, std::span<const ValueId> v_attacked_nodes,
                         std::span<const ValueId> t_attacked_nodes, const MatchLabels& labels,
                         double eps);
double attack_objective(std::span<const Tensor> v_attacked_nodes,
                        std::span<const Tensor> t_attacked_nodes, const MatchLabels& labels,
                        double eps);

/// Adversarial-training CMPM on perturbed concatenated features, scaled by
/// 1/n^2, both directions.
ValueId adversarial_cmpm(Tape& tape, ValueId pv, ValueId pt, const MatchLabels& labels,
                         double eps);
double adversarial_cmpm(const Tensor& pv, const Tensor& pt, const MatchLabels& labels,
                        double eps);

/// stage + lambda1 * node + lambda2 * attack.
ValueId total_adversarial_loss(Tape& tape, ValueId stage_term, ValueId node_term,
                               ValueId attack_term, const LossWeights& w);

}  // namespace xag
