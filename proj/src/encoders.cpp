#include "xag/encoders.hpp"

#include <cmath>

#include "xag/errors.hpp"

namespace xag {

namespace {

Tensor random_projection(int rows, int cols, Rng& rng) {
  double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Tensor t(rows, cols);
  for (double& v : t.values()) v = rng.uniform(-bound, bound);
  return t;
}

Tensor random_square(int dim, Rng& rng) {
  double bound = std::sqrt(6.0 / (2.0 * dim));
  Tensor t(dim, dim);
  for (double& v : t.values()) v = rng.uniform(-bound, bound);
  return t;
}

void check_sample_dims(const SyntheticImageSample& s, const Tensor& projection) {
  if (s.patches.empty()) throw ContractError("encode_image: sample has no patches");
  for (const Tensor& p : s.patches) {
    if (p.cols() != projection.rows()) {
      throw DimensionError("encode_image: patch " + p.shape_str() + " vs projection " +
                           projection.shape_str());
    }
  }
  if (s.stage.cols() != projection.rows()) {
    throw DimensionError("encode_image: stage " + s.stage.shape_str() + " vs projection " +
                         projection.shape_str());
  }
}

}  // namespace

EncoderParams init_encoder_params(int n_patches, int input_dim, int feat_dim, Rng& rng) {
  if (n_patches < 1) throw ContractError("encoder params: need at least one patch");
  EncoderParams p;
  p.image_projection = random_projection(input_dim, feat_dim, rng);
  p.stage_projection = random_projection(input_dim, feat_dim, rng);
  p.text_projection = random_projection(input_dim, feat_dim, rng);
  for (int l = 0; l < n_patches; ++l) {
    FtTransform t;
    for (int k = 0; k < 4; ++k) {
      t.weights[k] = random_square(feat_dim, rng);
      t.biases[k] = Tensor::zeros(1, feat_dim);
    }
    p.ft_bank.transforms.push_back(std::move(t));
  }
  return p;
}

EncoderBinding bind_encoder(Tape& tape, const EncoderParams& params, bool trainable,
                            std::vector<ValueId>* bound_order) {
  auto put = [&](const Tensor& t) {
    ValueId id = trainable ? tape.leaf(t) : tape.constant(t);
    if (bound_order) bound_order->push_back(id);
    return id;
  };
  EncoderBinding b;
  b.image_projection = put(params.image_projection);
  b.stage_projection = put(params.stage_projection);
  b.text_projection = put(params.text_projection);
  for (const FtTransform& t : params.ft_bank.transforms) {
    EncoderBinding::Ft f;
    for (int k = 0; k < 4; ++k) {
      f.w[k] = put(t.weights[k]);
      f.b[k] = put(t.biases[k]);
    }
    b.ft.push_back(f);
  }
  return b;
}

TapedImageFeatures encode_image(Tape& tape, const SyntheticImageSample& s,
                                const EncoderBinding& b) {
  check_sample_dims(s, tape.value(b.image_projection));
  TapedImageFeatures out;
  for (const Tensor& patch : s.patches) {
    ValueId projected = tape.matmul(tape.constant(patch), b.image_projection);
    out.node_features.push_back(tape.colmax(projected));
  }
  out.stage_feature = tape.matmul(tape.constant(s.stage), b.stage_projection);
  return out;
}

ImageFeatures encode_image(const SyntheticImageSample& s, const EncoderParams& p) {
  Tape tape;
  EncoderBinding b = bind_encoder(tape, p, false);
  TapedImageFeatures f = encode_image(tape, s, b);
  std::vector<Tensor> rows;
  rows.reserve(f.node_features.size());
  for (ValueId id : f.node_features) rows.push_back(tape.value(id));
  return ImageFeatures{concat_rows(rows), tape.value(f.stage_feature)};
}

ValueId encode_text(Tape& tape, const SyntheticTextSample& s, const EncoderBinding& b) {
  const Tensor& proj = tape.value(b.text_projection);
  if (s.tokens.cols() != proj.rows()) {
    throw DimensionError("encode_text: tokens " + s.tokens.shape_str() + " vs projection " +
                         proj.shape_str());
  }
  return tape.colmax(tape.matmul(tape.constant(s.tokens), b.text_projection));
}

Tensor encode_text(const SyntheticTextSample& s, const EncoderParams& p) {
  Tape tape;
  EncoderBinding b = bind_encoder(tape, p, false);
  return tape.value(encode_text(tape, s, b));
}

std::vector<ValueId> ft_transform(Tape& tape, ValueId global, const EncoderBinding& b) {
  if (b.ft.empty()) throw ContractError("ft_transform: empty bank");
  const Tensor& g = tape.value(global);
  if (g.rows() != 1) throw DimensionError("ft_transform: global must be 1 x D, got " +
                                          g.shape_str());
  std::vector<ValueId> rows;
  rows.reserve(b.ft.size());
  for (const EncoderBinding::Ft& f : b.ft) {
    if (tape.value(f.w[0]).rows() != g.cols()) {
      throw DimensionError("ft_transform: global " + g.shape_str() + " vs weight " +
                           tape.value(f.w[0]).shape_str());
    }
    ValueId h = global;
    for (int k = 0; k < 4; ++k) {
      h = tape.add(tape.matmul(h, f.w[k]), f.b[k]);
      if (k < 3) h = tape.relu(h);
    }
    rows.push_back(tape.add(h, global));
  }
  return rows;
}

Tensor ft_transform(const Tensor& global, const FtBank& bank) {
  Tape tape;
  EncoderParams p;
  // Only the bank participates; projection slots are placeholders.
  int d = global.cols();
  p.image_projection = Tensor::identity(d);
  p.stage_projection = Tensor::identity(d);
  p.text_projection = Tensor::identity(d);
  p.ft_bank = bank;
  EncoderBinding b = bind_encoder(tape, p, false);
  std::vector<ValueId> rows = ft_transform(tape, tape.constant(global), b);
  std::vector<Tensor> vals;
  vals.reserve(rows.size());
  for (ValueId id : rows) vals.push_back(tape.value(id));
  return concat_rows(vals);
}

}  // namespace xag
