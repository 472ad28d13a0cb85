#pragma once

#include <array>
#include <vector>

#include "xag/autodiff.hpp"
#include "xag/rng.hpp"
#include "xag/tensor.hpp"

namespace xag {

/// Raw observations for one image: N patch blocks of K sub-vectors each,
/// plus one coarse stage observation.
struct SyntheticImageSample {
  std::vector<Tensor> patches;  // N tensors, K x D_in
  Tensor stage;                 // 1 x D_in
  int identity = 0;
};

struct SyntheticTextSample {
  Tensor tokens;  // M x D_in
  int identity = 0;
};

/// One feature transform: a 4-layer fully connected residual block D -> D
/// with ReLU between layers and an input-to-output skip.
struct FtTransform {
  std::array<Tensor, 4> weights;  // D x D
  std::array<Tensor, 4> biases;   // 1 x D
};

/// N structurally identical transforms with independent parameters; row l of
/// the output is the text node feature for body region l.
struct FtBank {
  std::vector<FtTransform> transforms;
};

struct EncoderParams {
  Tensor image_projection;  // D_in x D
  Tensor stage_projection;  // D_in x D
  Tensor text_projection;   // D_in x D
  FtBank ft_bank;
};

EncoderParams init_encoder_params(int n_patches, int input_dim, int feat_dim, Rng& rng);

/// Tape-bound parameter handles. Binding order is fixed and mirrored by
/// for_each_encoder_param.
struct EncoderBinding {
  ValueId image_projection = -1;
  ValueId stage_projection = -1;
  ValueId text_projection = -1;
  struct Ft {
    std::array<ValueId, 4> w{};
    std::array<ValueId, 4> b{};
  };
  std::vector<Ft> ft;
};

/// Binds every encoder tensor onto the tape (leaf when trainable, constant
/// otherwise). When `bound_order` is given, ids are appended in enumeration
/// order.
EncoderBinding bind_encoder(Tape& tape, const EncoderParams& params, bool trainable,
                            std::vector<ValueId>* bound_order = nullptr);

/// Visits encoder tensors in the same fixed order as bind_encoder.
template <typename Params, typename Fn>
void for_each_encoder_param(Params& p, Fn&& fn) {
  fn("encoder.image_projection", p.image_projection);
  fn("encoder.stage_projection", p.stage_projection);
  fn("encoder.text_projection", p.text_projection);
  for (std::size_t l = 0; l < p.ft_bank.transforms.size(); ++l) {
    auto& t = p.ft_bank.transforms[l];
    for (int k = 0; k < 4; ++k) {
      fn("encoder.ft." + std::to_string(l) + ".w" + std::to_string(k), t.weights[k]);
      fn("encoder.ft." + std::to_string(l) + ".b" + std::to_string(k), t.biases[k]);
    }
  }
}

struct ImageFeatures {
  Tensor patch_features;  // N x D
  Tensor stage_feature;   // 1 x D
};

struct TapedImageFeatures {
  std::vector<ValueId> node_features;  // N ids, each 1 x D
  ValueId stage_feature = -1;
};

/// Projects each patch block and max-pools its K sub-vectors into one node
/// feature; the stage observation is projected directly.
ImageFeatures encode_image(const SyntheticImageSample& s, const EncoderParams& p);
TapedImageFeatures encode_image(Tape& tape, const SyntheticImageSample& s,
                                const EncoderBinding& b);

/// Projects the token matrix and max-pools over tokens: the pooled text
/// feature t_p.
Tensor encode_text(const SyntheticTextSample& s, const EncoderParams& p);
ValueId encode_text(Tape& tape, const SyntheticTextSample& s, const EncoderBinding& b);

/// Applies every transform of the bank to the pooled text feature; row l of
/// the result is FT_l(global) + global.
Tensor ft_transform(const Tensor& global, const FtBank& bank);
std::vector<ValueId> ft_transform(Tape& tape, ValueId global, const EncoderBinding& b);

}  // namespace xag
