#include "xag/pipeline.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "xag/autodiff.hpp"
#include "xag/errors.hpp"
#include "xag/io.hpp"
#include "xag/log.hpp"
#include "xag/optim.hpp"

namespace xag {

namespace {

constexpr char kCheckpointMagic[4] = {'X', 'A', 'G', 'C'};
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kAscentTolerance = 1e-6;

std::vector<Tensor*> encoder_tensors(EncoderParams& p) {
  std::vector<Tensor*> out;
  for_each_encoder_param(p, [&](const std::string&, Tensor& t) { out.push_back(&t); });
  return out;
}

std::vector<AdamState> make_states(const std::vector<Tensor*>& params, double lr) {
  std::vector<AdamState> states;
  states.reserve(params.size());
  for (Tensor* p : params) states.push_back(AdamState::for_param(*p, lr));
  return states;
}

void apply_steps(const std::vector<Tensor*>& params, const std::vector<ValueId>& ids,
                 std::vector<AdamState>& states, const Tape& tape) {
  for (std::size_t k = 0; k < params.size(); ++k)
    adam_step(*params[k], tape.grad(ids[k]), states[k]);
}

// Per-sample taped features for one batch, pre graph convolution.
struct EncodedBatch {
  std::vector<ValueId> image_node_mats;            // n ids, N x D
  std::vector<std::vector<ValueId>> image_nodes;   // [node l][sample], 1 x D
  std::vector<ValueId> stage_features;             // n ids, 1 x D
  std::vector<ValueId> text_node_mats;             // n ids, N x D
  std::vector<std::vector<ValueId>> text_nodes;    // [node l][sample], 1 x D
  std::vector<ValueId> text_pooled;                // n ids, 1 x D
};

EncodedBatch encode_batch(Tape& tape, const Batch& batch, const EncoderBinding& binding,
                          int n_patches) {
  EncodedBatch out;
  out.image_nodes.resize(n_patches);
  out.text_nodes.resize(n_patches);
  for (std::size_t i = 0; i < batch.images.size(); ++i) {
    TapedImageFeatures img = encode_image(tape, *batch.images[i], binding);
    if (static_cast<int>(img.node_features.size()) != n_patches)
      throw ConfigError("batch sample has wrong patch count for this model");
    out.image_node_mats.push_back(tape.concat_rows(img.node_features));
    for (int l = 0; l < n_patches; ++l) out.image_nodes[l].push_back(img.node_features[l]);
    out.stage_features.push_back(img.stage_feature);

    ValueId tp = encode_text(tape, *batch.texts[i], binding);
    std::vector<ValueId> fts = ft_transform(tape, tp, binding);
    out.text_node_mats.push_back(tape.concat_rows(fts));
    for (int l = 0; l < n_patches; ++l) out.text_nodes[l].push_back(fts[l]);
    out.text_pooled.push_back(tp);
  }
  return out;
}

std::vector<ValueId> stack_per_node(Tape& tape,
                                    const std::vector<std::vector<ValueId>>& per_node) {
  std::vector<ValueId> out;
  out.reserve(per_node.size());
  for (const auto& rows : per_node) out.push_back(tape.concat_rows(rows));
  return out;
}

// Implants the attack vector, convolves, strips it, and flattens into one
// 1 x (N*D) row per sample.
ValueId attacked_global_row(Tape& tape, ValueId node_mat, ValueId attack_vec, ValueId aug_adj,
                            std::span<const ValueId> weights) {
  std::vector<ValueId> parts{node_mat, attack_vec};
  ValueId convolved = gcn_forward(tape, tape.concat_rows(parts), aug_adj, weights);
  return concat_semantic_global(tape, strip_attack_node(tape, convolved));
}

// Same, but keeps the stripped node rows separate for per-node losses.
std::vector<ValueId> attacked_node_rows(Tape& tape, ValueId node_mat, ValueId attack_vec,
                                        ValueId aug_adj, std::span<const ValueId> weights,
                                        int n_patches) {
  std::vector<ValueId> parts{node_mat, attack_vec};
  ValueId convolved = gcn_forward(tape, tape.concat_rows(parts), aug_adj, weights);
  ValueId stripped = strip_attack_node(tape, convolved);
  std::vector<ValueId> rows;
  rows.reserve(n_patches);
  for (int l = 0; l < n_patches; ++l) rows.push_back(tape.slice_rows(stripped, l, l + 1));
  return rows;
}

void check_dataset(const DatasetFile& dataset) {
  if (dataset.images.empty() || dataset.texts.empty())
    throw ConfigError("training requires a dataset with both modalities");
}

int bundle_feat_dim(const CheckpointBundle& b) { return b.encoder.image_projection.cols(); }
int bundle_patches(const CheckpointBundle& b) {
  return static_cast<int>(b.encoder.ft_bank.transforms.size());
}

Tensor string_to_tensor(const std::string& s) {
  if (s.empty()) throw ContractError("cannot encode empty string");
  Tensor t(1, static_cast<int>(s.size()));
  for (std::size_t i = 0; i < s.size(); ++i)
    t.values()[i] = static_cast<double>(static_cast<unsigned char>(s[i]));
  return t;
}

std::string tensor_to_string(const Tensor& t) {
  std::string s;
  s.reserve(t.size());
  for (double v : t.values()) {
    if (v < 0.0 || v > 255.0 || v != std::floor(v))
      throw IntegrityError("string block holds non-byte values");
    s.push_back(static_cast<char>(static_cast<unsigned char>(v)));
  }
  return s;
}

using NamedBlocks = std::vector<std::pair<std::string, Tensor>>;

NamedBlocks bundle_blocks(const CheckpointBundle& bundle) {
  NamedBlocks blocks;
  for_each_encoder_param(bundle.encoder, [&](const std::string& name, const Tensor& t) {
    blocks.emplace_back(name, t);
  });
  for (std::size_t i = 0; i < bundle.gcn.layer_weights.size(); ++i)
    blocks.emplace_back("gcn.w" + std::to_string(i), bundle.gcn.layer_weights[i]);
  for (std::size_t i = 0; i < bundle.gcn_attack.layer_weights.size(); ++i)
    blocks.emplace_back("gcn_attack.w" + std::to_string(i),
                        bundle.gcn_attack.layer_weights[i]);
  if (!bundle.attack_image.vector.empty())
    blocks.emplace_back("attack.image", bundle.attack_image.vector);
  if (!bundle.attack_text.vector.empty())
    blocks.emplace_back("attack.text", bundle.attack_text.vector);
  blocks.emplace_back("rng_state", string_to_tensor(bundle.rng_state));
  return blocks;
}

void write_checkpoint_stream(std::ostream& os, const CheckpointBundle& bundle) {
  write_bytes(os, kCheckpointMagic, 4);
  write_u8(os, static_cast<std::uint8_t>(bundle.stage));
  write_bytes(os, bundle.config_hash.data(), bundle.config_hash.size());
  NamedBlocks blocks = bundle_blocks(bundle);
  write_u32(os, static_cast<std::uint32_t>(blocks.size()));
  for (const auto& [name, tensor] : blocks) {
    write_string(os, name);
    write_tensor(os, tensor);
  }
}

}  // namespace

TrainHistory::Row history_row(int iter) { return {iter, kNaN, kNaN, kNaN, kNaN}; }

void write_history(const std::filesystem::path& path, const TrainHistory& history) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw StateError("cannot open " + path.string() + " for writing");
  os << "iter,loss_eq4,loss_eq6,loss_eq14,loss_eq17\n";
  char buf[64];
  auto field = [&](double v) -> std::string {
    if (std::isnan(v)) return "";
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
  };
  for (const auto& row : history.rows) {
    os << row.iter << ',' << field(row.eq4) << ',' << field(row.eq6) << ','
       << field(row.eq14) << ',' << field(row.eq17) << '\n';
  }
  if (!os) throw IntegrityError("short write to " + path.string());
}

CheckpointBundle train_baseline(const StageConfig& cfg, const ModelDims& dims,
                                const DatasetFile& dataset, const Sha256& config_hash,
                                TrainHistory* history) {
  if (cfg.iterations < 1) throw ConfigError("baseline: iterations must be >= 1");
  check_dataset(dataset);
  Rng rng(mix_seed(cfg.seed, 0));
  CheckpointBundle bundle;
  bundle.stage = 0;
  bundle.config_hash = config_hash;
  bundle.encoder = init_encoder_params(dataset.config.n_patches, dataset.config.input_dim,
                                       dims.feat_dim, rng);
  bundle.gcn = init_gcn_params(dims.gcn_layers, dims.feat_dim, rng);

  std::vector<Tensor*> params = encoder_tensors(bundle.encoder);
  std::vector<AdamState> states = make_states(params, cfg.lr);

  for (int iter = 1; iter <= cfg.iterations; ++iter) {
    Batch batch = sample_batch(dataset, cfg.batch_size, rng);
    Tape tape;
    std::vector<ValueId> order;
    EncoderBinding binding = bind_encoder(tape, bundle.encoder, true, &order);
    EncodedBatch enc = encode_batch(tape, batch, binding, dataset.config.n_patches);
    ValueId fs = tape.concat_rows(enc.stage_features);
    ValueId tp = tape.concat_rows(enc.text_pooled);
    ValueId loss = cmpm_global(tape, fs, tp, batch.labels, cfg.weights.epsilon);
    double value = tape.scalar(loss);
    tape.backward(loss);
    apply_steps(params, order, states, tape);
    if (history) {
      auto row = history_row(iter);
      row.eq6 = value;
      history->rows.push_back(row);
    }
    if (iter % 500 == 0)
      log_debug("baseline iter " + std::to_string(iter) + " loss " + std::to_string(value));
  }
  bundle.rng_state = rng.save_state();
  return bundle;
}

CheckpointBundle train_stage1(const StageConfig& cfg, const ModelDims& dims,
                              const DatasetFile& dataset, const Sha256& config_hash,
                              TrainHistory* history) {
  if (cfg.iterations < 1) throw ConfigError("stage I: iterations must be >= 1");
  check_dataset(dataset);
  const int n_patches = dataset.config.n_patches;
  Rng rng(mix_seed(cfg.seed, 1));

  CheckpointBundle bundle;
  bundle.stage = 1;
  bundle.config_hash = config_hash;
  bundle.encoder =
      init_encoder_params(n_patches, dataset.config.input_dim, dims.feat_dim, rng);
  bundle.gcn = init_gcn_params(dims.gcn_layers, dims.feat_dim, rng);

  std::vector<Tensor*> enc_params = encoder_tensors(bundle.encoder);
  std::vector<AdamState> enc_states = make_states(enc_params, cfg.lr);
  std::vector<Tensor*> gcn_params;
  for (Tensor& w : bundle.gcn.layer_weights) gcn_params.push_back(&w);
  std::vector<AdamState> gcn_states = make_states(gcn_params, cfg.lr);

  const Tensor adjacency = build_adjacency(n_patches);

  for (int iter = 1; iter <= cfg.iterations; ++iter) {
    Batch batch = sample_batch(dataset, cfg.batch_size, rng);
    double node_loss_value = 0.0;
    {
      // Node-level alignment of patch features and transformed text features.
      Tape tape;
      std::vector<ValueId> order;
      EncoderBinding binding = bind_encoder(tape, bundle.encoder, true, &order);
      EncodedBatch enc = encode_batch(tape, batch, binding, n_patches);
      ValueId loss = cmpm_node(tape, stack_per_node(tape, enc.image_nodes),
                               stack_per_node(tape, enc.text_nodes), batch.labels,
                               cfg.weights.epsilon);
      node_loss_value = tape.scalar(loss);
      tape.backward(loss);
      apply_steps(enc_params, order, enc_states, tape);
    }
    double global_loss_value = 0.0;
    {
      // Discrimination of the convolved, concatenated global features.
      Tape tape;
      std::vector<ValueId> order;
      EncoderBinding binding = bind_encoder(tape, bundle.encoder, true, &order);
      std::vector<ValueId> w_ids;
      for (Tensor& w : bundle.gcn.layer_weights) w_ids.push_back(tape.leaf(w));
      ValueId adj = tape.constant(adjacency);
      EncodedBatch enc = encode_batch(tape, batch, binding, n_patches);
      std::vector<ValueId> fg_v_rows, fg_t_rows;
      for (std::size_t i = 0; i < batch.images.size(); ++i) {
        fg_v_rows.push_back(concat_semantic_global(
            tape, gcn_forward(tape, enc.image_node_mats[i], adj, w_ids)));
        fg_t_rows.push_back(concat_semantic_global(
            tape, gcn_forward(tape, enc.text_node_mats[i], adj, w_ids)));
      }
      ValueId fg_v = tape.concat_rows(fg_v_rows);
      ValueId fg_t = tape.concat_rows(fg_t_rows);
      ValueId loss = cmpm_global(tape, fg_v, fg_t, batch.labels, cfg.weights.epsilon);
      global_loss_value = tape.scalar(loss);
      tape.backward(loss);
      apply_steps(enc_params, order, enc_states, tape);
      for (std::size_t k = 0; k < gcn_params.size(); ++k)
        adam_step(*gcn_params[k], tape.grad(w_ids[k]), gcn_states[k]);
    }
    if (history) {
      auto row = history_row(iter);
      row.eq4 = node_loss_value;
      row.eq6 = global_loss_value;
      history->rows.push_back(row);
    }
    if (iter % 500 == 0)
      log_debug("stage I iter " + std::to_string(iter) + " node " +
                std::to_string(node_loss_value) + " global " +
                std::to_string(global_loss_value));
  }
  bundle.rng_state = rng.save_state();
  return bundle;
}

CheckpointBundle train_stage2(const StageConfig& cfg, const DatasetFile& dataset,
                              const CheckpointBundle& parent, TrainHistory* history) {
  if (parent.stage != 1) throw StateError("stage II requires a stage-I parent checkpoint");
  if (cfg.iterations < 1) throw ConfigError("stage II: iterations must be >= 1");
  check_dataset(dataset);
  const int n_patches = bundle_patches(parent);
  const int feat_dim = bundle_feat_dim(parent);
  if (n_patches != dataset.config.n_patches)
    throw ConfigError("stage II: dataset patch count does not match the checkpoint");

  Rng rng(mix_seed(cfg.seed, 2));
  CheckpointBundle bundle = parent;
  bundle.stage = 2;
  bundle.attack_image = {Modality::Image, Tensor(1, feat_dim)};
  bundle.attack_text = {Modality::Text, Tensor(1, feat_dim)};
  for (double& v : bundle.attack_image.vector.values()) v = 0.1 * rng.gaussian();
  for (double& v : bundle.attack_text.vector.values()) v = 0.1 * rng.gaussian();

  AdamState opt_v = AdamState::for_param(bundle.attack_image.vector, cfg.lr);
  AdamState opt_t = AdamState::for_param(bundle.attack_text.vector, cfg.lr);

  const Tensor aug_adj = augment_adjacency(build_adjacency(n_patches));

  // Model weights are frozen; only the two attack vectors move.
  auto objective = [&](const Batch& batch, bool with_grad, Tensor* grad_v, Tensor* grad_t) {
    Tape tape;
    EncoderBinding binding = bind_encoder(tape, parent.encoder, false);
    std::vector<ValueId> w_ids;
    for (const Tensor& w : parent.gcn.layer_weights) w_ids.push_back(tape.constant(w));
    ValueId adj = tape.constant(aug_adj);
    ValueId xv = with_grad ? tape.leaf(bundle.attack_image.vector)
                           : tape.constant(bundle.attack_image.vector);
    ValueId xt = with_grad ? tape.leaf(bundle.attack_text.vector)
                           : tape.constant(bundle.attack_text.vector);
    EncodedBatch enc = encode_batch(tape, batch, binding, n_patches);
    std::vector<std::vector<ValueId>> v_rows(n_patches), t_rows(n_patches);
    for (std::size_t i = 0; i < batch.images.size(); ++i) {
      auto vi = attacked_node_rows(tape, enc.image_node_mats[i], xv, adj, w_ids, n_patches);
      auto ti = attacked_node_rows(tape, enc.text_node_mats[i], xt, adj, w_ids, n_patches);
      for (int l = 0; l < n_patches; ++l) {
        v_rows[l].push_back(vi[l]);
        t_rows[l].push_back(ti[l]);
      }
    }
    ValueId obj = attack_objective(tape, stack_per_node(tape, v_rows),
                                   stack_per_node(tape, t_rows), batch.labels,
                                   cfg.weights.epsilon);
    double value = tape.scalar(obj);
    if (with_grad) {
      tape.backward(obj);
      *grad_v = tape.grad(xv);
      *grad_t = tape.grad(xt);
    }
    return value;
  };

  for (int iter = 1; iter <= cfg.iterations; ++iter) {
    Batch batch = sample_batch(dataset, cfg.batch_size, rng);
    Tensor grad_v, grad_t;
    double before = objective(batch, true, &grad_v, &grad_t);

    Tensor saved_v = bundle.attack_image.vector;
    Tensor saved_t = bundle.attack_text.vector;
    AdamState saved_opt_v = opt_v;
    AdamState saved_opt_t = opt_t;
    adam_step(bundle.attack_image.vector, grad_v, opt_v, /*ascend=*/true);
    adam_step(bundle.attack_text.vector, grad_t, opt_t, /*ascend=*/true);

    double after = objective(batch, false, nullptr, nullptr);
    bool accepted = after >= before - kAscentTolerance;
    if (!accepted) {
      bundle.attack_image.vector = std::move(saved_v);
      bundle.attack_text.vector = std::move(saved_t);
      opt_v = std::move(saved_opt_v);
      opt_t = std::move(saved_opt_t);
    }
    if (history) {
      auto row = history_row(iter);
      row.eq14 = accepted ? after : before;
      history->rows.push_back(row);
      history->ascent.push_back({before, after, accepted});
    }
    if (iter % 100 == 0)
      log_debug("stage II iter " + std::to_string(iter) + " objective " +
                std::to_string(accepted ? after : before));
  }
  bundle.rng_state = rng.save_state();
  return bundle;
}

CheckpointBundle train_stage3(const StageConfig& cfg, const DatasetFile& dataset,
                              const CheckpointBundle& parent, TrainHistory* history) {
  if (parent.stage != 2) throw StateError("stage III requires a stage-II parent checkpoint");
  if (cfg.iterations < 1) throw ConfigError("stage III: iterations must be >= 1");
  if (parent.attack_image.vector.empty() || parent.attack_text.vector.empty())
    throw StateError("stage III parent is missing learned attack nodes");
  check_dataset(dataset);
  const int n_patches = bundle_patches(parent);
  if (n_patches != dataset.config.n_patches)
    throw ConfigError("stage III: dataset patch count does not match the checkpoint");

  Rng rng(mix_seed(cfg.seed, 3));
  CheckpointBundle bundle = parent;
  bundle.stage = 3;
  bundle.gcn_attack = parent.gcn;  // trainable clone; parent.gcn stays frozen

  std::vector<Tensor*> enc_params = encoder_tensors(bundle.encoder);
  std::vector<AdamState> enc_states = make_states(enc_params, cfg.lr);
  std::vector<Tensor*> wa_params;
  for (Tensor& w : bundle.gcn_attack.layer_weights) wa_params.push_back(&w);
  std::vector<AdamState> wa_states = make_states(wa_params, cfg.lr);

  const Tensor aug_adj = augment_adjacency(build_adjacency(n_patches));

  for (int iter = 1; iter <= cfg.iterations; ++iter) {
    Batch batch = sample_batch(dataset, cfg.batch_size, rng);
    Tape tape;
    std::vector<ValueId> order;
    EncoderBinding binding = bind_encoder(tape, bundle.encoder, true, &order);
    std::vector<ValueId> wa_ids;
    for (Tensor& w : bundle.gcn_attack.layer_weights) wa_ids.push_back(tape.leaf(w));
    ValueId adj = tape.constant(aug_adj);
    ValueId xv = tape.constant(bundle.attack_image.vector);
    ValueId xt = tape.constant(bundle.attack_text.vector);

    EncodedBatch enc = encode_batch(tape, batch, binding, n_patches);

    ValueId stage_term = cmpm_global(tape, tape.concat_rows(enc.stage_features),
                                     tape.concat_rows(enc.text_pooled), batch.labels,
                                     cfg.weights.epsilon);
    ValueId node_term = cmpm_node(tape, stack_per_node(tape, enc.image_nodes),
                                  stack_per_node(tape, enc.text_nodes), batch.labels,
                                  cfg.weights.epsilon);
    std::vector<ValueId> pv_rows, pt_rows;
    for (std::size_t i = 0; i < batch.images.size(); ++i) {
      pv_rows.push_back(attacked_global_row(tape, enc.image_node_mats[i], xv, adj, wa_ids));
      pt_rows.push_back(attacked_global_row(tape, enc.text_node_mats[i], xt, adj, wa_ids));
    }
    ValueId attack_term = adversarial_cmpm(tape, tape.concat_rows(pv_rows),
                                           tape.concat_rows(pt_rows), batch.labels,
                                           cfg.weights.epsilon);
    ValueId loss = total_adversarial_loss(tape, stage_term, node_term, attack_term,
                                          cfg.weights);
    double value = tape.scalar(loss);
    tape.backward(loss);
    apply_steps(enc_params, order, enc_states, tape);
    for (std::size_t k = 0; k < wa_params.size(); ++k)
      adam_step(*wa_params[k], tape.grad(wa_ids[k]), wa_states[k]);

    if (history) {
      auto row = history_row(iter);
      row.eq17 = value;
      history->rows.push_back(row);
    }
    if (iter % 500 == 0)
      log_debug("stage III iter " + std::to_string(iter) + " loss " + std::to_string(value));
  }
  bundle.rng_state = rng.save_state();
  return bundle;
}

void save_checkpoint(const std::filesystem::path& path, const CheckpointBundle& bundle) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw StateError("cannot open " + path.string() + " for writing");
  write_checkpoint_stream(os, bundle);
  if (!os) throw IntegrityError("short write to " + path.string());
}

CheckpointBundle load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw StateError("cannot open checkpoint " + path.string());

  char magic[4];
  read_bytes(is, magic, 4);
  if (std::memcmp(magic, kCheckpointMagic, 4) != 0)
    throw IntegrityError("bad checkpoint magic bytes");
  CheckpointBundle bundle;
  std::uint8_t stage = read_u8(is);
  if (stage > 3) throw IntegrityError("bad checkpoint stage tag");
  bundle.stage = stage;
  read_bytes(is, bundle.config_hash.data(), bundle.config_hash.size());

  std::map<std::string, Tensor> blocks;
  std::uint32_t count = read_u32(is);
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name = read_string(is);
    Tensor t = read_tensor(is);
    if (!blocks.emplace(std::move(name), std::move(t)).second)
      throw IntegrityError("duplicate checkpoint block");
  }
  auto take = [&](const std::string& name) {
    auto it = blocks.find(name);
    if (it == blocks.end()) throw IntegrityError("checkpoint missing block '" + name + "'");
    Tensor t = std::move(it->second);
    blocks.erase(it);
    return t;
  };
  auto maybe_take = [&](const std::string& name, Tensor& dst) {
    auto it = blocks.find(name);
    if (it == blocks.end()) return false;
    dst = std::move(it->second);
    blocks.erase(it);
    return true;
  };

  bundle.encoder.image_projection = take("encoder.image_projection");
  bundle.encoder.stage_projection = take("encoder.stage_projection");
  bundle.encoder.text_projection = take("encoder.text_projection");
  for (int l = 0;; ++l) {
    std::string head = "encoder.ft." + std::to_string(l) + ".";
    if (!blocks.count(head + "w0")) break;
    FtTransform t;
    for (int k = 0; k < 4; ++k) {
      t.weights[k] = take(head + "w" + std::to_string(k));
      t.biases[k] = take(head + "b" + std::to_string(k));
    }
    bundle.encoder.ft_bank.transforms.push_back(std::move(t));
  }
  if (bundle.encoder.ft_bank.transforms.empty())
    throw IntegrityError("checkpoint has no feature transforms");
  for (int i = 0;; ++i) {
    Tensor w;
    if (!maybe_take("gcn.w" + std::to_string(i), w)) break;
    bundle.gcn.layer_weights.push_back(std::move(w));
  }
  if (bundle.gcn.layer_weights.empty())
    throw IntegrityError("checkpoint has no graph-convolution weights");
  for (int i = 0;; ++i) {
    Tensor w;
    if (!maybe_take("gcn_attack.w" + std::to_string(i), w)) break;
    bundle.gcn_attack.layer_weights.push_back(std::move(w));
  }
  maybe_take("attack.image", bundle.attack_image.vector);
  maybe_take("attack.text", bundle.attack_text.vector);
  bundle.rng_state = tensor_to_string(take("rng_state"));
  if (!blocks.empty())
    throw IntegrityError("checkpoint has unexpected block '" + blocks.begin()->first + "'");

  if (bundle.stage >= 2 &&
      (bundle.attack_image.vector.empty() || bundle.attack_text.vector.empty()))
    throw IntegrityError("stage tag promises attack nodes the file does not hold");
  if (bundle.stage == 3 && bundle.gcn_attack.layer_weights.empty())
    throw IntegrityError("stage tag promises adversarial weights the file does not hold");
  if (bundle.stage < 3 && !bundle.gcn_attack.layer_weights.empty())
    throw IntegrityError("unexpected adversarial weights for this stage tag");
  return bundle;
}

std::string bundle_hash_hex(const CheckpointBundle& bundle) {
  std::ostringstream os(std::ios::binary);
  write_checkpoint_stream(os, bundle);
  std::string bytes = os.str();
  return to_hex(sha256(bytes.data(), bytes.size()));
}

}  // namespace xag
