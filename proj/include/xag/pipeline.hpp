#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "xag/data.hpp"
#include "xag/digest.hpp"
#include "xag/encoders.hpp"
#include "xag/graph.hpp"
#include "xag/losses.hpp"

namespace xag {

struct StageConfig {
  int stage = 1;  // 0 = pooled-feature baseline, 1..3 = pipeline stages
  int iterations = 2000;
  double lr = 1e-4;
  LossWeights weights;
  int batch_size = 16;
  std::uint64_t seed = 1;
};

struct ModelDims {
  int feat_dim = 16;  // D
  int gcn_layers = 2;
};

/// Everything a stage produces. A stage-II bundle differs from its stage-I
/// parent only in the attack nodes; gcn_attack appears at stage III.
struct CheckpointBundle {
  int stage = 0;
  Sha256 config_hash{};
  EncoderParams encoder;
  GcnParams gcn;
  GcnParams gcn_attack;
  AttackNode attack_image{Modality::Image, {}};
  AttackNode attack_text{Modality::Text, {}};
  std::string rng_state;
};

struct TrainHistory {
  struct Row {
    int iter = 0;
    // NaN marks a loss the stage does not compute.
    double eq4 = 0, eq6 = 0, eq14 = 0, eq17 = 0;
  };
  std::vector<Row> rows;

  /// Stage-II ascent bookkeeping: objective before/after each update on the
  /// step's own batch, and whether the update was kept.
  struct AscentStep {
    double before = 0, after = 0;
    bool accepted = false;
  };
  std::vector<AscentStep> ascent;
};

TrainHistory::Row history_row(int iter);
void write_history(const std::filesystem::path& path, const TrainHistory& history);

CheckpointBundle train_baseline(const StageConfig& cfg, const ModelDims& dims,
                                const DatasetFile& dataset, const Sha256& config_hash,
                                TrainHistory* history = nullptr);
CheckpointBundle train_stage1(const StageConfig& cfg, const ModelDims& dims,
                              const DatasetFile& dataset, const Sha256& config_hash,
                              TrainHistory* history = nullptr);
CheckpointBundle train_stage2(const StageConfig& cfg, const DatasetFile& dataset,
                              const CheckpointBundle& parent, TrainHistory* history = nullptr);
CheckpointBundle train_stage3(const StageConfig& cfg, const DatasetFile& dataset,
                              const CheckpointBundle& parent, TrainHistory* history = nullptr);

void save_checkpoint(const std::filesystem::path& path, const CheckpointBundle& bundle);
CheckpointBundle load_checkpoint(const std::filesystem::path& path);

/// Content hash of the serialized bundle; used as the report checkpoint id
/// and by freeze-contract checks.
std::string bundle_hash_hex(const CheckpointBundle& bundle);

}  // namespace xag
