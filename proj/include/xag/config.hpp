#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "xag/data.hpp"
#include "xag/digest.hpp"
#include "xag/losses.hpp"
#include "xag/pipeline.hpp"

namespace xag {

/// Flat key=value run configuration. Unknown keys are rejected. One seed
/// drives dataset generation and the per-stage training streams.
struct RunConfig {
  DiversityConfig data;
  int feat_dim = 16;
  int batch_size = 16;
  int stage1_iterations = 2000;
  int stage2_iterations = 300;
  int stage3_iterations = 2000;
  double stage1_lr = 1e-3;
  double stage2_lr = 1e-2;
  double stage3_lr = 1e-3;
  LossWeights weights;
  std::uint64_t seed = 1;
  std::filesystem::path output_dir = "runs/default";
};

RunConfig parse_run_config_text(std::string_view text);
RunConfig parse_run_config(const std::filesystem::path& path);

/// Canonical key=value listing; identical configs echo identical bytes.
std::string config_echo(const RunConfig& cfg);
Sha256 config_hash(const RunConfig& cfg);

StageConfig stage_config(const RunConfig& cfg, int stage);
ModelDims model_dims(const RunConfig& cfg);

}  // namespace xag
