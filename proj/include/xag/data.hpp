#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "xag/encoders.hpp"
#include "xag/losses.hpp"
#include "xag/rng.hpp"

namespace xag {

/// Semantic prototypes for one identity: one D_in-vector per body region,
/// pairwise distinct across identities.
struct IdentityPrototype {
  Tensor patch_prototypes;  // N x D_in
  int id = 0;
};

/// Controls how much within-identity variation ("diversity") the generator
/// injects into images and texts.
struct DiversityConfig {
  double image_noise = 0.3;  // sigma_v, pose/view perturbation scale
  double text_noise = 0.3;   // sigma_t, phrasing perturbation scale
  double text_mixing = 0.5;  // blend of neighboring patch semantics, in [0,1]
  int images_per_id = 4;
  int texts_per_id = 8;
  int num_ids = 32;
  std::uint64_t seed = 1;
  // observation dims
  int n_patches = 3;        // N
  int input_dim = 24;       // D_in
  int patch_subvectors = 4; // K
  int text_tokens = 8;      // M
};

enum class Split : std::uint8_t { Train = 0, Val = 1, Test = 2 };

std::string split_name(Split s);

struct DatasetFile {
  DiversityConfig config;
  Split split = Split::Train;
  std::vector<SyntheticImageSample> images;
  std::vector<SyntheticTextSample> texts;
};

struct DatasetTriplet {
  DatasetFile train;
  DatasetFile val;
  DatasetFile test;
};

/// Draws identity prototypes and emits identity-disjoint 70/15/15 splits.
/// Deterministic in cfg.seed.
DatasetTriplet generate(const DiversityConfig& cfg);

void write_dataset(std::ostream& os, const DatasetFile& ds);
DatasetFile read_dataset(std::istream& is);
void write_dataset_file(const std::filesystem::path& path, const DatasetFile& ds);
DatasetFile read_dataset_file(const std::filesystem::path& path);

/// n image-text pairs; each image is paired with a same-identity text, so
/// every label row has a positive.
struct Batch {
  std::vector<const SyntheticImageSample*> images;
  std::vector<const SyntheticTextSample*> texts;
  MatchLabels labels;
};

Batch sample_batch(const DatasetFile& ds, int n, Rng& rng);

}  // namespace xag
