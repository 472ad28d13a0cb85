#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "xag/data.hpp"
#include "xag/pipeline.hpp"

namespace xag {

enum class EvalVariant { Clean, Attacked };

std::string variant_name(EvalVariant v);

/// Rank-k retrieval accuracies over one query set.
struct CmcReport {
  double rank1 = 0.0;
  double rank5 = 0.0;
  double rank10 = 0.0;
  int num_queries = 0;
  std::string variant = "clean";
  std::string checkpoint_hash;
  int queries_without_match = 0;  // flagged and counted as misses
};

/// Retrieval embedding of one sample: graph-convolved node features
/// concatenated in semantic order (1 x N*D). The attacked variant implants
/// the bundle's learned attack node before convolution and strips it after.
/// Stage-III bundles convolve with the adversarially trained weights.
/// Baseline (stage-0) bundles embed with pooled stage/text features instead.
Tensor embed_image_for_retrieval(const SyntheticImageSample& sample,
                                 const CheckpointBundle& bundle, EvalVariant variant);
Tensor embed_text_for_retrieval(const SyntheticTextSample& sample,
                                const CheckpointBundle& bundle, EvalVariant variant);

struct EmbeddedItem {
  Tensor embedding;
  int identity = 0;
};

/// Ranks the gallery by descending cosine similarity per query; ties break
/// toward the lower gallery index. rank-k accuracy is the fraction of
/// queries whose top k contains a same-identity item.
CmcReport cmc(std::span<const EmbeddedItem> queries, std::span<const EmbeddedItem> gallery);

/// Full text-to-image retrieval over one split: every text is a query,
/// every image a gallery item.
CmcReport evaluate_retrieval(const DatasetFile& split, const CheckpointBundle& bundle,
                             EvalVariant variant);

void write_report(const std::filesystem::path& path, const CmcReport& report);

struct AblationRow {
  std::string name;
  CmcReport report;
};

struct AblationTable {
  std::vector<AblationRow> rows;
  bool pattern_ok = false;  // baseline < +SCFC, +ANL attacked < +SCFC, +AT >= all
};

/// The four-configuration comparison: baseline, +SCFC (stage I, clean),
/// +SCFC+ANL (stage II, attacked), +SCFC+ANL+AT (stage III, clean).
AblationTable ablation_report(const DatasetFile& test_split, const CheckpointBundle& baseline,
                              const CheckpointBundle& scfc, const CheckpointBundle& anl,
                              const CheckpointBundle& at);

void write_ablation(const std::filesystem::path& path, const AblationTable& table);
std::string format_ablation(const AblationTable& table);

}  // namespace xag
