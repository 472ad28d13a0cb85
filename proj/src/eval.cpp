#include "xag/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "xag/errors.hpp"
#include "xag/log.hpp"

namespace xag {

namespace {

const GcnParams& inference_gcn(const CheckpointBundle& bundle) {
  return bundle.stage == 3 ? bundle.gcn_attack : bundle.gcn;
}

Tensor convolved_global(const Tensor& node_features, const CheckpointBundle& bundle,
                        EvalVariant variant, Modality modality, int identity) {
  const int n = node_features.rows();
  Tensor adjacency = build_adjacency(n);
  if (variant == EvalVariant::Clean) {
    return concat_semantic_global(gcn_forward(node_features, adjacency, inference_gcn(bundle)));
  }
  const AttackNode& attack =
      modality == Modality::Image ? bundle.attack_image : bundle.attack_text;
  if (attack.vector.empty())
    throw StateError("attacked evaluation requires a checkpoint with learned attack nodes");
  FeatureGraph graph = make_feature_graph(node_features, adjacency, modality, identity);
  AugmentedGraph augmented = implant_attack_node(graph, attack);
  Tensor out = gcn_forward(augmented.nodes, augmented.adjacency, inference_gcn(bundle));
  return concat_semantic_global(strip_attack_node(out));
}

double cosine(const Tensor& a, const Tensor& b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a.values()[i] * b.values()[i];
    na += a.values()[i] * a.values()[i];
    nb += b.values()[i] * b.values()[i];
  }
  double denom = std::sqrt(na) * std::sqrt(nb);
  return denom > 0.0 ? dot / denom : 0.0;
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::string variant_name(EvalVariant v) {
  return v == EvalVariant::Clean ? "clean" : "attacked";
}

Tensor embed_image_for_retrieval(const SyntheticImageSample& sample,
                                 const CheckpointBundle& bundle, EvalVariant variant) {
  ImageFeatures features = encode_image(sample, bundle.encoder);
  if (bundle.stage == 0) {
    if (variant != EvalVariant::Clean)
      throw StateError("baseline bundles have no attack nodes to implant");
    return features.stage_feature;
  }
  return convolved_global(features.patch_features, bundle, variant, Modality::Image,
                          sample.identity);
}

Tensor embed_text_for_retrieval(const SyntheticTextSample& sample,
                                const CheckpointBundle& bundle, EvalVariant variant) {
  Tensor pooled = encode_text(sample, bundle.encoder);
  if (bundle.stage == 0) {
    if (variant != EvalVariant::Clean)
      throw StateError("baseline bundles have no attack nodes to implant");
    return pooled;
  }
  Tensor nodes = ft_transform(pooled, bundle.encoder.ft_bank);
  return convolved_global(nodes, bundle, variant, Modality::Text, sample.identity);
}

CmcReport cmc(std::span<const EmbeddedItem> queries, std::span<const EmbeddedItem> gallery) {
  if (gallery.empty()) throw ContractError("cmc: empty gallery");
  CmcReport report;
  report.num_queries = static_cast<int>(queries.size());

  int hits1 = 0, hits5 = 0, hits10 = 0;
  std::vector<int> order(gallery.size());
  std::vector<double> sims(gallery.size());
  for (const EmbeddedItem& q : queries) {
    bool has_match = false;
    for (const EmbeddedItem& g : gallery) has_match = has_match || g.identity == q.identity;
    if (!has_match) {
      ++report.queries_without_match;
      continue;  // counted as a miss at every rank
    }
    for (std::size_t g = 0; g < gallery.size(); ++g)
      sims[g] = cosine(q.embedding, gallery[g].embedding);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      if (sims[a] != sims[b]) return sims[a] > sims[b];
      return a < b;  // deterministic tie resolution by gallery index
    });
    int first_correct = -1;
    for (std::size_t r = 0; r < order.size(); ++r) {
      if (gallery[order[r]].identity == q.identity) {
        first_correct = static_cast<int>(r);
        break;
      }
    }
    if (first_correct < 1) ++hits1;
    if (first_correct < 5) ++hits5;
    if (first_correct < 10) ++hits10;
  }
  if (report.queries_without_match > 0) {
    log_info(std::to_string(report.queries_without_match) +
             " queries have no same-identity gallery item; counted as misses");
  }
  double n = static_cast<double>(report.num_queries);
  if (report.num_queries > 0) {
    report.rank1 = hits1 / n;
    report.rank5 = hits5 / n;
    report.rank10 = hits10 / n;
  }
  return report;
}

CmcReport evaluate_retrieval(const DatasetFile& split, const CheckpointBundle& bundle,
                             EvalVariant variant) {
  std::vector<EmbeddedItem> queries, gallery;
  queries.reserve(split.texts.size());
  gallery.reserve(split.images.size());
  for (const auto& text : split.texts)
    queries.push_back({embed_text_for_retrieval(text, bundle, variant), text.identity});
  for (const auto& image : split.images)
    gallery.push_back({embed_image_for_retrieval(image, bundle, variant), image.identity});
  CmcReport report = cmc(queries, gallery);
  report.variant = variant_name(variant);
  report.checkpoint_hash = bundle_hash_hex(bundle);
  return report;
}

void write_report(const std::filesystem::path& path, const CmcReport& report) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw StateError("cannot open " + path.string() + " for writing");
  os << "variant=" << report.variant << '\n'
     << "rank1=" << fmt_double(report.rank1) << '\n'
     << "rank5=" << fmt_double(report.rank5) << '\n'
     << "rank10=" << fmt_double(report.rank10) << '\n'
     << "num_queries=" << report.num_queries << '\n'
     << "checkpoint_hash=" << report.checkpoint_hash << '\n';
  if (!os) throw IntegrityError("short write to " + path.string());
}

AblationTable ablation_report(const DatasetFile& test_split, const CheckpointBundle& baseline,
                              const CheckpointBundle& scfc, const CheckpointBundle& anl,
                              const CheckpointBundle& at) {
  if (baseline.stage != 0 || scfc.stage != 1 || anl.stage != 2 || at.stage != 3)
    throw ConfigError("ablation_report: bundles must be stages 0, 1, 2, 3 in order");
  AblationTable table;
  table.rows.push_back(
      {"baseline", evaluate_retrieval(test_split, baseline, EvalVariant::Clean)});
  table.rows.push_back({"scfc", evaluate_retrieval(test_split, scfc, EvalVariant::Clean)});
  table.rows.push_back(
      {"scfc_anl", evaluate_retrieval(test_split, anl, EvalVariant::Attacked)});
  table.rows.push_back(
      {"scfc_anl_at", evaluate_retrieval(test_split, at, EvalVariant::Clean)});

  double r_base = table.rows[0].report.rank1;
  double r_scfc = table.rows[1].report.rank1;
  double r_anl = table.rows[2].report.rank1;
  double r_at = table.rows[3].report.rank1;
  table.pattern_ok = r_base < r_scfc && r_anl < r_scfc && r_at >= r_base && r_at >= r_anl &&
                     r_at >= r_scfc;
  return table;
}

std::string format_ablation(const AblationTable& table) {
  std::ostringstream os;
  os << "configuration      rank1      rank5      rank10     variant\n";
  for (const auto& row : table.rows) {
    char line[160];
    std::snprintf(line, sizeof(line), "%-18s %-10.4f %-10.4f %-10.4f %s\n", row.name.c_str(),
                  row.report.rank1, row.report.rank5, row.report.rank10,
                  row.report.variant.c_str());
    os << line;
  }
  os << "pattern_ok=" << (table.pattern_ok ? 1 : 0) << '\n';
  return os.str();
}

void write_ablation(const std::filesystem::path& path, const AblationTable& table) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw StateError("cannot open " + path.string() + " for writing");
  for (const auto& row : table.rows) {
    os << "row=" << row.name << " rank1=" << fmt_double(row.report.rank1)
       << " rank5=" << fmt_double(row.report.rank5)
       << " rank10=" << fmt_double(row.report.rank10) << " variant=" << row.report.variant
       << " checkpoint_hash=" << row.report.checkpoint_hash << '\n';
  }
  os << "pattern_ok=" << (table.pattern_ok ? 1 : 0) << '\n';
  if (!os) throw IntegrityError("short write to " + path.string());
}

}  // namespace xag
