#include "xag/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "xag/errors.hpp"
#include "xag/graph.hpp"
#include "xag/io.hpp"
#include "xag/log.hpp"

namespace xag {

namespace {

constexpr char kDatasetMagic[4] = {'X', 'A', 'G', 'D'};
constexpr std::uint16_t kDatasetVersion = 1;

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string config_block(const DiversityConfig& c) {
  std::ostringstream os;
  os << "image_noise=" << fmt_double(c.image_noise) << '\n'
     << "text_noise=" << fmt_double(c.text_noise) << '\n'
     << "text_mixing=" << fmt_double(c.text_mixing) << '\n'
     << "images_per_id=" << c.images_per_id << '\n'
     << "texts_per_id=" << c.texts_per_id << '\n'
     << "num_ids=" << c.num_ids << '\n'
     << "seed=" << c.seed << '\n'
     << "n_patches=" << c.n_patches << '\n'
     << "input_dim=" << c.input_dim << '\n'
     << "patch_subvectors=" << c.patch_subvectors << '\n'
     << "text_tokens=" << c.text_tokens << '\n';
  return os.str();
}

DiversityConfig parse_config_block(const std::string& block) {
  DiversityConfig c;
  std::istringstream is(block);
  std::string line;
  while (std::getline(is, line)) {
    auto eq = line.find('=');
    if (eq == std::string::npos) throw IntegrityError("dataset config line lacks '='");
    std::string key = line.substr(0, eq);
    std::string val = line.substr(eq + 1);
    if (key == "image_noise") c.image_noise = std::stod(val);
    else if (key == "text_noise") c.text_noise = std::stod(val);
    else if (key == "text_mixing") c.text_mixing = std::stod(val);
    else if (key == "images_per_id") c.images_per_id = std::stoi(val);
    else if (key == "texts_per_id") c.texts_per_id = std::stoi(val);
    else if (key == "num_ids") c.num_ids = std::stoi(val);
    else if (key == "seed") c.seed = std::stoull(val);
    else if (key == "n_patches") c.n_patches = std::stoi(val);
    else if (key == "input_dim") c.input_dim = std::stoi(val);
    else if (key == "patch_subvectors") c.patch_subvectors = std::stoi(val);
    else if (key == "text_tokens") c.text_tokens = std::stoi(val);
    else throw IntegrityError("dataset config has unknown key '" + key + "'");
  }
  return c;
}

void validate_config(const DiversityConfig& c) {
  if (c.num_ids < 4) throw ConfigError("dataset: num_ids must be >= 4");
  if (c.images_per_id < 1 || c.texts_per_id < 1)
    throw ConfigError("dataset: per-identity sample counts must be >= 1");
  if (c.image_noise < 0.0 || c.text_noise < 0.0)
    throw ConfigError("dataset: noise scales must be >= 0");
  if (c.text_mixing < 0.0 || c.text_mixing > 1.0)
    throw ConfigError("dataset: text_mixing must lie in [0, 1]");
  if (c.n_patches < 1 || c.input_dim < 1 || c.patch_subvectors < 1 || c.text_tokens < 1)
    throw ConfigError("dataset: dims must be >= 1");
}

double pairwise_distance(const Tensor& a, const Tensor& b) {
  double sq = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double d = a.values()[i] - b.values()[i];
    sq += d * d;
  }
  return std::sqrt(sq);
}

std::vector<IdentityPrototype> draw_prototypes(const DiversityConfig& cfg, Rng& rng) {
  std::vector<IdentityPrototype> protos;
  protos.reserve(cfg.num_ids);
  for (int id = 0; id < cfg.num_ids; ++id) {
    for (;;) {
      Tensor p(cfg.n_patches, cfg.input_dim);
      for (double& v : p.values()) v = rng.gaussian();
      bool distinct = true;
      for (const auto& other : protos) {
        if (pairwise_distance(p, other.patch_prototypes) < 0.5) {
          distinct = false;
          break;
        }
      }
      if (distinct) {
        protos.push_back({std::move(p), id});
        break;
      }
    }
  }
  return protos;
}

SyntheticImageSample make_image_sample(const IdentityPrototype& proto,
                                       const DiversityConfig& cfg, Rng& rng) {
  SyntheticImageSample s;
  s.identity = proto.id;
  for (int l = 0; l < cfg.n_patches; ++l) {
    Tensor patch(cfg.patch_subvectors, cfg.input_dim);
    for (int k = 0; k < cfg.patch_subvectors; ++k)
      for (int d = 0; d < cfg.input_dim; ++d)
        patch.at(k, d) = proto.patch_prototypes.at(l, d) + cfg.image_noise * rng.gaussian();
    s.patches.push_back(std::move(patch));
  }
  Tensor stage(1, cfg.input_dim);
  for (int d = 0; d < cfg.input_dim; ++d) {
    double m = 0.0;
    for (int l = 0; l < cfg.n_patches; ++l) m += proto.patch_prototypes.at(l, d);
    stage.at(0, d) = m / cfg.n_patches + cfg.image_noise * rng.gaussian();
  }
  s.stage = std::move(stage);
  return s;
}

SyntheticTextSample make_text_sample(const IdentityPrototype& proto,
                                     const DiversityConfig& cfg, Rng& rng) {
  SyntheticTextSample s;
  s.identity = proto.id;
  Tensor tokens(cfg.text_tokens, cfg.input_dim);
  std::vector<double> w(cfg.n_patches);
  for (int m = 0; m < cfg.text_tokens; ++m) {
    int primary = m % cfg.n_patches;
    // Convex blend over this identity's own patch prototypes.
    double total = 0.0;
    for (double& wi : w) {
      wi = rng.uniform();
      total += wi;
    }
    for (double& wi : w) wi /= total;
    for (int d = 0; d < cfg.input_dim; ++d) {
      double mixed = 0.0;
      for (int l = 0; l < cfg.n_patches; ++l) mixed += w[l] * proto.patch_prototypes.at(l, d);
      double base = (1.0 - cfg.text_mixing) * proto.patch_prototypes.at(primary, d) +
                    cfg.text_mixing * mixed;
      tokens.at(m, d) = base + cfg.text_noise * rng.gaussian();
    }
  }
  s.tokens = std::move(tokens);
  return s;
}

DatasetFile fill_split(const DiversityConfig& cfg, Split split,
                       std::span<const IdentityPrototype> protos, Rng& rng) {
  DatasetFile ds;
  ds.config = cfg;
  ds.split = split;
  for (const auto& proto : protos) {
    for (int i = 0; i < cfg.images_per_id; ++i)
      ds.images.push_back(make_image_sample(proto, cfg, rng));
    for (int t = 0; t < cfg.texts_per_id; ++t)
      ds.texts.push_back(make_text_sample(proto, cfg, rng));
  }
  return ds;
}

}  // namespace

std::string split_name(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
  }
  return "?";
}

DatasetTriplet generate(const DiversityConfig& cfg) {
  validate_config(cfg);
  Rng rng(cfg.seed);
  std::vector<IdentityPrototype> protos = draw_prototypes(cfg, rng);

  // Identity-disjoint 70/15/15 split over a seeded shuffle.
  std::vector<int> order(protos.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  for (int i = static_cast<int>(order.size()) - 1; i > 0; --i)
    std::swap(order[i], order[rng.uniform_int(0, i)]);

  int n = cfg.num_ids;
  int n_train = std::max(1, static_cast<int>(std::lround(0.70 * n)));
  int n_val = std::max(1, static_cast<int>(std::lround(0.15 * n)));
  if (n_train + n_val >= n) throw ConfigError("dataset: split leaves no test identities");

  auto pick = [&](int from, int count) {
    std::vector<IdentityPrototype> out;
    for (int i = from; i < from + count; ++i) out.push_back(protos[order[i]]);
    return out;
  };
  std::vector<IdentityPrototype> train_ids = pick(0, n_train);
  std::vector<IdentityPrototype> val_ids = pick(n_train, n_val);
  std::vector<IdentityPrototype> test_ids = pick(n_train + n_val, n - n_train - n_val);

  DatasetTriplet out{fill_split(cfg, Split::Train, train_ids, rng),
                     fill_split(cfg, Split::Val, val_ids, rng),
                     fill_split(cfg, Split::Test, test_ids, rng)};
  log_debug("generated dataset: " + std::to_string(out.train.images.size()) +
            " train images, " + std::to_string(out.test.texts.size()) + " test texts");
  return out;
}

void write_dataset(std::ostream& os, const DatasetFile& ds) {
  write_bytes(os, kDatasetMagic, 4);
  write_u16(os, kDatasetVersion);
  write_u8(os, static_cast<std::uint8_t>(ds.split));
  write_string(os, config_block(ds.config));
  write_u32(os, static_cast<std::uint32_t>(ds.images.size()));
  for (const auto& img : ds.images) {
    write_u8(os, static_cast<std::uint8_t>(Modality::Image));
    write_u32(os, static_cast<std::uint32_t>(img.identity));
    write_u8(os, static_cast<std::uint8_t>(img.patches.size()));
    for (const Tensor& p : img.patches) write_tensor(os, p);
    write_tensor(os, img.stage);
  }
  write_u32(os, static_cast<std::uint32_t>(ds.texts.size()));
  for (const auto& txt : ds.texts) {
    write_u8(os, static_cast<std::uint8_t>(Modality::Text));
    write_u32(os, static_cast<std::uint32_t>(txt.identity));
    write_tensor(os, txt.tokens);
  }
}

DatasetFile read_dataset(std::istream& is) {
  char magic[4];
  read_bytes(is, magic, 4);
  if (std::memcmp(magic, kDatasetMagic, 4) != 0)
    throw IntegrityError("bad dataset magic bytes");
  if (read_u16(is) != kDatasetVersion) throw IntegrityError("unsupported dataset version");
  DatasetFile ds;
  std::uint8_t split = read_u8(is);
  if (split > 2) throw IntegrityError("bad split tag");
  ds.split = static_cast<Split>(split);
  ds.config = parse_config_block(read_string(is));

  std::uint32_t n_images = read_u32(is);
  for (std::uint32_t i = 0; i < n_images; ++i) {
    if (read_u8(is) != static_cast<std::uint8_t>(Modality::Image))
      throw IntegrityError("image record has wrong modality tag");
    SyntheticImageSample s;
    s.identity = static_cast<int>(read_u32(is));
    std::uint8_t n_patches = read_u8(is);
    for (std::uint8_t p = 0; p < n_patches; ++p) s.patches.push_back(read_tensor(is));
    s.stage = read_tensor(is);
    ds.images.push_back(std::move(s));
  }
  std::uint32_t n_texts = read_u32(is);
  for (std::uint32_t i = 0; i < n_texts; ++i) {
    if (read_u8(is) != static_cast<std::uint8_t>(Modality::Text))
      throw IntegrityError("text record has wrong modality tag");
    SyntheticTextSample s;
    s.identity = static_cast<int>(read_u32(is));
    s.tokens = read_tensor(is);
    ds.texts.push_back(std::move(s));
  }
  return ds;
}

void write_dataset_file(const std::filesystem::path& path, const DatasetFile& ds) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw StateError("cannot open " + path.string() + " for writing");
  write_dataset(os, ds);
  if (!os) throw IntegrityError("short write to " + path.string());
}

DatasetFile read_dataset_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw StateError("cannot open dataset " + path.string());
  return read_dataset(is);
}

Batch sample_batch(const DatasetFile& ds, int n, Rng& rng) {
  if (n < 1) throw ContractError("sample_batch: batch size must be >= 1");
  if (ds.images.empty() || ds.texts.empty()) throw ContractError("sample_batch: empty dataset");

  std::map<int, std::pair<std::vector<const SyntheticImageSample*>,
                          std::vector<const SyntheticTextSample*>>> by_id;
  for (const auto& img : ds.images) by_id[img.identity].first.push_back(&img);
  for (const auto& txt : ds.texts) by_id[txt.identity].second.push_back(&txt);

  std::vector<int> ids;
  for (const auto& [id, samples] : by_id) {
    if (!samples.first.empty() && !samples.second.empty()) ids.push_back(id);
  }
  if (ids.empty()) throw ContractError("sample_batch: no identity has both modalities");

  Batch batch;
  std::vector<int> picked;
  for (int i = 0; i < n; ++i) {
    int id = ids[rng.uniform_int(0, static_cast<int>(ids.size()) - 1)];
    const auto& [imgs, txts] = by_id[id];
    batch.images.push_back(imgs[rng.uniform_int(0, static_cast<int>(imgs.size()) - 1)]);
    batch.texts.push_back(txts[rng.uniform_int(0, static_cast<int>(txts.size()) - 1)]);
    picked.push_back(id);
  }
  batch.labels = make_match_labels(picked, picked);
  return batch;
}

}  // namespace xag
