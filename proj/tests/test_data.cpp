#include <doctest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "oracles.hpp"
#include "xag/data.hpp"
#include "xag/errors.hpp"

using namespace xag;

namespace {

DiversityConfig small_config() {
  DiversityConfig cfg;
  cfg.num_ids = 8;
  cfg.images_per_id = 2;
  cfg.texts_per_id = 2;
  cfg.seed = 42;
  return cfg;
}

std::set<int> identities(const DatasetFile& ds) {
  std::set<int> ids;
  for (const auto& s : ds.images) ids.insert(s.identity);
  for (const auto& s : ds.texts) ids.insert(s.identity);
  return ids;
}

std::string serialize(const DatasetFile& ds) {
  std::ostringstream os(std::ios::binary);
  write_dataset(os, ds);
  return os.str();
}

// flattened observation vector for cosine statistics
std::vector<double> flatten(const SyntheticImageSample& s) {
  std::vector<double> out;
  for (const Tensor& p : s.patches)
    out.insert(out.end(), p.values().begin(), p.values().end());
  out.insert(out.end(), s.stage.values().begin(), s.stage.values().end());
  return out;
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

}  // namespace

TEST_CASE("generation is deterministic and splits are identity-disjoint") {
  DiversityConfig cfg = small_config();
  DatasetTriplet a = generate(cfg);
  DatasetTriplet b = generate(cfg);
  CHECK(serialize(a.train) == serialize(b.train));
  CHECK(serialize(a.val) == serialize(b.val));
  CHECK(serialize(a.test) == serialize(b.test));

  std::set<int> train_ids = identities(a.train);
  std::set<int> val_ids = identities(a.val);
  std::set<int> test_ids = identities(a.test);
  CHECK(!train_ids.empty());
  CHECK(!val_ids.empty());
  CHECK(!test_ids.empty());
  for (int id : val_ids) CHECK(train_ids.count(id) == 0);
  for (int id : test_ids) {
    CHECK(train_ids.count(id) == 0);
    CHECK(val_ids.count(id) == 0);
  }
  CHECK(train_ids.size() + val_ids.size() + test_ids.size() ==
        static_cast<std::size_t>(cfg.num_ids));

  // every identity in a split has both modalities
  for (const auto* split : {&a.train, &a.val, &a.test}) {
    std::set<int> with_images, with_texts;
    for (const auto& s : split->images) with_images.insert(s.identity);
    for (const auto& s : split->texts) with_texts.insert(s.identity);
    CHECK(with_images == with_texts);
  }
}

TEST_CASE("different seeds produce different datasets") {
  DiversityConfig cfg = small_config();
  DatasetTriplet a = generate(cfg);
  cfg.seed = 43;
  DatasetTriplet b = generate(cfg);
  CHECK(serialize(a.train) != serialize(b.train));
}

TEST_CASE("noiseless generation collapses within-identity variation") {
  DiversityConfig cfg = small_config();
  cfg.image_noise = 0.0;
  cfg.text_noise = 0.0;
  cfg.text_mixing = 0.0;
  DatasetTriplet sets = generate(cfg);

  for (int id : identities(sets.train)) {
    const SyntheticImageSample* first_img = nullptr;
    for (const auto& s : sets.train.images) {
      if (s.identity != id) continue;
      if (!first_img) {
        first_img = &s;
        continue;
      }
      for (std::size_t p = 0; p < s.patches.size(); ++p)
        CHECK(s.patches[p] == first_img->patches[p]);
      CHECK(s.stage == first_img->stage);
    }
    const SyntheticTextSample* first_txt = nullptr;
    for (const auto& s : sets.train.texts) {
      if (s.identity != id) continue;
      if (!first_txt) {
        first_txt = &s;
        continue;
      }
      CHECK(s.tokens == first_txt->tokens);
    }
  }
}

TEST_CASE("default diversity keeps identities separable in observation space") {
  DiversityConfig cfg;  // defaults: 32 ids, noise 0.3, mixing 0.5
  DatasetTriplet sets = generate(cfg);
  double within = 0.0, cross = 0.0;
  int n_within = 0, n_cross = 0;
  const auto& images = sets.train.images;
  for (std::size_t i = 0; i < images.size(); ++i) {
    for (std::size_t j = i + 1; j < images.size(); ++j) {
      double c = cosine(flatten(images[i]), flatten(images[j]));
      if (images[i].identity == images[j].identity) {
        within += c;
        ++n_within;
      } else {
        cross += c;
        ++n_cross;
      }
    }
  }
  CHECK(n_within > 0);
  CHECK(n_cross > 0);
  CHECK(within / n_within > cross / n_cross);
}

TEST_CASE("degenerate configurations are rejected") {
  DiversityConfig cfg = small_config();
  cfg.num_ids = 3;
  CHECK_THROWS_AS(generate(cfg), ConfigError);
  cfg = small_config();
  cfg.text_mixing = 1.5;
  CHECK_THROWS_AS(generate(cfg), ConfigError);
  cfg = small_config();
  cfg.image_noise = -0.1;
  CHECK_THROWS_AS(generate(cfg), ConfigError);
}

TEST_CASE("dataset files round-trip byte-identically") {
  DatasetTriplet sets = generate(small_config());
  std::string bytes = serialize(sets.val);
  CHECK(bytes.substr(0, 4) == "XAGD");

  std::istringstream in(bytes, std::ios::binary);
  DatasetFile back = read_dataset(in);
  CHECK(serialize(back) == bytes);
  CHECK(back.split == Split::Val);
  CHECK(back.config.seed == sets.val.config.seed);

  std::istringstream truncated(bytes.substr(0, bytes.size() / 2), std::ios::binary);
  CHECK_THROWS_AS(read_dataset(truncated), IntegrityError);
}

TEST_CASE("sample_batch pairs same-identity samples and builds labels") {
  DatasetTriplet sets = generate(small_config());
  Rng rng(1);

  Batch one = sample_batch(sets.train, 1, rng);
  CHECK(one.labels.y == Tensor::from_rows({{1.0}}));
  CHECK(one.images[0]->identity == one.texts[0]->identity);

  for (int trial = 0; trial < 10; ++trial) {
    Batch batch = sample_batch(sets.train, 6, rng);
    for (int i = 0; i < 6; ++i) {
      CHECK(batch.images[i]->identity == batch.texts[i]->identity);
      CHECK(batch.labels.y.at(i, i) == 1.0);
      for (int j = 0; j < 6; ++j) {
        double want =
            batch.images[i]->identity == batch.texts[j]->identity ? 1.0 : 0.0;
        CHECK(batch.labels.y.at(i, j) == want);
        CHECK(batch.labels.y.at(i, j) == batch.labels.y.at(j, i));
      }
    }
  }
  CHECK_THROWS_AS(sample_batch(sets.train, 0, rng), ContractError);
}

TEST_CASE("repeated identities form label blocks") {
  // four slots over two identities: the 2x2 blocks of ones must appear
  std::vector<int> ids{5, 5, 9, 9};
  MatchLabels labels = make_match_labels(ids, ids);
  Tensor want = Tensor::from_rows(
      {{1, 1, 0, 0}, {1, 1, 0, 0}, {0, 0, 1, 1}, {0, 0, 1, 1}});
  CHECK(labels.y == want);
  for (int i = 0; i < 4; ++i) CHECK(labels.q.at(i, i) == doctest::Approx(0.5));
}
