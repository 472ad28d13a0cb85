#include <doctest.h>

#include <cmath>
#include <sstream>

#include "oracles.hpp"
#include "xag/autodiff.hpp"
#include "xag/errors.hpp"
#include "xag/graph.hpp"

using namespace xag;

namespace {

FeatureGraph random_graph(Rng& rng, int n, int d, Modality m = Modality::Image) {
  return make_feature_graph(oracle::random_tensor(rng, n, d), build_adjacency(n), m, 1);
}

}  // namespace

TEST_CASE("build_adjacency is the uniform complete graph") {
  Tensor a1 = build_adjacency(1);
  CHECK(a1.at(0, 0) == 1.0);

  Tensor a3 = build_adjacency(3);
  for (int i = 0; i < 3; ++i) {
    double row = 0.0;
    for (int j = 0; j < 3; ++j) {
      CHECK(a3.at(i, j) == doctest::Approx(1.0 / 3.0));
      row += a3.at(i, j);
    }
    CHECK(row == doctest::Approx(1.0));
  }
  CHECK_THROWS_AS(build_adjacency(0), ContractError);
}

TEST_CASE("implant_attack_node builds the block-form augmented graph") {
  Rng rng(2);
  for (int n = 1; n <= 8; ++n) {
    FeatureGraph g = random_graph(rng, n, 4);
    AttackNode x{Modality::Image, oracle::random_tensor(rng, 1, 4)};
    AugmentedGraph aug = implant_attack_node(g, x);

    CHECK(aug.adjacency.rows() == n + 1);
    CHECK(aug.attack_row == n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) CHECK(aug.adjacency.at(i, j) == g.adjacency.at(i, j));
    for (int i = 0; i < n; ++i) {
      CHECK(aug.adjacency.at(i, n) == 1.0);
      CHECK(aug.adjacency.at(n, i) == 1.0);
    }
    CHECK(aug.adjacency.at(n, n) == 0.0);
    // nodes are [V; x], source untouched
    for (int j = 0; j < 4; ++j) CHECK(aug.nodes.at(n, j) == x.vector.at(0, j));
    // symmetric source stays symmetric
    for (int i = 0; i <= n; ++i)
      for (int j = 0; j <= n; ++j)
        CHECK(aug.adjacency.at(i, j) == doctest::Approx(aug.adjacency.at(j, i)));
  }
}

TEST_CASE("implant_attack_node smallest case and contract errors") {
  FeatureGraph g = make_feature_graph(Tensor::from_rows({{1.0, 2.0}}),
                                      Tensor::from_rows({{0.5}}), Modality::Text, 3);
  AttackNode x{Modality::Text, Tensor::from_rows({{7.0, 8.0}})};
  AugmentedGraph aug = implant_attack_node(g, x);
  CHECK(aug.adjacency == Tensor::from_rows({{0.5, 1.0}, {1.0, 0.0}}));

  AttackNode wrong_mod{Modality::Image, Tensor::from_rows({{7.0, 8.0}})};
  CHECK_THROWS_AS(implant_attack_node(g, wrong_mod), ContractError);
  AttackNode wrong_dim{Modality::Text, Tensor::from_rows({{7.0}})};
  CHECK_THROWS_AS(implant_attack_node(g, wrong_dim), DimensionError);
}

TEST_CASE("gcn_forward matches the scalar-loop oracle") {
  Tensor a = Tensor::from_rows({{0.5, 0.5}, {0.5, 0.5}});
  Tensor v = Tensor::from_rows({{1.0, -2.0}, {0.25, 3.0}});
  Tensor w = Tensor::from_rows({{0.3, -0.7}, {1.1, 0.2}});
  GcnParams params{{w}};
  Tensor got = gcn_forward(v, a, params);
  Tensor want = oracle::gcn_forward(v, a, {w});
  for (std::size_t i = 0; i < got.size(); ++i)
    CHECK(got.values()[i] == doctest::Approx(want.values()[i]).epsilon(1e-12));
}

TEST_CASE("gcn_forward with zero inputs saturates at one half") {
  GcnParams params{{Tensor::zeros(3, 3)}};
  Tensor out = gcn_forward(Tensor::zeros(1, 3), Tensor::identity(1), params);
  for (double x : out.values()) CHECK(x == doctest::Approx(0.5));
}

TEST_CASE("gcn_forward outputs stay strictly inside (0,1)") {
  Rng rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    int n = rng.uniform_int(1, 6), d = rng.uniform_int(1, 6);
    Rng wr(trial + 17);
    GcnParams params = init_gcn_params(2, d, wr);
    Tensor out = gcn_forward(oracle::random_tensor(rng, n, d), build_adjacency(n), params);
    for (double x : out.values()) {
      CHECK(x > 0.0);
      CHECK(x < 1.0);
    }
  }
}

TEST_CASE("layered gcn equals composed single layers") {
  Rng rng(6);
  int n = 4, d = 5;
  GcnParams both = init_gcn_params(2, d, rng);
  GcnParams first{{both.layer_weights[0]}};
  GcnParams second{{both.layer_weights[1]}};
  Tensor v = oracle::random_tensor(rng, n, d);
  Tensor a = build_adjacency(n);
  Tensor one_shot = gcn_forward(v, a, both);
  Tensor composed = gcn_forward(gcn_forward(v, a, first), a, second);
  for (std::size_t i = 0; i < one_shot.size(); ++i)
    CHECK(std::abs(one_shot.values()[i] - composed.values()[i]) <= 1e-12);
}

TEST_CASE("strip_attack_node drops exactly the last row") {
  Rng rng(7);
  Tensor m = oracle::random_tensor(rng, 4, 3);
  Tensor s = strip_attack_node(m);
  CHECK(s.rows() == 3);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) CHECK(s.at(i, j) == m.at(i, j));
  CHECK_THROWS_AS(strip_attack_node(Tensor(1, 3)), ContractError);

  // strip is the inverse of appending the attack row, before any convolution
  Tensor v = oracle::random_tensor(rng, 3, 5);
  Tensor x = oracle::random_tensor(rng, 1, 5);
  const Tensor parts[] = {v, x};
  CHECK(strip_attack_node(concat_rows(parts)) == v);
}

TEST_CASE("implanted convolution differs from clean convolution") {
  Rng rng(8);
  int n = 3, d = 4;
  GcnParams params = init_gcn_params(2, d, rng);
  FeatureGraph g = random_graph(rng, n, d);
  Tensor clean = gcn_forward(g.nodes, g.adjacency, params);

  // even a zero attack vector leaks in through the second layer
  AttackNode zero{Modality::Image, Tensor::zeros(1, d)};
  Tensor zero_attacked = strip_attack_node(
      gcn_forward(implant_attack_node(g, zero).nodes,
                  implant_attack_node(g, zero).adjacency, params));
  bool differs_zero = false;
  for (std::size_t i = 0; i < clean.size(); ++i)
    differs_zero = differs_zero || std::abs(clean.values()[i] - zero_attacked.values()[i]) > 1e-12;
  CHECK(differs_zero);

  AttackNode x{Modality::Image, oracle::random_tensor(rng, 1, d)};
  AugmentedGraph aug = implant_attack_node(g, x);
  Tensor attacked = strip_attack_node(gcn_forward(aug.nodes, aug.adjacency, params));
  bool differs = false;
  for (std::size_t i = 0; i < clean.size(); ++i)
    differs = differs || std::abs(clean.values()[i] - attacked.values()[i]) > 1e-9;
  CHECK(differs);
}

TEST_CASE("losses see a nonzero gradient through the attack node") {
  Rng rng(9);
  int n = 3, d = 4;
  Tensor nodes = oracle::random_tensor(rng, n, d);
  Tensor aug_adj = augment_adjacency(build_adjacency(n));
  Tensor w0 = oracle::random_tensor(rng, d, d, -0.5, 0.5);
  Tensor w1 = oracle::random_tensor(rng, d, d, -0.5, 0.5);
  Tensor x = oracle::random_tensor(rng, 1, d);

  auto value_at = [&](const Tensor& xv) {
    Tape tape;
    std::vector<ValueId> parts{tape.constant(nodes), tape.constant(xv)};
    std::vector<ValueId> ws{tape.constant(w0), tape.constant(w1)};
    ValueId out =
        gcn_forward(tape, tape.concat_rows(parts), tape.constant(aug_adj), ws);
    return tape.scalar(tape.sum(strip_attack_node(tape, out)));
  };

  Tape tape;
  ValueId xid = tape.leaf(x);
  std::vector<ValueId> parts{tape.constant(nodes), xid};
  std::vector<ValueId> ws{tape.constant(w0), tape.constant(w1)};
  ValueId root = tape.sum(
      strip_attack_node(tape, gcn_forward(tape, tape.concat_rows(parts),
                                          tape.constant(aug_adj), ws)));
  tape.backward(root);
  const Tensor& g = tape.grad(xid);

  double norm = 0.0;
  for (double v : g.values()) norm += v * v;
  CHECK(norm > 1e-12);

  // finite-difference confirmation on the first coordinate
  double h = 1e-5;
  Tensor up = x, down = x;
  up.at(0, 0) += h;
  down.at(0, 0) -= h;
  double fd = (value_at(up) - value_at(down)) / (2.0 * h);
  CHECK(g.at(0, 0) == doctest::Approx(fd).epsilon(1e-5));
}

TEST_CASE("concat_semantic_global stitches rows in ascending order") {
  Tensor single = Tensor::from_rows({{1.0, 2.0}});
  CHECK(concat_semantic_global(single) == single);

  Tensor three = Tensor::from_rows({{1, 2}, {3, 4}, {5, 6}});
  Tensor flat = concat_semantic_global(three);
  CHECK(flat.rows() == 1);
  CHECK(flat.cols() == 6);
  for (int i = 0; i < 6; ++i) CHECK(flat.at(0, i) == static_cast<double>(i + 1));

  // permuting distinct rows changes the stitched feature
  Tensor swapped = Tensor::from_rows({{3, 4}, {1, 2}, {5, 6}});
  CHECK(concat_semantic_global(swapped) != flat);
}

TEST_CASE("graph dump format") {
  FeatureGraph g = make_feature_graph(Tensor::from_rows({{1.0, 2.0}}),
                                      Tensor::from_rows({{1.0}}), Modality::Text, 9);
  std::ostringstream os;
  dump_graph(g, os);
  CHECK(os.str() == "1 2 text 9\n1\n1 2\n");
}

TEST_CASE("feature graph validation") {
  CHECK_THROWS_AS(make_feature_graph(Tensor(2, 3), Tensor(3, 3), Modality::Image, 0),
                  DimensionError);
  Tensor asym = Tensor::from_rows({{0.0, 1.0}, {0.5, 0.0}});
  CHECK_THROWS_AS(make_feature_graph(Tensor(2, 3), asym, Modality::Image, 0), ContractError);
  Tensor negative = Tensor::from_rows({{0.0, -1.0}, {-1.0, 0.0}});
  CHECK_THROWS_AS(make_feature_graph(Tensor(2, 3), negative, Modality::Image, 0),
                  ContractError);
}
