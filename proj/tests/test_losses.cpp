#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "xag/errors.hpp"
#include "xag/losses.hpp"

using namespace xag;

namespace {
constexpr double kEps = 1e-8;
}

TEST_CASE("match labels and normalization") {
  std::vector<int> ids{0, 1, 0};
  MatchLabels labels = make_match_labels(ids, ids);
  CHECK(labels.y.at(0, 2) == 1.0);
  CHECK(labels.y.at(0, 1) == 0.0);
  CHECK(labels.q.at(0, 0) == doctest::Approx(0.5));
  CHECK(labels.q.at(1, 1) == doctest::Approx(1.0));
  for (int i = 0; i < 3; ++i) {
    double s = 0.0;
    for (int j = 0; j < 3; ++j) s += labels.q.at(i, j);
    CHECK(s == doctest::Approx(1.0));
  }
  // symmetric when both sides list the same identities
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) CHECK(labels.y.at(i, j) == labels.y.at(j, i));

  std::vector<int> a{0, 1}, b{2, 3};
  CHECK_THROWS_AS(make_match_labels(a, b), ContractError);
}

TEST_CASE("match_prob single candidate and orthonormal case") {
  Tensor one = match_prob(Tensor::from_rows({{3.0, 1.0}}), Tensor::from_rows({{0.2, 0.9}}));
  CHECK(one.at(0, 0) == doctest::Approx(1.0));

  // fv1 = ft1 = e1, ft2 = e2: p[0][0] = e / (e + 1)
  Tensor fv = Tensor::from_rows({{1.0, 0.0}, {0.0, 1.0}});
  Tensor ft = Tensor::from_rows({{1.0, 0.0}, {0.0, 1.0}});
  Tensor p = match_prob(fv, ft);
  double e = std::exp(1.0);
  CHECK(p.at(0, 0) == doctest::Approx(e / (e + 1.0)).epsilon(1e-12));
  CHECK(p.at(0, 1) == doctest::Approx(1.0 / (e + 1.0)).epsilon(1e-12));

  CHECK_THROWS_AS(match_prob(Tensor(2, 3), Tensor(2, 4)), DimensionError);
}

TEST_CASE("match_prob: positive scaling of a query row sharpens but never reorders") {
  Rng rng(1);
  for (int trial = 0; trial < 10; ++trial) {
    Tensor fv = oracle::random_tensor(rng, 3, 4);
    Tensor ft = oracle::random_tensor(rng, 3, 4);
    Tensor p1 = match_prob(fv, ft);
    Tensor scaled = fv;
    double c = rng.uniform(1.5, 4.0);
    for (int j = 0; j < 4; ++j) scaled.at(0, j) *= c;
    Tensor p2 = match_prob(scaled, ft);
    // same ordering of candidates within the scaled row
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) {
        if (p1.at(0, a) > p1.at(0, b)) CHECK(p2.at(0, a) > p2.at(0, b));
      }
    // sharpened: the argmax probability does not drop
    int arg = 0;
    for (int j = 1; j < 3; ++j)
      if (p1.at(0, j) > p1.at(0, arg)) arg = j;
    CHECK(p2.at(0, arg) >= p1.at(0, arg) - 1e-12);
  }
}

TEST_CASE("cmpm_directional: identical distributions and hand case") {
  std::vector<int> ids{0, 1};
  MatchLabels labels = make_match_labels(ids, ids);
  // p equals q exactly
  CHECK(std::abs(cmpm_directional(labels.q, labels.q, kEps)) <= 1e-6);

  // p = I with off-diagonal q: loss = log(1/eps) per row / n, from the oracle
  Tensor p = Tensor::identity(2);
  Tensor q = Tensor::from_rows({{0.0, 1.0}, {1.0, 0.0}});
  double got = cmpm_directional(p, q, kEps);
  double want = 0.0;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      if (p.at(i, j) > 0.0) want += p.at(i, j) * std::log(p.at(i, j) / (q.at(i, j) + kEps));
    }
  want /= 2.0;
  CHECK(got == doctest::Approx(want).epsilon(1e-10));
  CHECK(got == doctest::Approx(std::log(1.0 / kEps)).epsilon(1e-6));
}

TEST_CASE("all loss variants remain above -1e-6 on valid inputs") {
  Rng rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    int n = rng.uniform_int(2, 4);
    std::vector<int> ids;
    for (int i = 0; i < n; ++i) ids.push_back(rng.uniform_int(0, n - 1));
    ids[0] = ids[n - 1];  // ensure a repeat now and then
    MatchLabels labels = make_match_labels(ids, ids);
    Tensor fv = oracle::random_tensor(rng, n, 5);
    Tensor ft = oracle::random_tensor(rng, n, 5);
    CHECK(cmpm_directional(match_prob(fv, ft), labels.q, kEps) >= -1e-6);
    CHECK(cmpm_global(fv, ft, labels, kEps) >= -1e-6);
    CHECK(adversarial_cmpm(fv, ft, labels, kEps) >= -1e-6);
  }
}

TEST_CASE("cmpm_node: N=1 reduces to plain bidirectional CMPM") {
  Rng rng(3);
  std::vector<int> ids{0, 1, 1};
  MatchLabels labels = make_match_labels(ids, ids);
  Tensor fv = oracle::random_tensor(rng, 3, 4);
  Tensor ft = oracle::random_tensor(rng, 3, 4);
  std::vector<Tensor> fvs{fv}, fts{ft};
  CHECK(cmpm_node(fvs, fts, labels, kEps) ==
        doctest::Approx(cmpm_global(fv, ft, labels, kEps)).epsilon(1e-12));
}

TEST_CASE("cmpm_node: symmetric inputs give equal directional terms") {
  Rng rng(4);
  std::vector<int> ids{0, 1, 2};
  MatchLabels labels = make_match_labels(ids, ids);
  Tensor f = oracle::random_tensor(rng, 3, 4);
  std::vector<Tensor> nodes{f, f};
  // v2t and t2v coincide when fv == ft, so the loss is twice one direction
  double full = cmpm_node(nodes, nodes, labels, kEps);
  double one_dir = cmpm_directional(match_prob(f, f), labels.q, kEps);
  CHECK(full == doctest::Approx(2.0 * one_dir).epsilon(1e-12));
}

TEST_CASE("cmpm_node matches the triple-loop oracle on random instances") {
  Rng rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    int n = rng.uniform_int(2, 4), n_nodes = rng.uniform_int(1, 3), d = rng.uniform_int(2, 5);
    std::vector<int> ids;
    for (int i = 0; i < n; ++i) ids.push_back(rng.uniform_int(0, 2));
    MatchLabels labels = make_match_labels(ids, ids);
    std::vector<Tensor> fv, ft;
    for (int l = 0; l < n_nodes; ++l) {
      fv.push_back(oracle::random_tensor(rng, n, d));
      ft.push_back(oracle::random_tensor(rng, n, d));
    }
    CHECK(cmpm_node(fv, ft, labels, kEps) ==
          doctest::Approx(oracle::cmpm_node(fv, ft, ids, kEps)).epsilon(1e-10));
  }
  std::vector<int> ids{0, 1};
  MatchLabels labels = make_match_labels(ids, ids);
  std::vector<Tensor> two{Tensor(2, 3), Tensor(2, 3)}, one{Tensor(2, 3)};
  CHECK_THROWS_AS(cmpm_node(two, one, labels, kEps), ContractError);
}

TEST_CASE("cmpm_global matches its oracle and the identical-features case") {
  Rng rng(6);
  std::vector<int> ids{0, 1, 2, 3};
  MatchLabels labels = make_match_labels(ids, ids);
  Tensor f = oracle::random_tensor(rng, 4, 6);
  // identical features with distinct identities: small but nonnegative loss
  double self_loss = cmpm_global(f, f, labels, kEps);
  CHECK(self_loss >= -1e-6);

  for (int trial = 0; trial < 10; ++trial) {
    Tensor fv = oracle::random_tensor(rng, 4, 6);
    Tensor ft = oracle::random_tensor(rng, 4, 6);
    CHECK(cmpm_global(fv, ft, labels, kEps) ==
          doctest::Approx(oracle::cmpm_global(fv, ft, ids, kEps)).epsilon(1e-10));
  }
}

TEST_CASE("identical aligned features drive the global loss toward zero") {
  // one pair per identity and strongly separated directions: q is the
  // identity matrix and p approaches it as features sharpen
  Tensor f = scale(Tensor::identity(4), 30.0);
  std::vector<int> ids{0, 1, 2, 3};
  MatchLabels labels = make_match_labels(ids, ids);
  CHECK(std::abs(cmpm_global(f, f, labels, kEps)) < 1e-6);
}

TEST_CASE("attack_objective equals node CMPM on the same inputs") {
  Rng rng(7);
  std::vector<int> ids{0, 0, 1};
  MatchLabels labels = make_match_labels(ids, ids);
  std::vector<Tensor> v, t;
  for (int l = 0; l < 3; ++l) {
    v.push_back(oracle::random_tensor(rng, 3, 4));
    t.push_back(oracle::random_tensor(rng, 3, 4));
  }
  CHECK(attack_objective(v, t, labels, kEps) ==
        doctest::Approx(cmpm_node(v, t, labels, kEps)).epsilon(1e-15));
  CHECK(attack_objective(v, t, labels, kEps) ==
        doctest::Approx(oracle::cmpm_node(v, t, ids, kEps)).epsilon(1e-10));
}

TEST_CASE("adversarial_cmpm: single pair, symmetry, and oracle equivalence") {
  std::vector<int> one{0};
  MatchLabels single = make_match_labels(one, one);
  Tensor f1 = Tensor::from_rows({{1.0, 2.0}});
  CHECK(std::abs(adversarial_cmpm(f1, f1, single, kEps)) <= 1e-6);

  Rng rng(8);
  std::vector<int> ids{0, 1, 1};
  MatchLabels labels = make_match_labels(ids, ids);
  Tensor f = oracle::random_tensor(rng, 3, 6);
  // equal inputs: both directional sums coincide, so the loss is twice one
  Tensor p = match_prob(f, f);
  double one_dir = 0.0;
  Tensor q = labels.q;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      one_dir += p.at(i, j) * std::log(p.at(i, j) / (q.at(i, j) + kEps));
  CHECK(adversarial_cmpm(f, f, labels, kEps) ==
        doctest::Approx(2.0 * one_dir / 9.0).epsilon(1e-12));

  for (int trial = 0; trial < 10; ++trial) {
    Tensor pv = oracle::random_tensor(rng, 3, 6);
    Tensor pt = oracle::random_tensor(rng, 3, 6);
    CHECK(adversarial_cmpm(pv, pt, labels, kEps) ==
          doctest::Approx(oracle::adversarial_cmpm(pv, pt, ids, kEps)).epsilon(1e-10));
  }
}

TEST_CASE("total_adversarial_loss is the weighted sum") {
  Tape tape;
  ValueId s = tape.constant(Tensor::from_rows({{2.0}}));
  ValueId n = tape.constant(Tensor::from_rows({{3.0}}));
  ValueId a = tape.constant(Tensor::from_rows({{5.0}}));

  LossWeights zero{0.0, 0.0, 1e-8};
  CHECK(tape.scalar(total_adversarial_loss(tape, s, n, a, zero)) == doctest::Approx(2.0));

  LossWeights paper{1.0, 1.0, 1e-8};
  CHECK(tape.scalar(total_adversarial_loss(tape, s, n, a, paper)) == doctest::Approx(10.0));

  LossWeights l2a{1.0, 0.25, 1e-8};
  LossWeights l2b{1.0, 0.75, 1e-8};
  double va = tape.scalar(total_adversarial_loss(tape, s, n, a, l2a));
  double vb = tape.scalar(total_adversarial_loss(tape, s, n, a, l2b));
  // affine in lambda2
  CHECK(vb - va == doctest::Approx(0.5 * 5.0));
}

TEST_CASE("swapping modality arguments swaps the directional terms") {
  Rng rng(9);
  std::vector<int> ids{0, 1, 0, 2};
  MatchLabels labels = make_match_labels(ids, ids);
  Tensor fv = oracle::random_tensor(rng, 4, 5);
  Tensor ft = oracle::random_tensor(rng, 4, 5);
  // the bidirectional sum is invariant under swapping, given symmetric labels
  CHECK(cmpm_global(fv, ft, labels, kEps) ==
        doctest::Approx(cmpm_global(ft, fv, labels, kEps)).epsilon(1e-12));
  CHECK(adversarial_cmpm(fv, ft, labels, kEps) ==
        doctest::Approx(adversarial_cmpm(ft, fv, labels, kEps)).epsilon(1e-12));
}
