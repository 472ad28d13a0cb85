#include <doctest.h>

#include <cmath>
#include <cstring>
#include <sstream>

#include "oracles.hpp"
#include "xag/autodiff.hpp"
#include "xag/errors.hpp"
#include "xag/gradcheck.hpp"
#include "xag/io.hpp"
#include "xag/optim.hpp"
#include "xag/rng.hpp"
#include "xag/tensor.hpp"

using namespace xag;

TEST_CASE("tensor construction enforces invariants") {
  CHECK_THROWS_AS(Tensor(0, 3), ContractError);
  CHECK_THROWS_AS(Tensor(2, 2, {1.0, 2.0, 3.0}), ContractError);
  Tensor t = Tensor::from_rows({{1, 2}, {3, 4}});
  CHECK(t.at(1, 0) == 3.0);
  CHECK(t.all_finite());
}

TEST_CASE("matmul matches scalar oracle and handles identity and zeros") {
  Tensor m = Tensor::from_rows({{1, 2}, {3, 4}});
  CHECK(matmul(Tensor::identity(2), m) == m);

  Tensor a = Tensor::from_rows({{1, 2}, {3, 4}});
  Tensor b = Tensor::from_rows({{5}, {6}});
  Tensor p = matmul(a, b);
  CHECK(p.at(0, 0) == doctest::Approx(17.0));
  CHECK(p.at(1, 0) == doctest::Approx(39.0));

  Tensor z = matmul(Tensor::zeros(3, 3), Tensor::from_rows({{1, 2}, {3, 4}, {5, 6}}));
  for (double v : z.values()) CHECK(v == 0.0);

  CHECK_THROWS_AS(matmul(Tensor(2, 3), Tensor(2, 3)), DimensionError);

  Rng rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    Tensor x = oracle::random_tensor(rng, rng.uniform_int(1, 5), rng.uniform_int(1, 5));
    Tensor y = oracle::random_tensor(rng, x.cols(), rng.uniform_int(1, 5));
    Tensor got = matmul(x, y);
    Tensor want = oracle::matmul(x, y);
    for (std::size_t i = 0; i < got.size(); ++i)
      CHECK(got.values()[i] == doctest::Approx(want.values()[i]).epsilon(1e-12));
  }
}

TEST_CASE("sigmoid values and range") {
  Tensor x = Tensor::from_rows({{0.0, 1.0, -1.0}});
  Tensor y = sigmoid(x);
  CHECK(y.at(0, 0) == doctest::Approx(0.5));
  CHECK(y.at(0, 1) == doctest::Approx(1.0 / (1.0 + std::exp(-1.0))));
  // symmetric pair sums to one
  CHECK(y.at(0, 1) + y.at(0, 2) == doctest::Approx(1.0).epsilon(1e-12));

  Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    double v = sigmoid_scalar(rng.uniform(-500.0, 500.0));
    CHECK(v > 0.0);
    CHECK(v < 1.0);
  }
  // extreme finite inputs stay strictly inside (0, 1)
  CHECK(sigmoid_scalar(1e9) < 1.0);
  CHECK(sigmoid_scalar(-1e9) > 0.0);
}

TEST_CASE("row_softmax rows sum to one and shift invariance holds") {
  Tensor one_col = row_softmax(Tensor::from_rows({{3.5}, {-2.0}}));
  CHECK(one_col.at(0, 0) == doctest::Approx(1.0));
  CHECK(one_col.at(1, 0) == doctest::Approx(1.0));

  Tensor sym = row_softmax(Tensor::from_rows({{0.0, 0.0}}));
  CHECK(sym.at(0, 0) == doctest::Approx(0.5));

  Tensor hand = row_softmax(Tensor::from_rows({{1.0, 0.0}}));
  double e = std::exp(1.0);
  CHECK(hand.at(0, 0) == doctest::Approx(e / (e + 1.0)).epsilon(1e-12));
  CHECK(hand.at(0, 1) == doctest::Approx(1.0 / (e + 1.0)).epsilon(1e-12));

  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    Tensor x = oracle::random_tensor(rng, rng.uniform_int(1, 6), rng.uniform_int(1, 6));
    Tensor p = row_softmax(x);
    Tensor shifted = x;
    for (int i = 0; i < x.rows(); ++i) {
      double c = rng.uniform(-50.0, 50.0);
      for (int j = 0; j < x.cols(); ++j) shifted.at(i, j) += c;
    }
    Tensor p2 = row_softmax(shifted);
    for (int i = 0; i < p.rows(); ++i) {
      double row_sum = 0.0;
      for (int j = 0; j < p.cols(); ++j) {
        CHECK(p.at(i, j) >= 0.0);
        CHECK(std::abs(p.at(i, j) - p2.at(i, j)) <= 1e-9);
        row_sum += p.at(i, j);
      }
      CHECK(std::abs(row_sum - 1.0) <= 1e-9);
    }
  }
}

TEST_CASE("l2_normalize_rows handles unit, generic, and zero rows") {
  Tensor v = l2_normalize_rows(Tensor::from_rows({{3.0, 4.0}}));
  CHECK(v.at(0, 0) == doctest::Approx(0.6));
  CHECK(v.at(0, 1) == doctest::Approx(0.8));

  Tensor unit = Tensor::from_rows({{1.0, 0.0}});
  CHECK(l2_normalize_rows(unit) == unit);

  std::vector<int> flagged;
  Tensor z = Tensor::from_rows({{0.0, 0.0}, {1.0, 1.0}});
  Tensor out = l2_normalize_rows(z, &flagged);
  CHECK(flagged == std::vector<int>{0});
  CHECK(out.at(0, 0) == 0.0);
  CHECK(out.at(1, 0) == doctest::Approx(1.0 / std::sqrt(2.0)));
}

TEST_CASE("backward populates gradients with matching shapes") {
  Tape tape;
  ValueId x = tape.leaf(Tensor::from_rows({{1.0, 2.0}, {3.0, 4.0}}));
  ValueId root = tape.sum(x);
  tape.backward(root);
  const Tensor& g = tape.grad(x);
  CHECK(g.same_shape(tape.value(x)));
  for (double v : g.values()) CHECK(v == 1.0);
}

TEST_CASE("backward of sigmoid at zero is a quarter") {
  Tape tape;
  ValueId x = tape.leaf(Tensor::from_rows({{0.0}}));
  ValueId root = tape.sigmoid(x);
  tape.backward(root);
  CHECK(tape.grad(x).at(0, 0) == doctest::Approx(0.25));
}

TEST_CASE("backward rejects non-scalar roots") {
  Tape tape;
  ValueId x = tape.leaf(Tensor(2, 2));
  CHECK_THROWS_AS(tape.backward(x), ContractError);
}

TEST_CASE("gradient suite: autodiff vs central finite differences") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto results = run_gradcheck(seed);
    for (const auto& r : results) {
      INFO(r.op << " seed " << seed << " err " << r.max_rel_err);
      CHECK(r.pass);
    }
  }
}

TEST_CASE("tape replay determinism") {
  auto build = [](double bump) {
    Tape tape;
    Rng rng(99);
    ValueId a = tape.leaf(oracle::random_tensor(rng, 4, 3));
    ValueId b = tape.leaf(oracle::random_tensor(rng, 3, 4));
    ValueId root = tape.sum(tape.sigmoid(tape.matmul(a, b)));
    tape.backward(root);
    return tape.scalar(root) + bump * tape.grad(a).at(0, 0);
  };
  double r1 = build(1.0);
  double r2 = build(1.0);
  CHECK(std::memcmp(&r1, &r2, sizeof(double)) == 0);
}

TEST_CASE("adam: zero gradient leaves the parameter unchanged") {
  Tensor p = Tensor::from_rows({{1.0, -2.0}});
  Tensor before = p;
  AdamState s = AdamState::for_param(p, 1e-2);
  adam_step(p, Tensor::zeros(1, 2), s);
  CHECK(p == before);
}

TEST_CASE("adam: first step moves each weight by about lr in the gradient sign") {
  Rng rng(5);
  Tensor p = oracle::random_tensor(rng, 2, 3);
  Tensor g = oracle::random_tensor(rng, 2, 3, 0.5, 2.0);
  g.at(1, 2) = -1.3;
  Tensor before = p;
  AdamState s = AdamState::for_param(p, 1e-2);
  adam_step(p, g, s);
  for (std::size_t i = 0; i < p.size(); ++i) {
    double update = p.values()[i] - before.values()[i];
    double expected = -1e-2 * g.values()[i] / (std::abs(g.values()[i]) + s.eps);
    CHECK(update == doctest::Approx(expected).epsilon(1e-9));
  }
}

TEST_CASE("adam: determinism and ascent mode") {
  Rng rng(6);
  Tensor g = oracle::random_tensor(rng, 2, 2);

  Tensor p1 = Tensor::full(2, 2, 0.5);
  Tensor p2 = Tensor::full(2, 2, 0.5);
  AdamState s1 = AdamState::for_param(p1, 1e-3);
  AdamState s2 = AdamState::for_param(p2, 1e-3);
  adam_step(p1, g, s1);
  adam_step(p2, g, s2);
  CHECK(std::memcmp(p1.values().data(), p2.values().data(), sizeof(double) * 4) == 0);

  Tensor pd = Tensor::full(2, 2, 0.5);
  Tensor pa = Tensor::full(2, 2, 0.5);
  AdamState sd = AdamState::for_param(pd, 1e-3);
  AdamState sa = AdamState::for_param(pa, 1e-3);
  adam_step(pd, g, sd, false);
  adam_step(pa, g, sa, true);
  for (std::size_t i = 0; i < pd.size(); ++i)
    CHECK(pd.values()[i] - 0.5 == doctest::Approx(-(pa.values()[i] - 0.5)).epsilon(1e-12));

  CHECK_THROWS_AS(adam_step(pd, Tensor(3, 3), sd), DimensionError);
}

TEST_CASE("tensor serialization round-trips and rejects corruption") {
  Rng rng(8);
  Tensor t = oracle::random_tensor(rng, 3, 5);
  std::stringstream ss(std::ios::in | std::ios::out | std::ios::binary);
  write_tensor(ss, t);
  std::string bytes = ss.str();
  CHECK(bytes.substr(0, 4) == "XAGT");

  std::stringstream in(bytes, std::ios::in | std::ios::binary);
  Tensor back = read_tensor(in);
  CHECK(back == t);

  std::stringstream truncated(bytes.substr(0, bytes.size() - 3),
                              std::ios::in | std::ios::binary);
  CHECK_THROWS_AS(read_tensor(truncated), IntegrityError);

  std::string corrupt = bytes;
  corrupt[0] = 'Y';
  std::stringstream bad(corrupt, std::ios::in | std::ios::binary);
  CHECK_THROWS_AS(read_tensor(bad), IntegrityError);
}

TEST_CASE("rng streams are reproducible and state round-trips") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

  Rng c(7);
  c.gaussian();
  std::string state = c.save_state();
  double next1 = c.uniform();
  Rng d(0);
  d.restore_state(state);
  CHECK(d.uniform() == next1);
}
