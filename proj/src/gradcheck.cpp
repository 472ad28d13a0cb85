#include "xag/gradcheck.hpp"

#include <cmath>
#include <functional>

#include "xag/autodiff.hpp"
#include "xag/encoders.hpp"
#include "xag/graph.hpp"
#include "xag/losses.hpp"
#include "xag/rng.hpp"
#include "xag/tensor.hpp"

namespace xag {

namespace {

// Builds a scalar root from the checked inputs. Inputs are bound as leaves
// in order; everything else the builder needs is captured as constants. The
// builder must be a pure function of the inputs so finite differencing sees
// a fixed objective.
struct CheckCase {
  std::string name;
  std::vector<Tensor> inputs;
  std::function<ValueId(Tape&, std::span<const ValueId>)> build;
};

Tensor random_tensor(Rng& rng, int rows, int cols, double lo = -2.0, double hi = 2.0) {
  Tensor t(rows, cols);
  for (double& v : t.values()) v = rng.uniform(lo, hi);
  return t;
}

// Keeps piecewise-linear kinks (relu zero crossings, colmax ties) farther
// from the evaluation point than the finite-difference step.
Tensor separated_tensor(Rng& rng, int rows, int cols, double margin) {
  Tensor t = random_tensor(rng, rows, cols);
  for (double& v : t.values()) {
    if (std::abs(v) < margin) v = v < 0.0 ? v - margin : v + margin;
  }
  for (int j = 0; j < cols; ++j) {
    for (int i = 0; i < rows; ++i) {
      for (int r = 0; r < i; ++r) {
        if (std::abs(t.at(i, j) - t.at(r, j)) < margin) t.at(i, j) += 2.0 * margin * (i + 1);
      }
    }
  }
  return t;
}

// Weighted sum with weights regenerated from a fixed seed, so repeated
// builds of the same case produce the same scalar objective.
ValueId weighted_sum(Tape& tape, ValueId out, std::uint64_t wseed) {
  const Tensor& v = tape.value(out);
  Rng wr(wseed);
  Tensor w = random_tensor(wr, v.rows(), v.cols(), 0.25, 1.75);
  return tape.sum(tape.hadamard(out, tape.constant(std::move(w))));
}

double eval_case(const CheckCase& c, const std::vector<Tensor>& inputs) {
  Tape tape;
  std::vector<ValueId> ids;
  ids.reserve(inputs.size());
  for (const Tensor& t : inputs) ids.push_back(tape.leaf(t));
  return tape.scalar(c.build(tape, ids));
}

GradCheckResult check_one(const CheckCase& c, double tol, double step) {
  Tape tape;
  std::vector<ValueId> ids;
  for (const Tensor& t : c.inputs) ids.push_back(tape.leaf(t));
  tape.backward(c.build(tape, ids));

  double max_rel = 0.0;
  for (std::size_t k = 0; k < c.inputs.size(); ++k) {
    const Tensor analytic = tape.grad(ids[k]);
    for (std::size_t e = 0; e < c.inputs[k].size(); ++e) {
      std::vector<Tensor> perturbed = c.inputs;
      perturbed[k].values()[e] += step;
      double up = eval_case(c, perturbed);
      perturbed[k].values()[e] -= 2.0 * step;
      double down = eval_case(c, perturbed);
      double fd = (up - down) / (2.0 * step);
      double ad = analytic.values()[e];
      double rel = std::abs(ad - fd) / std::max({1.0, std::abs(ad), std::abs(fd)});
      max_rel = std::max(max_rel, rel);
    }
  }
  return {c.name, max_rel, max_rel <= tol};
}

std::vector<CheckCase> make_cases(std::uint64_t seed) {
  std::vector<CheckCase> cases;
  Rng dims_rng(mix_seed(seed, 0xd1));
  auto dim = [&] { return dims_rng.uniform_int(2, 8); };
  int n = dim(), m = dim(), p = dim();
  Rng rng(mix_seed(seed, 0x11));

  auto add_case = [&](const std::string& name, std::vector<Tensor> inputs, auto body) {
    std::uint64_t wseed = mix_seed(seed, std::hash<std::string>{}(name));
    cases.push_back({name, std::move(inputs),
                     [body, wseed](Tape& t, std::span<const ValueId> in) {
                       return weighted_sum(t, body(t, in), wseed);
                     }});
  };

  add_case("matmul", {random_tensor(rng, n, m), random_tensor(rng, m, p)},
           [](Tape& t, std::span<const ValueId> in) { return t.matmul(in[0], in[1]); });
  add_case("add", {random_tensor(rng, n, m), random_tensor(rng, n, m)},
           [](Tape& t, std::span<const ValueId> in) { return t.add(in[0], in[1]); });
  add_case("sub", {random_tensor(rng, n, m), random_tensor(rng, n, m)},
           [](Tape& t, std::span<const ValueId> in) { return t.sub(in[0], in[1]); });
  add_case("hadamard", {random_tensor(rng, n, m), random_tensor(rng, n, m)},
           [](Tape& t, std::span<const ValueId> in) { return t.hadamard(in[0], in[1]); });
  add_case("scale", {random_tensor(rng, n, m)},
           [](Tape& t, std::span<const ValueId> in) { return t.scale(in[0], -1.375); });
  add_case("relu", {separated_tensor(rng, n, m, 1e-3)},
           [](Tape& t, std::span<const ValueId> in) { return t.relu(in[0]); });
  add_case("log", {random_tensor(rng, n, m, 0.5, 2.5)},
           [](Tape& t, std::span<const ValueId> in) { return t.log(in[0]); });
  add_case("sigmoid", {random_tensor(rng, n, m)},
           [](Tape& t, std::span<const ValueId> in) { return t.sigmoid(in[0]); });
  add_case("row_softmax", {random_tensor(rng, n, m)},
           [](Tape& t, std::span<const ValueId> in) { return t.row_softmax(in[0]); });
  add_case("l2_normalize_rows", {random_tensor(rng, n, m)},
           [](Tape& t, std::span<const ValueId> in) { return t.l2_normalize_rows(in[0]); });
  add_case("colmax", {separated_tensor(rng, n, m, 1e-3)},
           [](Tape& t, std::span<const ValueId> in) { return t.colmax(in[0]); });
  add_case("transpose", {random_tensor(rng, n, m)},
           [](Tape& t, std::span<const ValueId> in) { return t.transpose(in[0]); });
  add_case("sum", {random_tensor(rng, n, m)},
           [](Tape& t, std::span<const ValueId> in) { return t.sum(in[0]); });
  add_case("mean", {random_tensor(rng, n, m)},
           [](Tape& t, std::span<const ValueId> in) { return t.mean(in[0]); });
  add_case("concat_rows", {random_tensor(rng, n, m), random_tensor(rng, p, m)},
           [](Tape& t, std::span<const ValueId> in) {
             std::vector<ValueId> parts(in.begin(), in.end());
             return t.concat_rows(parts);
           });
  add_case("concat_cols", {random_tensor(rng, n, m), random_tensor(rng, n, p)},
           [](Tape& t, std::span<const ValueId> in) {
             std::vector<ValueId> parts(in.begin(), in.end());
             return t.concat_cols(parts);
           });
  add_case("slice_rows", {random_tensor(rng, std::max(2, n), m)},
           [](Tape& t, std::span<const ValueId> in) {
             return t.slice_rows(in[0], 0, t.value(in[0]).rows() - 1);
           });
  add_case("reshape", {random_tensor(rng, n, m)},
           [nm = n * m](Tape& t, std::span<const ValueId> in) {
             return t.reshape(in[0], 1, nm);
           });

  // Composites: the forwards the training pipeline is built from.
  {
    int nn = 3, d = 4;
    Tensor adj = build_adjacency(nn);
    add_case("gcn_forward",
             {random_tensor(rng, nn, d), random_tensor(rng, d, d), random_tensor(rng, d, d)},
             [adj](Tape& t, std::span<const ValueId> in) {
               std::vector<ValueId> ws{in[1], in[2]};
               return gcn_forward(t, in[0], t.constant(adj), ws);
             });
  }
  {
    int nn = 3, d = 4;
    Tensor adj = augment_adjacency(build_adjacency(nn));
    Tensor nodes = random_tensor(rng, nn, d);
    Tensor w0 = random_tensor(rng, d, d, -0.5, 0.5);
    Tensor w1 = random_tensor(rng, d, d, -0.5, 0.5);
    add_case("attacked_gcn_wrt_attack_node", {random_tensor(rng, 1, d)},
             [adj, nodes, w0, w1](Tape& t, std::span<const ValueId> in) {
               std::vector<ValueId> parts{t.constant(nodes), in[0]};
               ValueId v = t.concat_rows(parts);
               std::vector<ValueId> ws{t.constant(w0), t.constant(w1)};
               return strip_attack_node(t, gcn_forward(t, v, t.constant(adj), ws));
             });
  }
  {
    int d = 4;
    std::vector<Tensor> inputs;
    inputs.push_back(random_tensor(rng, 1, d));
    for (int k = 0; k < 4; ++k) {
      inputs.push_back(random_tensor(rng, d, d, -0.6, 0.6));
      inputs.push_back(random_tensor(rng, 1, d, -0.4, 0.4));
    }
    add_case("ft_transform", std::move(inputs), [](Tape& t, std::span<const ValueId> in) {
      ValueId h = in[0];
      for (int k = 0; k < 4; ++k) {
        h = t.add(t.matmul(h, in[1 + 2 * k]), in[2 + 2 * k]);
        if (k < 3) h = t.relu(h);
      }
      return t.add(h, in[0]);
    });
  }
  {
    int batch = 3, d = 4;
    std::vector<int> ids{0, 1, 0};
    MatchLabels labels = make_match_labels(ids, ids);
    // Loss roots are already scalar; the weighted sum just rescales them.
    add_case("cmpm_bidirectional",
             {random_tensor(rng, batch, d), random_tensor(rng, batch, d)},
             [labels](Tape& t, std::span<const ValueId> in) {
               return cmpm_global(t, in[0], in[1], labels, 1e-8);
             });
    add_case("adversarial_cmpm",
             {random_tensor(rng, batch, d), random_tensor(rng, batch, d)},
             [labels](Tape& t, std::span<const ValueId> in) {
               return adversarial_cmpm(t, in[0], in[1], labels, 1e-8);
             });
  }
  return cases;
}

}  // namespace

std::vector<GradCheckResult> run_gradcheck(std::uint64_t seed, double tol, double step) {
  std::vector<GradCheckResult> results;
  for (const CheckCase& c : make_cases(seed)) results.push_back(check_one(c, tol, step));
  return results;
}

bool all_passed(const std::vector<GradCheckResult>& results) {
  for (const auto& r : results)
    if (!r.pass) return false;
  return !results.empty();
}

}  // namespace xag
