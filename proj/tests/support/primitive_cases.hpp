#pragma once

// Table of autodiff primitives with random-input generators, shared by the
// unit and acceptance suites.

#include <functional>
#include <string>
#include <vector>

#include "oracles.hpp"

namespace oracle {

namespace ad = metawsd::ad;

struct PrimitiveCase {
  std::string name;
  std::vector<std::pair<std::size_t, std::size_t>> shapes;
  std::function<ad::Var(const std::vector<ad::Var>&)> fn;
  bool smooth = true;  // false: second derivative is zero almost everywhere
};

inline std::vector<PrimitiveCase> primitive_cases() {
  using V = std::vector<ad::Var>;
  static const std::vector<std::size_t> idx3{2, 0, 2};
  static const std::vector<std::size_t> idx2{3, 1};
  static const std::vector<std::size_t> targets{1, 0, 3};
  return {
      {"matmul", {{3, 4}, {4, 2}}, [](const V& v) { return ad::matmul(v[0], v[1]); }},
      {"transpose", {{3, 2}}, [](const V& v) { return ad::transpose(ad::mul(v[0], v[0])); }},
      {"add", {{3, 4}, {3, 4}}, [](const V& v) { return ad::add(v[0], v[1]); }},
      {"add_row_broadcast", {{3, 4}, {1, 4}}, [](const V& v) { return ad::add(v[0], v[1]); }},
      {"sub", {{3, 4}, {3, 4}}, [](const V& v) { return ad::sub(v[0], v[1]); }},
      {"sub_row_broadcast", {{3, 4}, {1, 4}}, [](const V& v) { return ad::sub(v[0], v[1]); }},
      {"mul", {{3, 4}, {3, 4}}, [](const V& v) { return ad::mul(v[0], v[1]); }},
      {"scale", {{3, 4}}, [](const V& v) { return ad::scale(ad::mul(v[0], v[0]), -1.7); }},
      {"exp", {{3, 4}}, [](const V& v) { return ad::exp(v[0]); }},
      {"tanh", {{3, 4}}, [](const V& v) { return ad::tanh(v[0]); }},
      {"relu", {{3, 4}}, [](const V& v) { return ad::mul(ad::relu(v[0]), v[0]); }, false},
      {"concat_rows", {{2, 3}, {1, 3}}, [](const V& v) { return ad::concat_rows(V{ad::mul(v[0], v[0]), v[1]}); }},
      {"gather_rows", {{4, 3}}, [](const V& v) { return ad::gather_rows(ad::exp(v[0]), idx3); }},
      {"scatter_rows", {{2, 3}}, [](const V& v) { return ad::scatter_rows(ad::exp(v[0]), idx2, 5); }},
      {"gather_cols", {{3, 4}}, [](const V& v) { return ad::gather_cols(ad::exp(v[0]), idx3); }},
      {"scatter_cols", {{3, 2}}, [](const V& v) { return ad::scatter_cols(ad::exp(v[0]), idx2, 5); }},
      {"mean_rows", {{3, 4}}, [](const V& v) { return ad::mean_rows(ad::mul(v[0], v[0])); }},
      {"sum_rows", {{3, 4}}, [](const V& v) { return ad::sum_rows(ad::mul(v[0], v[0])); }},
      {"sum_cols", {{3, 4}}, [](const V& v) { return ad::sum_cols(ad::mul(v[0], v[0])); }},
      {"sum_all", {{3, 4}}, [](const V& v) { return ad::sum_all(ad::mul(v[0], v[0])); }},
      {"broadcast_rows", {{1, 4}}, [](const V& v) { return ad::broadcast_rows(ad::exp(v[0]), 3); }},
      {"broadcast_cols", {{3, 1}}, [](const V& v) { return ad::broadcast_cols(ad::exp(v[0]), 4); }},
      {"expand", {{1, 1}}, [](const V& v) { return ad::expand(ad::exp(v[0]), 2, 3); }},
      {"log_softmax", {{3, 4}}, [](const V& v) { return ad::log_softmax(v[0]); }},
      {"nll_loss", {{3, 4}}, [](const V& v) { return ad::nll_loss(ad::log_softmax(v[0]), targets); }},
      {"sq_euclidean", {{3, 4}, {2, 4}}, [](const V& v) { return ad::sq_euclidean(v[0], v[1]); }},
  };
}

/// Scalar probe: sum of (output * weights), so every output entry matters.
inline ad::Var probe(const ad::Var& out, const Matrix& weights) {
  return ad::sum_all(ad::mul(out, ad::Var::constant(weights)));
}

struct GradCheck {
  double first_order = 0.0;   // max rel. err of first derivatives
  double second_order = 0.0;  // max rel. err of grad-of-grad
};

/// Compares analytic first and second derivatives of `c` against central
/// finite differences at random points in [-2, 2].
inline GradCheck check_primitive(const PrimitiveCase& c, metawsd::Rng& rng) {
  std::vector<Matrix> inputs;
  for (auto [r, k] : c.shapes) {
    Matrix m = random_matrix(r, k, rng);
    if (!c.smooth) {
      for (double& x : m.data()) {
        if (std::abs(x) < 0.05) x = 0.5;  // stay away from the kink
      }
    }
    inputs.push_back(std::move(m));
  }
  auto to_vars = [](const std::vector<Matrix>& ms) {
    std::vector<ad::Var> vs;
    for (const Matrix& m : ms) vs.push_back(ad::Var::parameter(m));
    return vs;
  };
  std::vector<ad::Var> probe_vars = to_vars(inputs);
  const ad::Var sample = c.fn(probe_vars);
  const Matrix w1 = random_matrix(sample.rows(), sample.cols(), rng);
  std::vector<Matrix> w2;
  for (const Matrix& m : inputs) w2.push_back(random_matrix(m.rows(), m.cols(), rng));

  auto loss_value = [&](const std::vector<Matrix>& ms) {
    ad::NoGradGuard ng;
    return probe(c.fn(to_vars(ms)), w1).item();
  };
  // s(x) = sum_j <dL/dx_j, w2_j>, evaluated with first-order gradients only.
  auto second_value = [&](const std::vector<Matrix>& ms) {
    std::vector<ad::Var> vs = to_vars(ms);
    const auto g = ad::grad(probe(c.fn(vs), w1), vs);
    double s = 0.0;
    for (std::size_t j = 0; j < g.size(); ++j) {
      for (std::size_t i = 0; i < g[j].value().size(); ++i) s += g[j].value()[i] * w2[j][i];
    }
    return s;
  };

  GradCheck out;
  std::vector<ad::Var> vs = to_vars(inputs);
  const auto g = ad::grad(probe(c.fn(vs), w1), vs, /*create_graph=*/true);
  ad::Var s = ad::Var::scalar(0.0);
  for (std::size_t j = 0; j < g.size(); ++j) s = ad::add(s, probe(g[j], w2[j]));
  const auto gg = ad::grad(s, vs);
  for (std::size_t j = 0; j < inputs.size(); ++j) {
    out.first_order = std::max(out.first_order, max_rel_err(g[j].value(), finite_difference(loss_value, inputs, j)));
    out.second_order =
        std::max(out.second_order, max_rel_err(gg[j].value(), finite_difference(second_value, inputs, j)));
  }
  return out;
}

}  // namespace oracle
