#include <doctest.h>

#include <cmath>

#include "../support/primitive_cases.hpp"
#include "metawsd/autodiff.hpp"

using namespace metawsd;
using oracle::rel_err;

TEST_CASE("every primitive matches central differences, first and second order") {
  Rng rng = make_rng(2024);
  for (const auto& c : oracle::primitive_cases()) {
    for (int trial = 0; trial < 3; ++trial) {
      CAPTURE(c.name);
      const auto r = oracle::check_primitive(c, rng);
      CHECK(r.first_order < 1e-6);
      CHECK(r.second_order < 1e-4);
    }
  }
}

TEST_CASE("hand-checked derivatives") {
  SUBCASE("tanh'(0) = 1") {
    auto x = ad::Var::parameter(Matrix::scalar(0.0));
    CHECK(ad::grad(ad::tanh(x), std::vector{x})[0].item() == doctest::Approx(1.0).epsilon(1e-15));
  }
  SUBCASE("d/dx x*x at 3 = 6") {
    auto x = ad::Var::parameter(Matrix::scalar(3.0));
    CHECK(ad::grad(x * x, std::vector{x})[0].item() == 6.0);
  }
  SUBCASE("d2/dx2 x^3 at 2 = 12") {
    auto x = ad::Var::parameter(Matrix::scalar(2.0));
    auto g = ad::grad(x * x * x, std::vector{x}, true)[0];
    CHECK(g.item() == doctest::Approx(12.0));
    CHECK(ad::grad(g, std::vector{x})[0].item() == doctest::Approx(12.0).epsilon(1e-14));
  }
  SUBCASE("d(w.x)/dw = x") {
    auto w = ad::Var::parameter(Matrix::row({5.0}));
    auto x = ad::Var::constant(Matrix::row({2.0}));
    CHECK(ad::grad(ad::sum_all(w * x), std::vector{w})[0].item() == 2.0);
  }
  SUBCASE("grad of g = 2w is 2") {
    auto w = ad::Var::parameter(Matrix::scalar(1.3));
    auto g = ad::grad(w * w, std::vector{w}, true)[0];
    CHECK(g.item() == doctest::Approx(2.6));
    CHECK(ad::grad(g, std::vector{w})[0].item() == doctest::Approx(2.0).epsilon(1e-15));
  }
  SUBCASE("nll(log_softmax(0,0)), target 0 gives (-0.5, 0.5)") {
    auto z = ad::Var::parameter(Matrix::row({0.0, 0.0}));
    const std::vector<std::size_t> t{0};
    auto g = ad::grad(ad::nll_loss(ad::log_softmax(z), t), std::vector{z})[0].value();
    // softmax - onehot, evaluated by hand
    CHECK(g(0, 0) == doctest::Approx(-0.5).epsilon(1e-15));
    CHECK(g(0, 1) == doctest::Approx(0.5).epsilon(1e-15));
  }
}

TEST_CASE("log_softmax rows exponentiate to one") {
  Rng rng = make_rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    Matrix m = oracle::random_matrix(4, 7, rng, -30.0, 30.0);
    const Matrix out = ad::log_softmax(ad::Var::constant(m)).value();
    for (std::size_t r = 0; r < out.rows(); ++r) {
      double s = 0.0;
      for (double v : out.row_span(r)) s += std::exp(v);
      CHECK(std::abs(s - 1.0) < 1e-12);
    }
  }
}

TEST_CASE("gradient of a sum of losses is the sum of gradients") {
  Rng rng = make_rng(9);
  auto w = ad::Var::parameter(oracle::random_matrix(3, 2, rng));
  auto x = ad::Var::constant(oracle::random_matrix(4, 3, rng));
  auto l1 = ad::sum_all(ad::tanh(ad::matmul(x, w)));
  auto l2 = ad::sum_all(ad::exp(ad::scale(w, 0.3)));
  const Matrix g1 = ad::grad(l1, std::vector{w})[0].value();
  const Matrix g2 = ad::grad(l2, std::vector{w})[0].value();
  const Matrix g = ad::grad(l1 + l2, std::vector{w})[0].value();
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(std::abs(g[i] - (g1[i] + g2[i])) < 1e-14);
}

TEST_CASE("backward accumulates into leaves until zeroed") {
  auto x = ad::Var::parameter(Matrix::scalar(3.0));
  ad::backward(x * x);
  CHECK(x.grad()[0] == 6.0);
  ad::backward(x * x);
  CHECK(x.grad()[0] == 12.0);
  x.zero_grad();
  CHECK(x.grad()[0] == 0.0);
}

TEST_CASE("shared subexpressions are visited once") {
  auto x = ad::Var::parameter(Matrix::scalar(2.0));
  auto y = x * x;             // 4
  auto z = y + y;             // 2x^2, dz/dx = 4x = 8
  CHECK(ad::grad(z, std::vector{x})[0].item() == 8.0);
  const auto order = ad::topological_order(z);
  CHECK(order.size() == 3);
  for (std::size_t i = 1; i < order.size(); ++i) CHECK(order[i - 1].id() < order[i].id());
}

TEST_CASE("errors") {
  auto a = ad::Var::parameter(Matrix(2, 3));
  auto b = ad::Var::parameter(Matrix(2, 3));
  CHECK_THROWS_AS(ad::matmul(a, b), ShapeError);
  CHECK_THROWS_AS(ad::add(a, ad::Var::parameter(Matrix(3, 2))), ShapeError);
  CHECK_THROWS_AS(ad::grad(a, std::vector{a}), ShapeError);
  CHECK_THROWS_AS(ad::exp(ad::Var::parameter(Matrix::scalar(1000.0))), NumericError);
  const std::vector<std::size_t> bad{5};
  CHECK_THROWS(ad::nll_loss(ad::log_softmax(a), bad));
}

TEST_CASE("unreached inputs get zero gradients, no-grad mode records nothing") {
  auto x = ad::Var::parameter(Matrix::scalar(1.0));
  auto y = ad::Var::parameter(Matrix(2, 2, 1.0));
  const auto g = ad::grad(x * x, std::vector{x, y});
  CHECK(g[1].value() == Matrix(2, 2));
  ad::NoGradGuard ng;
  auto z = x * x;
  CHECK_FALSE(z.requires_grad());
  CHECK(z.is_leaf());
}

TEST_CASE("gradients treat the wrt list as independent inputs") {
  auto x = ad::Var::parameter(Matrix::scalar(3.0));
  auto y = ad::scale(x, 2.0);
  auto loss = x * y;  // 2x^2
  const auto partial = ad::grad(loss, std::vector{x, y});
  CHECK(partial[0].item() == 6.0);  // dL/dx at fixed y
  CHECK(partial[1].item() == 3.0);
  CHECK(ad::grad(loss, std::vector{x})[0].item() == 12.0);  // total derivative
}
