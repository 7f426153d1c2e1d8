#include "metawsd/nn.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace metawsd {

std::string_view activation_name(Activation a) {
  return a == Activation::tanh ? "tanh" : "relu";
}

Activation parse_activation(std::string_view name) {
  if (name == "tanh") return Activation::tanh;
  if (name == "relu") return Activation::relu;
  throw std::invalid_argument("unknown activation '" + std::string(name) + "'");
}

SharedBlock SharedBlock::clone_leaves() const {
  return {ad::Var::parameter(weight.value()), ad::Var::parameter(bias.value()), activation};
}

SharedBlock SharedBlock::with_parameters(std::span<const ad::Var> params) const {
  if (params.size() != 2) throw ShapeError("SharedBlock expects 2 parameters");
  return {params[0], params[1], activation};
}

SharedBlock SharedBlock::from_values(std::span<const Matrix> values, Activation activation) {
  if (values.size() != 2) throw ShapeError("SharedBlock expects 2 tensors");
  if (values[1].rows() != 1 || values[1].cols() != values[0].cols()) {
    throw ShapeError("SharedBlock bias " + values[1].shape_string() + " does not match weight " +
                     values[0].shape_string());
  }
  return {ad::Var::parameter(values[0]), ad::Var::parameter(values[1]), activation};
}

TaskHead TaskHead::clone_leaves() const {
  return {ad::Var::parameter(weight.value()), ad::Var::parameter(bias.value())};
}

TaskHead TaskHead::with_parameters(std::span<const ad::Var> params) const {
  if (params.size() != 2) throw ShapeError("TaskHead expects 2 parameters");
  return {params[0], params[1]};
}

ad::Var forward_shared(const SharedBlock& block, const ad::Var& embeddings) {
  if (embeddings.cols() != block.input_dim()) {
    throw ShapeError("forward_shared: embeddings " + embeddings.value().shape_string() +
                     " vs input dim " + std::to_string(block.input_dim()));
  }
  ad::Var pre = ad::add(ad::matmul(embeddings, block.weight), block.bias);
  return block.activation == Activation::tanh ? ad::tanh(pre) : ad::relu(pre);
}

ad::Var head_logits(const TaskHead& head, const ad::Var& hidden) {
  return ad::add(ad::matmul(hidden, head.weight), head.bias);
}

namespace {

Matrix uniform_fan_in(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  Matrix w(fan_in, fan_out);
  for (double& v : w.data()) v = uniform(rng, -bound, bound);
  return w;
}

}  // namespace

SharedBlock init_shared(std::size_t input_dim, std::size_t hidden_dim, Activation activation,
                        Rng& rng) {
  if (input_dim == 0 || hidden_dim == 0) throw std::invalid_argument("init_shared: zero dimension");
  return {ad::Var::parameter(uniform_fan_in(input_dim, hidden_dim, rng)),
          ad::Var::parameter(Matrix(1, hidden_dim)), activation};
}

TaskHead init_head(std::size_t hidden_dim, std::size_t n_classes, Rng& rng) {
  if (n_classes < 2) {
    throw std::invalid_argument("init_head: need at least 2 classes, got " + std::to_string(n_classes));
  }
  if (hidden_dim == 0) throw std::invalid_argument("init_head: zero hidden dimension");
  return {ad::Var::parameter(uniform_fan_in(hidden_dim, n_classes, rng)),
          ad::Var::parameter(Matrix(1, n_classes))};
}

std::vector<std::size_t> argmax_rows(const Matrix& m) {
  std::vector<std::size_t> out(m.rows(), 0);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 1; j < m.cols(); ++j) {
      if (m(i, j) > m(i, out[i])) out[i] = j;
    }
  }
  return out;
}

}  // namespace metawsd
