#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "metawsd/autodiff.hpp"
#include "metawsd/random.hpp"

namespace metawsd {

enum class Activation { tanh, relu };

std::string_view activation_name(Activation a);
Activation parse_activation(std::string_view name);

/// Shared block: the linear layer applied to pre-computed token embeddings.
/// Weight is embedding_dim x hidden_dim, bias 1 x hidden_dim.
struct SharedBlock {
  ad::Var weight;
  ad::Var bias;
  Activation activation = Activation::relu;

  std::size_t input_dim() const { return weight.rows(); }
  std::size_t hidden_dim() const { return weight.cols(); }
  std::vector<ad::Var> parameters() const { return {weight, bias}; }
  std::vector<Matrix> values() const { return {weight.value(), bias.value()}; }

  /// Same values as fresh requires_grad leaves.
  SharedBlock clone_leaves() const;
  SharedBlock with_parameters(std::span<const ad::Var> params) const;
  static SharedBlock from_values(std::span<const Matrix> values, Activation activation);
};

/// Task head: hidden_dim x C weight, 1 x C bias.
struct TaskHead {
  ad::Var weight;
  ad::Var bias;

  std::size_t n_classes() const { return weight.cols(); }
  std::vector<ad::Var> parameters() const { return {weight, bias}; }
  TaskHead clone_leaves() const;
  TaskHead with_parameters(std::span<const ad::Var> params) const;
};

ad::Var forward_shared(const SharedBlock& block, const ad::Var& embeddings);
ad::Var head_logits(const TaskHead& head, const ad::Var& hidden);

/// Weights uniform in +-1/sqrt(fan_in), zero bias.
SharedBlock init_shared(std::size_t input_dim, std::size_t hidden_dim, Activation activation,
                        Rng& rng);
TaskHead init_head(std::size_t hidden_dim, std::size_t n_classes, Rng& rng);

/// Row-wise argmax, ties to the lowest column.
std::vector<std::size_t> argmax_rows(const Matrix& m);

}  // namespace metawsd
