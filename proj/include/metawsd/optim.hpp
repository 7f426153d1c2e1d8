#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "metawsd/autodiff.hpp"

namespace metawsd {

/// p' = p - lr * g as graph ops. Differentiable when grad mode is on, which is
/// how second-order inner loops stay attached to the initial parameters.
std::vector<ad::Var> sgd_step(std::span<const ad::Var> params, std::span<const ad::Var> grads,
                              double lr);

/// In-place p -= lr * g on leaf values.
void sgd_step_inplace(std::span<ad::Var> params, std::span<const Matrix> grads, double lr);

/// Halve (by default) the base rate every `every` steps.
struct StepDecay {
  double base = 1e-3;
  double factor = 0.5;
  std::size_t every = 500;

  double at(std::size_t step) const;
};

struct AdamOptions {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class Adam {
 public:
  explicit Adam(StepDecay schedule, AdamOptions options = {});

  /// One update of leaf values. The rate used is schedule.at(timestep()).
  void step(std::span<ad::Var> params, std::span<const Matrix> grads);

  double current_lr() const { return schedule_.at(t_); }
  std::size_t timestep() const { return t_; }
  const std::vector<Matrix>& first_moments() const { return m_; }
  const std::vector<Matrix>& second_moments() const { return v_; }

 private:
  StepDecay schedule_;
  AdamOptions opt_;
  std::size_t t_ = 0;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
};

}  // namespace metawsd
