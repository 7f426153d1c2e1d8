#include "metawsd/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace metawsd {

namespace {

void check_lr(double lr) {
  if (!(lr >= 0.0)) throw std::invalid_argument("learning rate must be non-negative");
}

}  // namespace

std::vector<ad::Var> sgd_step(std::span<const ad::Var> params, std::span<const ad::Var> grads,
                              double lr) {
  check_lr(lr);
  if (params.size() != grads.size()) throw ShapeError("sgd_step: parameter/gradient count mismatch");
  std::vector<ad::Var> out;
  out.reserve(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params[i].value().same_shape(grads[i].value())) {
      throw ShapeError("sgd_step: gradient shape " + grads[i].value().shape_string() +
                       " for parameter " + params[i].value().shape_string());
    }
    out.push_back(lr == 0.0 ? params[i] : ad::sub(params[i], ad::scale(grads[i], lr)));
  }
  return out;
}

void sgd_step_inplace(std::span<ad::Var> params, std::span<const Matrix> grads, double lr) {
  check_lr(lr);
  if (params.size() != grads.size()) throw ShapeError("sgd_step: parameter/gradient count mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params[i].value().same_shape(grads[i])) throw ShapeError("sgd_step: shape mismatch");
    Matrix p = params[i].value();
    for (std::size_t k = 0; k < p.size(); ++k) p[k] -= lr * grads[i][k];
    params[i].assign(std::move(p));
  }
}

double StepDecay::at(std::size_t step) const {
  if (every == 0) return base;
  return base * std::pow(factor, static_cast<double>(step / every));
}

Adam::Adam(StepDecay schedule, AdamOptions options) : schedule_(schedule), opt_(options) {
  check_lr(schedule.base);
}

void Adam::step(std::span<ad::Var> params, std::span<const Matrix> grads) {
  if (params.size() != grads.size()) throw ShapeError("Adam: parameter/gradient count mismatch");
  if (m_.empty()) {
    for (const auto& p : params) {
      m_.emplace_back(p.rows(), p.cols());
      v_.emplace_back(p.rows(), p.cols());
    }
  } else if (m_.size() != params.size()) {
    throw ShapeError("Adam: parameter count changed between steps");
  }
  const double lr = schedule_.at(t_);
  ++t_;
  const double bc1 = 1.0 - std::pow(opt_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(opt_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params[i].value().same_shape(grads[i]) || !m_[i].same_shape(grads[i])) {
      throw ShapeError("Adam: shape mismatch for parameter " + std::to_string(i));
    }
    Matrix p = params[i].value();
    for (std::size_t k = 0; k < p.size(); ++k) {
      const double g = grads[i][k];
      m_[i][k] = opt_.beta1 * m_[i][k] + (1.0 - opt_.beta1) * g;
      v_[i][k] = opt_.beta2 * v_[i][k] + (1.0 - opt_.beta2) * g * g;
      const double m_hat = m_[i][k] / bc1;
      const double v_hat = v_[i][k] / bc2;
      p[k] -= lr * m_hat / (std::sqrt(v_hat) + opt_.eps);
    }
    params[i].assign(std::move(p));
  }
}

}  // namespace metawsd
