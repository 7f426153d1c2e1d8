#include "metawsd/autodiff.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <string>
#include <unordered_map>
#include <unordered_set>

namespace metawsd::ad {

namespace {

std::atomic<std::uint64_t> next_node_id{1};
thread_local bool grad_mode = true;

[[noreturn]] void shape_fail(std::string_view op, const Matrix& a, const Matrix& b) {
  throw ShapeError(std::string(op) + ": incompatible shapes " + a.shape_string() + " and " +
                   b.shape_string());
}

Var ones_like(const Matrix& m) { return Var::constant(Matrix(m.rows(), m.cols(), 1.0)); }

}  // namespace

bool grad_enabled() noexcept { return grad_mode; }

GradModeGuard::GradModeGuard(bool enabled) : previous_(grad_mode) { grad_mode = enabled; }
GradModeGuard::~GradModeGuard() { grad_mode = previous_; }

Var Var::constant(Matrix value) {
  if (!value.all_finite()) throw NumericError("non-finite value in constant");
  auto n = std::make_shared<detail::Node>();
  n->id = next_node_id.fetch_add(1, std::memory_order_relaxed);
  n->value = std::move(value);
  return Var(std::move(n));
}

Var Var::parameter(Matrix value) {
  Var v = constant(std::move(value));
  v.node_->requires_grad = true;
  return v;
}

Var Var::make(Matrix value, std::vector<Var> parents, detail::BackwardFn backward,
              std::string_view op) {
  if (!value.all_finite()) {
    throw NumericError(std::string(op) + ": non-finite value encountered");
  }
  auto n = std::make_shared<detail::Node>();
  n->id = next_node_id.fetch_add(1, std::memory_order_relaxed);
  n->value = std::move(value);
  n->op = op;
  const bool track = grad_mode && std::any_of(parents.begin(), parents.end(),
                                              [](const Var& p) { return p.requires_grad(); });
  if (track) {
    n->requires_grad = true;
    n->parents = std::move(parents);
    n->backward = std::move(backward);
  }
  return Var(std::move(n));
}

double Var::item() const {
  if (value().size() != 1) throw ShapeError("item() on " + value().shape_string());
  return value()[0];
}

const Matrix& Var::grad() const {
  if (!node_->grad.same_shape(node_->value)) {
    node_->grad = Matrix(node_->value.rows(), node_->value.cols());
  }
  return node_->grad;
}

void Var::zero_grad() { node_->grad = Matrix(node_->value.rows(), node_->value.cols()); }

Var Var::detach() const { return constant(node_->value); }

void Var::assign(Matrix value) {
  if (!is_leaf()) throw std::logic_error("assign() on a non-leaf node");
  if (!value.same_shape(node_->value)) shape_fail("assign", node_->value, value);
  if (!value.all_finite()) throw NumericError("assign: non-finite value");
  node_->value = std::move(value);
}

// ---------------------------------------------------------------------------
// Primitives

Var matmul(const Var& a, const Var& b) {
  const Matrix& x = a.value();
  const Matrix& y = b.value();
  if (x.cols() != y.rows()) shape_fail("matmul", x, y);
  Matrix out(x.rows(), y.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t k = 0; k < x.cols(); ++k) {
      const double xik = x(i, k);
      if (xik == 0.0) continue;
      for (std::size_t j = 0; j < y.cols(); ++j) out(i, j) += xik * y(k, j);
    }
  }
  return Var::make(
      std::move(out), {a, b},
      [](const Var& out, const Var& g) {
        const auto& p = out.parents();
        Var ga, gb;
        if (p[0].requires_grad()) ga = matmul(g, transpose(p[1]));
        if (p[1].requires_grad()) gb = matmul(transpose(p[0]), g);
        return std::vector<Var>{ga, gb};
      },
      "matmul");
}

Var transpose(const Var& a) {
  const Matrix& x = a.value();
  Matrix out(x.cols(), x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < x.cols(); ++j) out(j, i) = x(i, j);
  return Var::make(
      std::move(out), {a},
      [](const Var&, const Var& g) { return std::vector<Var>{transpose(g)}; }, "transpose");
}

namespace {

// Shared by add/sub: b is either a's shape or a 1 x n row broadcast over a's rows.
Var add_sub(const Var& a, const Var& b, double sign, std::string_view op) {
  const Matrix& x = a.value();
  const Matrix& y = b.value();
  const bool same = x.same_shape(y);
  const bool row_bcast = !same && y.rows() == 1 && y.cols() == x.cols();
  if (!same && !row_bcast) shape_fail(op, x, y);
  Matrix out = x;
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < x.cols(); ++j) out(i, j) += sign * (same ? y(i, j) : y(0, j));
  return Var::make(
      std::move(out), {a, b},
      [sign, row_bcast](const Var& out, const Var& g) {
        const auto& p = out.parents();
        Var ga, gb;
        if (p[0].requires_grad()) ga = g;
        if (p[1].requires_grad()) {
          gb = row_bcast ? sum_rows(g) : g;
          if (sign < 0) gb = scale(gb, -1.0);
        }
        return std::vector<Var>{ga, gb};
      },
      op);
}

}  // namespace

Var add(const Var& a, const Var& b) { return add_sub(a, b, 1.0, "add"); }
Var sub(const Var& a, const Var& b) { return add_sub(a, b, -1.0, "sub"); }

Var mul(const Var& a, const Var& b) {
  const Matrix& x = a.value();
  const Matrix& y = b.value();
  if (!x.same_shape(y)) shape_fail("mul", x, y);
  Matrix out = x;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= y[i];
  return Var::make(
      std::move(out), {a, b},
      [](const Var& out, const Var& g) {
        const auto& p = out.parents();
        Var ga, gb;
        if (p[0].requires_grad()) ga = mul(g, p[1]);
        if (p[1].requires_grad()) gb = mul(g, p[0]);
        return std::vector<Var>{ga, gb};
      },
      "mul");
}

Var scale(const Var& a, double s) {
  Matrix out = a.value();
  for (double& v : out.data()) v *= s;
  return Var::make(
      std::move(out), {a},
      [s](const Var&, const Var& g) { return std::vector<Var>{scale(g, s)}; }, "scale");
}

Var exp(const Var& a) {
  Matrix out = a.value();
  for (double& v : out.data()) v = std::exp(v);
  return Var::make(
      std::move(out), {a},
      [](const Var& out, const Var& g) { return std::vector<Var>{mul(g, out)}; }, "exp");
}

Var tanh(const Var& a) {
  Matrix out = a.value();
  for (double& v : out.data()) v = std::tanh(v);
  return Var::make(
      std::move(out), {a},
      [](const Var& out, const Var& g) {
        // d tanh = 1 - tanh^2, expressed on the recorded output
        return std::vector<Var>{mul(g, sub(ones_like(out.value()), mul(out, out)))};
      },
      "tanh");
}

Var relu(const Var& a) {
  Matrix out = a.value();
  for (double& v : out.data()) v = v > 0.0 ? v : 0.0;
  return Var::make(
      std::move(out), {a},
      [](const Var& out, const Var& g) {
        Matrix mask = out.parents()[0].value();
        for (double& v : mask.data()) v = v > 0.0 ? 1.0 : 0.0;
        return std::vector<Var>{mul(g, Var::constant(std::move(mask)))};
      },
      "relu");
}

Var concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat_rows: no inputs");
  const std::size_t cols = parts[0].cols();
  std::size_t rows = 0;
  for (const Var& p : parts) {
    if (p.cols() != cols) shape_fail("concat_rows", parts[0].value(), p.value());
    rows += p.rows();
  }
  Matrix out(rows, cols);
  std::vector<std::size_t> offsets;
  std::size_t r = 0;
  for (const Var& p : parts) {
    offsets.push_back(r);
    std::copy(p.value().data().begin(), p.value().data().end(), out.row_span(r).begin());
    r += p.rows();
  }
  return Var::make(
      std::move(out), std::vector<Var>(parts.begin(), parts.end()),
      [offsets](const Var& out, const Var& g) {
        const auto& p = out.parents();
        std::vector<Var> grads(p.size());
        for (std::size_t k = 0; k < p.size(); ++k) {
          if (!p[k].requires_grad()) continue;
          std::vector<std::size_t> idx(p[k].rows());
          for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = offsets[k] + i;
          grads[k] = gather_rows(g, idx);
        }
        return grads;
      },
      "concat_rows");
}

Var gather_rows(const Var& a, std::span<const std::size_t> rows) {
  const Matrix& x = a.value();
  Matrix out(rows.size(), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= x.rows()) throw ShapeError("gather_rows: row index out of range");
    std::copy(x.row_span(rows[i]).begin(), x.row_span(rows[i]).end(), out.row_span(i).begin());
  }
  std::vector<std::size_t> idx(rows.begin(), rows.end());
  const std::size_t n = x.rows();
  return Var::make(
      std::move(out), {a},
      [idx = std::move(idx), n](const Var&, const Var& g) {
        return std::vector<Var>{scatter_rows(g, idx, n)};
      },
      "gather_rows");
}

Var scatter_rows(const Var& a, std::span<const std::size_t> rows, std::size_t n_rows) {
  const Matrix& x = a.value();
  if (x.rows() != rows.size()) throw ShapeError("scatter_rows: index count mismatch");
  Matrix out(n_rows, x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= n_rows) throw ShapeError("scatter_rows: row index out of range");
    for (std::size_t j = 0; j < x.cols(); ++j) out(rows[i], j) += x(i, j);
  }
  std::vector<std::size_t> idx(rows.begin(), rows.end());
  return Var::make(
      std::move(out), {a},
      [idx = std::move(idx)](const Var&, const Var& g) {
        return std::vector<Var>{gather_rows(g, idx)};
      },
      "scatter_rows");
}

Var gather_cols(const Var& a, std::span<const std::size_t> cols) {
  const Matrix& x = a.value();
  Matrix out(x.rows(), cols.size());
  for (std::size_t j = 0; j < cols.size(); ++j) {
    if (cols[j] >= x.cols()) throw ShapeError("gather_cols: column index out of range");
    for (std::size_t i = 0; i < x.rows(); ++i) out(i, j) = x(i, cols[j]);
  }
  std::vector<std::size_t> idx(cols.begin(), cols.end());
  const std::size_t n = x.cols();
  return Var::make(
      std::move(out), {a},
      [idx = std::move(idx), n](const Var&, const Var& g) {
        return std::vector<Var>{scatter_cols(g, idx, n)};
      },
      "gather_cols");
}

Var scatter_cols(const Var& a, std::span<const std::size_t> cols, std::size_t n_cols) {
  const Matrix& x = a.value();
  if (x.cols() != cols.size()) throw ShapeError("scatter_cols: index count mismatch");
  Matrix out(x.rows(), n_cols);
  for (std::size_t j = 0; j < cols.size(); ++j) {
    if (cols[j] >= n_cols) throw ShapeError("scatter_cols: column index out of range");
    for (std::size_t i = 0; i < x.rows(); ++i) out(i, cols[j]) += x(i, j);
  }
  std::vector<std::size_t> idx(cols.begin(), cols.end());
  return Var::make(
      std::move(out), {a},
      [idx = std::move(idx)](const Var&, const Var& g) {
        return std::vector<Var>{gather_cols(g, idx)};
      },
      "scatter_cols");
}

Var sum_rows(const Var& a) {
  const Matrix& x = a.value();
  Matrix out(1, x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < x.cols(); ++j) out(0, j) += x(i, j);
  const std::size_t m = x.rows();
  return Var::make(
      std::move(out), {a},
      [m](const Var&, const Var& g) { return std::vector<Var>{broadcast_rows(g, m)}; },
      "sum_rows");
}

Var mean_rows(const Var& a) {
  const Matrix& x = a.value();
  if (x.rows() == 0) throw ShapeError("mean_rows: empty input");
  Matrix out(1, x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < x.cols(); ++j) out(0, j) += x(i, j);
  const std::size_t m = x.rows();
  for (double& v : out.data()) v /= static_cast<double>(m);
  return Var::make(
      std::move(out), {a},
      [m](const Var&, const Var& g) {
        return std::vector<Var>{scale(broadcast_rows(g, m), 1.0 / static_cast<double>(m))};
      },
      "mean_rows");
}

Var sum_cols(const Var& a) {
  const Matrix& x = a.value();
  Matrix out(x.rows(), 1);
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < x.cols(); ++j) out(i, 0) += x(i, j);
  const std::size_t n = x.cols();
  return Var::make(
      std::move(out), {a},
      [n](const Var&, const Var& g) { return std::vector<Var>{broadcast_cols(g, n)}; },
      "sum_cols");
}

Var sum_all(const Var& a) {
  const Matrix& x = a.value();
  double s = 0.0;
  for (double v : x.data()) s += v;
  const std::size_t r = x.rows(), c = x.cols();
  return Var::make(
      Matrix::scalar(s), {a},
      [r, c](const Var&, const Var& g) { return std::vector<Var>{expand(g, r, c)}; }, "sum_all");
}

Var broadcast_rows(const Var& a, std::size_t m) {
  const Matrix& x = a.value();
  if (x.rows() != 1) throw ShapeError("broadcast_rows: expected a row, got " + x.shape_string());
  Matrix out(m, x.cols());
  for (std::size_t i = 0; i < m; ++i)
    std::copy(x.data().begin(), x.data().end(), out.row_span(i).begin());
  return Var::make(
      std::move(out), {a},
      [](const Var&, const Var& g) { return std::vector<Var>{sum_rows(g)}; }, "broadcast_rows");
}

Var broadcast_cols(const Var& a, std::size_t n) {
  const Matrix& x = a.value();
  if (x.cols() != 1) throw ShapeError("broadcast_cols: expected a column, got " + x.shape_string());
  Matrix out(x.rows(), n);
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < n; ++j) out(i, j) = x(i, 0);
  return Var::make(
      std::move(out), {a},
      [](const Var&, const Var& g) { return std::vector<Var>{sum_cols(g)}; }, "broadcast_cols");
}

Var expand(const Var& a, std::size_t rows, std::size_t cols) {
  if (a.value().size() != 1) throw ShapeError("expand: expected 1x1, got " + a.value().shape_string());
  return Var::make(
      Matrix(rows, cols, a.value()[0]), {a},
      [](const Var&, const Var& g) { return std::vector<Var>{sum_all(g)}; }, "expand");
}

Var log_softmax(const Var& a) {
  const Matrix& x = a.value();
  Matrix out(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const auto row = x.row_span(i);
    const double mx = *std::max_element(row.begin(), row.end());
    double s = 0.0;
    for (double v : row) s += std::exp(v - mx);
    const double lse = mx + std::log(s);
    for (std::size_t j = 0; j < x.cols(); ++j) out(i, j) = x(i, j) - lse;
  }
  return Var::make(
      std::move(out), {a},
      [](const Var& out, const Var& g) {
        // g - softmax * rowsum(g)
        Var row_totals = broadcast_cols(sum_cols(g), out.cols());
        return std::vector<Var>{sub(g, mul(exp(out), row_totals))};
      },
      "log_softmax");
}

Var nll_loss(const Var& log_probs, std::span<const std::size_t> targets) {
  const Matrix& x = log_probs.value();
  if (x.rows() != targets.size() || x.rows() == 0) {
    throw ShapeError("nll_loss: " + std::to_string(targets.size()) + " targets for " +
                     x.shape_string() + " log-probabilities");
  }
  const double inv_n = 1.0 / static_cast<double>(x.rows());
  Matrix weights(x.rows(), x.cols());
  double loss = 0.0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    if (targets[i] >= x.cols()) throw ShapeError("nll_loss: target index out of range");
    loss -= x(i, targets[i]);
    weights(i, targets[i]) = -inv_n;
  }
  loss *= inv_n;
  return Var::make(
      Matrix::scalar(loss), {log_probs},
      [weights = std::move(weights)](const Var&, const Var& g) {
        return std::vector<Var>{mul(expand(g, weights.rows(), weights.cols()), Var::constant(weights))};
      },
      "nll_loss");
}

Var sq_euclidean(const Var& a, const Var& b) {
  const Matrix& x = a.value();
  const Matrix& y = b.value();
  if (x.cols() != y.cols()) shape_fail("sq_euclidean", x, y);
  Matrix out(x.rows(), y.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t j = 0; j < y.rows(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < x.cols(); ++k) {
        const double d = x(i, k) - y(j, k);
        s += d * d;
      }
      out(i, j) = s;
    }
  }
  return Var::make(
      std::move(out), {a, b},
      [](const Var& out, const Var& g) {
        const auto& p = out.parents();
        const std::size_t d = p[0].cols();
        Var ga, gb;
        // dD_ij/da_i = 2(a_i - b_j), dD_ij/db_j = 2(b_j - a_i)
        if (p[0].requires_grad()) {
          ga = scale(sub(mul(broadcast_cols(sum_cols(g), d), p[0]), matmul(g, p[1])), 2.0);
        }
        if (p[1].requires_grad()) {
          Var gt = transpose(g);
          gb = scale(sub(mul(broadcast_cols(sum_cols(gt), d), p[1]), matmul(gt, p[0])), 2.0);
        }
        return std::vector<Var>{ga, gb};
      },
      "sq_euclidean");
}

// ---------------------------------------------------------------------------
// Backward traversal

std::vector<Var> topological_order(const Var& root) {
  std::vector<Var> nodes;
  if (!root.requires_grad()) return nodes;
  std::unordered_map<const detail::Node*, bool> seen;
  std::vector<Var> stack{root};
  seen[root.node()] = true;
  while (!stack.empty()) {
    Var v = std::move(stack.back());
    stack.pop_back();
    for (const Var& p : v.parents()) {
      if (p.requires_grad() && !seen[p.node()]) {
        seen[p.node()] = true;
        stack.push_back(p);
      }
    }
    nodes.push_back(std::move(v));
  }
  // Ids grow with creation time, so every input precedes its consumers.
  std::sort(nodes.begin(), nodes.end(), [](const Var& l, const Var& r) { return l.id() < r.id(); });
  return nodes;
}

std::vector<Var> grad(const Var& loss, std::span<const Var> wrt, bool create_graph) {
  if (loss.value().size() != 1 || loss.rows() != 1) {
    throw ShapeError("grad: loss must be 1x1, got " + loss.value().shape_string());
  }
  GradModeGuard mode(create_graph);
  std::unordered_map<const detail::Node*, Var> adjoint;
  const std::vector<Var> order = topological_order(loss);
  adjoint[loss.node()] = Var::scalar(1.0);
  std::unordered_set<const detail::Node*> inputs;
  for (const Var& w : wrt) inputs.insert(w.node());

  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const Var& v = *it;
    auto found = adjoint.find(v.node());
    if (found == adjoint.end() || v.parents().empty() || inputs.contains(v.node())) continue;
    const Var g = found->second;
    std::vector<Var> parent_grads = v.node()->backward(v, g);
    const auto& parents = v.parents();
    for (std::size_t k = 0; k < parents.size(); ++k) {
      if (!parents[k].requires_grad() || !parent_grads[k].defined()) continue;
      auto [slot, inserted] = adjoint.try_emplace(parents[k].node(), parent_grads[k]);
      if (!inserted) slot->second = add(slot->second, parent_grads[k]);
    }
  }

  std::vector<Var> result;
  result.reserve(wrt.size());
  for (const Var& w : wrt) {
    auto found = adjoint.find(w.node());
    if (found != adjoint.end()) {
      result.push_back(found->second);
    } else {
      result.push_back(Var::constant(Matrix(w.rows(), w.cols())));
    }
  }
  return result;
}

void backward(const Var& loss) {
  std::vector<Var> leaves;
  for (const Var& v : topological_order(loss)) {
    if (v.is_leaf()) leaves.push_back(v);
  }
  const std::vector<Var> grads = grad(loss, leaves, false);
  for (std::size_t i = 0; i < leaves.size(); ++i) {
    Matrix acc = leaves[i].grad();
    const Matrix& g = grads[i].value();
    for (std::size_t k = 0; k < acc.size(); ++k) acc[k] += g[k];
    leaves[i].node()->grad = std::move(acc);
  }
}

}  // namespace metawsd::ad
