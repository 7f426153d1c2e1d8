#pragma once

// Reverse-mode automatic differentiation over dense matrices.
//
// Every primitive records its inputs and a backward rule. Backward rules are
// written in terms of the same primitives, so running them with recording
// enabled (create_graph = true) yields gradients that are themselves
// differentiable. That is all second-order MAML needs.

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "metawsd/matrix.hpp"

namespace metawsd::ad {

class Var;

namespace detail {

using BackwardFn = std::function<std::vector<Var>(const Var& out, const Var& grad_out)>;

struct Node {
  std::uint64_t id = 0;
  Matrix value;
  bool requires_grad = false;
  std::vector<Var> parents;
  BackwardFn backward;
  std::string_view op = "leaf";
  Matrix grad;  // accumulator, leaves only
};

}  // namespace detail

/// Handle to a node of the computation graph. Copies share the node.
class Var {
 public:
  Var() = default;

  static Var constant(Matrix value);
  static Var parameter(Matrix value);
  static Var scalar(double v) { return constant(Matrix::scalar(v)); }

  bool defined() const noexcept { return node_ != nullptr; }
  const Matrix& value() const { return node_->value; }
  std::size_t rows() const { return node_->value.rows(); }
  std::size_t cols() const { return node_->value.cols(); }
  double item() const;
  bool requires_grad() const { return node_ && node_->requires_grad; }
  bool is_leaf() const { return node_ && node_->parents.empty(); }
  std::uint64_t id() const { return node_->id; }
  std::string_view op() const { return node_->op; }
  const std::vector<Var>& parents() const { return node_->parents; }

  /// Accumulated gradient from backward(); zeros of value's shape if none.
  const Matrix& grad() const;
  void zero_grad();

  /// Same value, cut from the graph, no gradient.
  Var detach() const;
  /// Overwrite the value of a leaf in place (optimizer updates).
  void assign(Matrix value);

  // internal
  static Var make(Matrix value, std::vector<Var> parents, detail::BackwardFn backward,
                  std::string_view op);
  detail::Node* node() const { return node_.get(); }

 private:
  explicit Var(std::shared_ptr<detail::Node> n) : node_(std::move(n)) {}
  std::shared_ptr<detail::Node> node_;
};

/// Whether new ops record their inputs. Thread-local; enabled by default.
bool grad_enabled() noexcept;

class GradModeGuard {
 public:
  explicit GradModeGuard(bool enabled);
  ~GradModeGuard();
  GradModeGuard(const GradModeGuard&) = delete;
  GradModeGuard& operator=(const GradModeGuard&) = delete;

 private:
  bool previous_;
};

struct NoGradGuard : GradModeGuard {
  NoGradGuard() : GradModeGuard(false) {}
};

// Primitives. `add`/`sub` broadcast a 1 x n right operand over rows.
Var matmul(const Var& a, const Var& b);
Var transpose(const Var& a);
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double s);
Var exp(const Var& a);
Var tanh(const Var& a);
Var relu(const Var& a);
Var concat_rows(std::span<const Var> parts);
Var gather_rows(const Var& a, std::span<const std::size_t> rows);
Var scatter_rows(const Var& a, std::span<const std::size_t> rows, std::size_t n_rows);
Var gather_cols(const Var& a, std::span<const std::size_t> cols);
Var scatter_cols(const Var& a, std::span<const std::size_t> cols, std::size_t n_cols);
Var mean_rows(const Var& a);           // m x n -> 1 x n
Var sum_rows(const Var& a);            // m x n -> 1 x n
Var sum_cols(const Var& a);            // m x n -> m x 1
Var sum_all(const Var& a);             // -> 1 x 1
Var broadcast_rows(const Var& a, std::size_t m);  // 1 x n -> m x n
Var broadcast_cols(const Var& a, std::size_t n);  // m x 1 -> m x n
Var expand(const Var& a, std::size_t rows, std::size_t cols);  // 1 x 1 -> rows x cols
Var log_softmax(const Var& a);         // row-wise
/// Mean negative log-likelihood of `targets` under row-wise log-probabilities.
Var nll_loss(const Var& log_probs, std::span<const std::size_t> targets);
/// Pairwise squared Euclidean distances: (n x d, k x d) -> n x k.
Var sq_euclidean(const Var& a, const Var& b);

inline Var operator+(const Var& a, const Var& b) { return add(a, b); }
inline Var operator-(const Var& a, const Var& b) { return sub(a, b); }
inline Var operator*(const Var& a, const Var& b) { return mul(a, b); }
inline Var operator*(double s, const Var& a) { return scale(a, s); }

/// Partial derivatives of a scalar `loss` with respect to `wrt`, treating the
/// `wrt` nodes as independent inputs: adjoints are not propagated past them,
/// so if one is computed from another only the direct path counts. Inputs the
/// loss does not depend on get zero gradients. With create_graph the backward
/// pass is recorded and the results can be differentiated again.
std::vector<Var> grad(const Var& loss, std::span<const Var> wrt, bool create_graph = false);

/// Accumulates d loss / d leaf into every requires_grad leaf's grad().
void backward(const Var& loss);

/// Nodes reachable from `root` through requires_grad edges, inputs first.
std::vector<Var> topological_order(const Var& root);

}  // namespace metawsd::ad
