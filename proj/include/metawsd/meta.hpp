#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "metawsd/autodiff.hpp"
#include "metawsd/corpus.hpp"
#include "metawsd/episodes.hpp"
#include "metawsd/nn.hpp"
#include "metawsd/optim.hpp"

namespace metawsd {

enum class Method {
  protonet,
  fomaml,
  maml,
  protofomaml,
  protomaml,
  majority,
  nearest_neighbor,
  ne_baseline,
};

std::string_view method_name(Method m);
Method parse_method(std::string_view name);  // without the "ef-" prefix
bool is_meta_learner(Method m);               // protonet and the (Proto)(FO)MAML family
bool is_second_order(Method m);               // maml, protomaml
bool has_trainable_model(Method m);           // meta-learners and ne_baseline

struct MetaConfig {
  Method method = Method::protonet;
  bool ef = false;  // meta-test only, from a fresh random model
  std::size_t support_size = 8;
  std::size_t words_per_episode = 4;
  double learner_lr = 1e-3;  // alpha
  double output_lr = 1e-1;   // gamma
  double meta_lr = 1e-3;     // beta
  std::size_t inner_steps = 7;
  std::size_t batch_size = 1;
  std::size_t max_epochs = 30;
  std::size_t patience = 2;
  bool create_graph = false;
  bool adapt_top_only = false;
  std::size_t hidden_dim = 256;
  Activation activation = Activation::relu;
  std::size_t decay_every = 500;
  double decay_factor = 0.5;
  bool ne_mask_test = true;
  std::vector<std::uint64_t> seeds{42, 43, 44, 45, 46};

  /// Learning rates, m, batch size and second-order flag for `m`.
  static MetaConfig preset(Method m);
  std::string display_name() const;
  /// Throws std::invalid_argument on inconsistent settings.
  void validate() const;
  StepDecay meta_schedule() const { return {meta_lr, decay_factor, decay_every}; }
};

/// Episode items resolved to target-token embedding rows.
struct TaskData {
  Matrix support_x;
  std::vector<std::size_t> support_y;
  Matrix query_x;
  std::vector<std::size_t> query_y;
  std::size_t n_classes = 0;
};

TaskData materialize(const Episode& episode, const Corpus& corpus);

struct Prototype {
  std::size_t label = 0;
  std::vector<double> mean;
  std::size_t support_count = 0;
};

/// Class means of support representations; `means` row c is class c.
struct Prototypes {
  ad::Var means;
  std::vector<std::size_t> counts;

  std::vector<Prototype> to_list() const;
};

Prototypes compute_prototypes(const ad::Var& representations, std::span<const std::size_t> labels,
                              std::size_t n_classes);

/// Negative squared Euclidean distance of each query row to each prototype.
ad::Var protonet_logits(const ad::Var& prototype_means, const ad::Var& query_representations);
/// Row-wise log-softmax of protonet_logits.
ad::Var protonet_predict(const ad::Var& prototype_means, const ad::Var& query_representations);

/// Linear head equivalent to the prototype classifier: w_c = 2 mu_c,
/// b_c = -mu_c . mu_c. When `attached`, the head stays a function of the
/// prototypes in the graph; otherwise it is fresh leaves.
TaskHead protomaml_init_head(const ad::Var& prototype_means, bool attached);

struct InnerOptions {
  double learner_lr = 0.0;
  double output_lr = 0.0;
  std::size_t steps = 0;
  bool create_graph = false;
  bool adapt_top_only = false;
};

struct Adapted {
  SharedBlock shared;
  TaskHead head;
  std::vector<double> support_losses;
};

using InnerLoss = std::function<ad::Var(const SharedBlock&, const TaskHead&)>;

/// `steps` full-batch SGD steps on `loss`: shared parameters at learner_lr,
/// head at output_lr. Without create_graph the results are fresh leaves.
Adapted inner_loop(const InnerLoss& loss, const SharedBlock& shared, const TaskHead& head,
                   const InnerOptions& options);

/// Mean cross-entropy of the head's predictions on the given items.
ad::Var classification_loss(const SharedBlock& shared, const TaskHead& head, const Matrix& x,
                            std::span<const std::size_t> y);

Adapted inner_adapt(const TaskData& task, const SharedBlock& shared, const TaskHead& head,
                    const InnerOptions& options);

InnerOptions inner_options(const MetaConfig& config, bool create_graph);

struct MetaGradient {
  std::vector<Matrix> grads;  // aligned with SharedBlock::parameters()
  double query_loss = 0.0;    // summed over tasks
};

/// Outer gradient of one task's query loss for config.method. Task heads
/// (random methods) draw from `head_rng`.
MetaGradient task_meta_gradient(const MetaConfig& config, const TaskData& task,
                                const SharedBlock& theta, Rng& head_rng);

/// Sum of task gradients, reduced in batch order.
MetaGradient batch_meta_gradient(const MetaConfig& config, std::span<const TaskData> batch,
                                 const SharedBlock& theta, Rng& head_rng);

/// One Adam step on theta from the summed query losses; returns the mean
/// query loss of the batch.
double outer_step(const MetaConfig& config, std::span<const TaskData> batch, SharedBlock& theta,
                  Adam& optimizer, Rng& head_rng);

/// Query predictions after the method's test-time procedure (ProtoNet:
/// prototypes only; others: adapt on the support set, then classify).
std::vector<std::size_t> predict_episode(const MetaConfig& config, const TaskData& task,
                                         const SharedBlock& theta, Rng& head_rng);

}  // namespace metawsd
