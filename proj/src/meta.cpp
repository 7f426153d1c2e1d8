#include "metawsd/meta.hpp"

#include <stdexcept>
#include <string>

namespace metawsd {

std::string_view method_name(Method m) {
  switch (m) {
    case Method::protonet: return "protonet";
    case Method::fomaml: return "fomaml";
    case Method::maml: return "maml";
    case Method::protofomaml: return "protofomaml";
    case Method::protomaml: return "protomaml";
    case Method::majority: return "majority";
    case Method::nearest_neighbor: return "nearest_neighbor";
    case Method::ne_baseline: return "ne_baseline";
  }
  return "?";
}

Method parse_method(std::string_view name) {
  for (Method m : {Method::protonet, Method::fomaml, Method::maml, Method::protofomaml,
                   Method::protomaml, Method::majority, Method::nearest_neighbor, Method::ne_baseline}) {
    if (method_name(m) == name) return m;
  }
  throw std::invalid_argument("unknown method '" + std::string(name) + "'");
}

bool is_meta_learner(Method m) {
  return m == Method::protonet || m == Method::fomaml || m == Method::maml ||
         m == Method::protofomaml || m == Method::protomaml;
}

bool is_second_order(Method m) { return m == Method::maml || m == Method::protomaml; }

bool has_trainable_model(Method m) { return is_meta_learner(m) || m == Method::ne_baseline; }

MetaConfig MetaConfig::preset(Method m) {
  MetaConfig c;
  c.method = m;
  switch (m) {
    case Method::protonet:
      c.meta_lr = 1e-3;
      c.batch_size = 1;
      c.inner_steps = 0;
      break;
    case Method::fomaml:
    case Method::maml:
      c.output_lr = 1e-1;
      c.learner_lr = 1e-2;
      c.meta_lr = 5e-3;
      c.inner_steps = 7;
      c.batch_size = 16;
      break;
    case Method::protofomaml:
    case Method::protomaml:
      c.output_lr = 1e-3;
      c.learner_lr = 1e-3;
      c.meta_lr = 5e-4;
      c.inner_steps = 7;
      c.batch_size = 16;
      break;
    case Method::ne_baseline:
      c.output_lr = 1e-1;
      c.learner_lr = 1e-3;
      c.inner_steps = 7;
      c.batch_size = 1;
      break;
    case Method::majority:
    case Method::nearest_neighbor:
      c.inner_steps = 0;
      break;
  }
  c.create_graph = is_second_order(m);
  return c;
}

std::string MetaConfig::display_name() const {
  return (ef ? "ef-" : "") + std::string(method_name(method));
}

void MetaConfig::validate() const {
  auto fail = [](const std::string& msg) { throw std::invalid_argument(msg); };
  if (batch_size < 1) fail("batch_size must be >= 1");
  if (patience < 1) fail("patience must be >= 1");
  if (support_size < 1) fail("S must be >= 1");
  if (words_per_episode < 1 || words_per_episode > support_size) fail("r must satisfy 1 <= r <= S");
  if (hidden_dim < 1) fail("hidden_dim must be >= 1");
  if (!(learner_lr >= 0.0) || !(output_lr >= 0.0) || !(meta_lr >= 0.0)) {
    fail("learning rates must be non-negative");
  }
  if (create_graph && !is_second_order(method)) {
    fail("create_graph requires method maml or protomaml, got " + std::string(method_name(method)));
  }
  if (is_second_order(method) && !create_graph) {
    fail(std::string(method_name(method)) + " is second-order; use the first-order method instead");
  }
  if (ef && !is_meta_learner(method)) fail("ef- applies only to meta-learning methods");
  if (seeds.empty()) fail("at least one seed is required");
}

TaskData materialize(const Episode& episode, const Corpus& corpus) {
  const std::size_t dim = corpus.embedding_dim();
  auto fill = [&](const std::vector<EpisodeItem>& items, Matrix& x, std::vector<std::size_t>& y) {
    x = Matrix(items.size(), dim);
    y.resize(items.size());
    for (std::size_t i = 0; i < items.size(); ++i) {
      const auto row = corpus.embedding(items[i].instance);
      std::copy(row.begin(), row.end(), x.row_span(i).begin());
      y[i] = items[i].label;
    }
  };
  TaskData t;
  fill(episode.support, t.support_x, t.support_y);
  fill(episode.query, t.query_x, t.query_y);
  t.n_classes = episode.n_classes();
  return t;
}

std::vector<Prototype> Prototypes::to_list() const {
  std::vector<Prototype> out;
  const Matrix& m = means.value();
  for (std::size_t c = 0; c < m.rows(); ++c) {
    const auto row = m.row_span(c);
    out.push_back({c, {row.begin(), row.end()}, counts[c]});
  }
  return out;
}

Prototypes compute_prototypes(const ad::Var& representations, std::span<const std::size_t> labels,
                              std::size_t n_classes) {
  if (labels.size() != representations.rows()) {
    throw ShapeError("compute_prototypes: label count does not match representations");
  }
  std::vector<std::vector<std::size_t>> members(n_classes);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= n_classes) throw std::invalid_argument("compute_prototypes: label out of range");
    members[labels[i]].push_back(i);
  }
  std::vector<ad::Var> rows;
  Prototypes p;
  for (std::size_t c = 0; c < n_classes; ++c) {
    if (members[c].empty()) {
      throw std::invalid_argument("compute_prototypes: class " + std::to_string(c) + " has no support items");
    }
    rows.push_back(ad::mean_rows(ad::gather_rows(representations, members[c])));
    p.counts.push_back(members[c].size());
  }
  p.means = ad::concat_rows(rows);
  return p;
}

ad::Var protonet_logits(const ad::Var& prototype_means, const ad::Var& query_representations) {
  return ad::scale(ad::sq_euclidean(query_representations, prototype_means), -1.0);
}

ad::Var protonet_predict(const ad::Var& prototype_means, const ad::Var& query_representations) {
  if (prototype_means.rows() < 2) throw std::invalid_argument("protonet_predict: need >= 2 prototypes");
  return ad::log_softmax(protonet_logits(prototype_means, query_representations));
}

TaskHead protomaml_init_head(const ad::Var& prototype_means, bool attached) {
  ad::Var weight = ad::transpose(ad::scale(prototype_means, 2.0));
  ad::Var bias = ad::transpose(ad::scale(ad::sum_cols(ad::mul(prototype_means, prototype_means)), -1.0));
  if (attached) return {weight, bias};
  return {ad::Var::parameter(weight.value()), ad::Var::parameter(bias.value())};
}

ad::Var classification_loss(const SharedBlock& shared, const TaskHead& head, const Matrix& x,
                            std::span<const std::size_t> y) {
  ad::Var hidden = forward_shared(shared, ad::Var::constant(x));
  return ad::nll_loss(ad::log_softmax(head_logits(head, hidden)), y);
}

Adapted inner_loop(const InnerLoss& loss_fn, const SharedBlock& shared, const TaskHead& head,
                   const InnerOptions& opt) {
  Adapted a{opt.create_graph ? shared : shared.clone_leaves(),
            opt.create_graph ? head : head.clone_leaves(), {}};
  for (std::size_t step = 0; step < opt.steps; ++step) {
    ad::Var loss = loss_fn(a.shared, a.head);
    a.support_losses.push_back(loss.item());

    std::vector<ad::Var> params = a.head.parameters();
    if (!opt.adapt_top_only) {
      auto sp = a.shared.parameters();
      params.insert(params.begin(), sp.begin(), sp.end());
    }
    const std::vector<ad::Var> grads = ad::grad(loss, params, opt.create_graph);
    const std::size_t n_shared = opt.adapt_top_only ? 0 : 2;

    std::vector<ad::Var> updated;
    {
      ad::GradModeGuard mode(opt.create_graph);
      auto upd_shared = sgd_step(std::span(params).first(n_shared), std::span(grads).first(n_shared),
                                 opt.learner_lr);
      auto upd_head = sgd_step(std::span(params).subspan(n_shared), std::span(grads).subspan(n_shared),
                               opt.output_lr);
      updated = std::move(upd_shared);
      updated.insert(updated.end(), upd_head.begin(), upd_head.end());
    }
    if (!opt.create_graph) {
      for (ad::Var& v : updated) v = ad::Var::parameter(v.value());
    }
    if (!opt.adapt_top_only) a.shared = a.shared.with_parameters(std::span(updated).first(2));
    a.head = a.head.with_parameters(std::span(updated).subspan(n_shared));
  }
  return a;
}

Adapted inner_adapt(const TaskData& task, const SharedBlock& shared, const TaskHead& head,
                    const InnerOptions& options) {
  return inner_loop(
      [&task](const SharedBlock& s, const TaskHead& h) {
        return classification_loss(s, h, task.support_x, task.support_y);
      },
      shared, head, options);
}

InnerOptions inner_options(const MetaConfig& config, bool create_graph) {
  return {config.learner_lr, config.output_lr, config.inner_steps, create_graph, config.adapt_top_only};
}

namespace {

TaskHead initial_head(const MetaConfig& config, const TaskData& task, const SharedBlock& theta,
                      Rng& head_rng, bool attached) {
  if (config.method == Method::fomaml || config.method == Method::maml) {
    return init_head(theta.hidden_dim(), task.n_classes, head_rng);
  }
  if (attached) {
    ad::Var reps = forward_shared(theta, ad::Var::constant(task.support_x));
    return protomaml_init_head(compute_prototypes(reps, task.support_y, task.n_classes).means, true);
  }
  ad::NoGradGuard no_grad;
  ad::Var reps = forward_shared(theta, ad::Var::constant(task.support_x));
  return protomaml_init_head(compute_prototypes(reps, task.support_y, task.n_classes).means, false);
}

std::vector<Matrix> values_of(const std::vector<ad::Var>& vars) {
  std::vector<Matrix> out;
  for (const ad::Var& v : vars) out.push_back(v.value());
  return out;
}

}  // namespace

MetaGradient task_meta_gradient(const MetaConfig& config, const TaskData& task,
                                const SharedBlock& theta_in, Rng& head_rng) {
  const SharedBlock theta = theta_in.clone_leaves();
  const std::vector<ad::Var> theta_params = theta.parameters();

  switch (config.method) {
    case Method::protonet: {
      ad::Var support = forward_shared(theta, ad::Var::constant(task.support_x));
      ad::Var query = forward_shared(theta, ad::Var::constant(task.query_x));
      Prototypes protos = compute_prototypes(support, task.support_y, task.n_classes);
      ad::Var loss = ad::nll_loss(protonet_predict(protos.means, query), task.query_y);
      return {values_of(ad::grad(loss, theta_params)), loss.item()};
    }
    case Method::maml:
    case Method::protomaml: {
      // Second order: keep the whole inner loop on the graph and differentiate
      // the query loss with respect to the initial theta.
      TaskHead head = initial_head(config, task, theta, head_rng, /*attached=*/true);
      Adapted a = inner_adapt(task, theta, head, inner_options(config, true));
      ad::Var loss = classification_loss(a.shared, a.head, task.query_x, task.query_y);
      return {values_of(ad::grad(loss, theta_params)), loss.item()};
    }
    case Method::fomaml:
    case Method::protofomaml: {
      TaskHead head = initial_head(config, task, theta, head_rng, /*attached=*/false);
      Adapted a = inner_adapt(task, theta, head, inner_options(config, false));
      ad::Var loss = classification_loss(a.shared, a.head, task.query_x, task.query_y);
      // First order: gradient at the adapted parameters; head gradient dropped.
      return {values_of(ad::grad(loss, a.shared.parameters())), loss.item()};
    }
    default:
      throw std::invalid_argument("task_meta_gradient: " + std::string(method_name(config.method)) +
                                  " is not a meta-learner");
  }
}

MetaGradient batch_meta_gradient(const MetaConfig& config, std::span<const TaskData> batch,
                                 const SharedBlock& theta, Rng& head_rng) {
  MetaGradient total;
  for (const TaskData& task : batch) {
    MetaGradient g = task_meta_gradient(config, task, theta, head_rng);
    if (total.grads.empty()) {
      total.grads = std::move(g.grads);
    } else {
      for (std::size_t p = 0; p < total.grads.size(); ++p) {
        for (std::size_t k = 0; k < total.grads[p].size(); ++k) total.grads[p][k] += g.grads[p][k];
      }
    }
    total.query_loss += g.query_loss;
  }
  return total;
}

double outer_step(const MetaConfig& config, std::span<const TaskData> batch, SharedBlock& theta,
                  Adam& optimizer, Rng& head_rng) {
  if (batch.empty()) return 0.0;
  MetaGradient g = batch_meta_gradient(config, batch, theta, head_rng);
  std::vector<ad::Var> params = theta.parameters();
  optimizer.step(params, g.grads);
  return g.query_loss / static_cast<double>(batch.size());
}

std::vector<std::size_t> predict_episode(const MetaConfig& config, const TaskData& task,
                                         const SharedBlock& theta, Rng& head_rng) {
  if (config.method == Method::protonet) {
    ad::NoGradGuard no_grad;
    ad::Var support = forward_shared(theta, ad::Var::constant(task.support_x));
    ad::Var query = forward_shared(theta, ad::Var::constant(task.query_x));
    Prototypes protos = compute_prototypes(support, task.support_y, task.n_classes);
    return argmax_rows(protonet_logits(protos.means, query).value());
  }
  if (!is_meta_learner(config.method)) {
    throw std::invalid_argument("predict_episode: " + std::string(method_name(config.method)) +
                                " is not a meta-learner");
  }
  // Test-time adaptation never needs second-order terms.
  TaskHead head = initial_head(config, task, theta, head_rng, /*attached=*/false);
  Adapted a = inner_adapt(task, theta, head, inner_options(config, false));
  ad::NoGradGuard no_grad;
  ad::Var hidden = forward_shared(a.shared, ad::Var::constant(task.query_x));
  return argmax_rows(head_logits(a.head, hidden).value());
}

}  // namespace metawsd
