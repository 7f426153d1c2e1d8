#include "metawsd/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

namespace metawsd {

std::vector<std::size_t> majority_sense_predict(const Episode& episode) {
  if (episode.support.empty()) throw std::invalid_argument("majority_sense_predict: empty support");
  std::vector<std::size_t> counts(episode.n_classes(), 0);
  for (const EpisodeItem& it : episode.support) ++counts.at(it.label);
  std::size_t best = 0;
  for (std::size_t l = 1; l < counts.size(); ++l) {
    if (counts[l] > counts[best] ||
        (counts[l] == counts[best] && episode.classes[l] < episode.classes[best])) {
      best = l;
    }
  }
  return std::vector<std::size_t>(episode.query.size(), best);
}

std::vector<std::size_t> nearest_neighbor_predict(const TaskData& task) {
  auto norms = [](const Matrix& m) {
    std::vector<double> out(m.rows());
    for (std::size_t i = 0; i < m.rows(); ++i) {
      double s = 0.0;
      for (double v : m.row_span(i)) s += v * v;
      if (s == 0.0) throw std::invalid_argument("nearest_neighbor_predict: zero-norm embedding");
      out[i] = std::sqrt(s);
    }
    return out;
  };
  if (task.support_x.rows() == 0) throw std::invalid_argument("nearest_neighbor_predict: empty support");
  const auto sn = norms(task.support_x);
  const auto qn = norms(task.query_x);
  std::vector<std::size_t> pred(task.query_x.rows());
  for (std::size_t q = 0; q < task.query_x.rows(); ++q) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t arg = 0;
    for (std::size_t s = 0; s < task.support_x.rows(); ++s) {
      double dot = 0.0;
      for (std::size_t k = 0; k < task.support_x.cols(); ++k) dot += task.query_x(q, k) * task.support_x(s, k);
      const double distance = 1.0 - dot / (qn[q] * sn[s]);
      if (distance < best) {
        best = distance;
        arg = s;
      }
    }
    pred[q] = task.support_y[arg];
  }
  return pred;
}

ad::Var masked_log_softmax(const ad::Var& logits, std::span<const std::size_t> active) {
  return ad::log_softmax(ad::gather_cols(logits, active));
}

Matrix masked_probabilities(const Matrix& logits, std::span<const std::size_t> active) {
  ad::NoGradGuard no_grad;
  const Matrix lp = masked_log_softmax(ad::Var::constant(logits), active).value();
  Matrix out(logits.rows(), logits.cols(), 0.0);
  for (std::size_t i = 0; i < lp.rows(); ++i)
    for (std::size_t j = 0; j < active.size(); ++j) out(i, active[j]) = std::exp(lp(i, j));
  return out;
}

std::optional<std::size_t> NeModel::index_of(const SenseKey& key) const {
  auto it = std::lower_bound(senses.begin(), senses.end(), key);
  if (it == senses.end() || *it != key) return std::nullopt;
  return static_cast<std::size_t>(it - senses.begin());
}

NeModel ne_init(const MetaConfig& config, std::size_t input_dim, std::span<const Episode> train_pool,
                std::uint64_t seed) {
  std::set<SenseKey> all;
  for (const Episode& ep : train_pool) all.insert(ep.classes.begin(), ep.classes.end());
  NeModel m;
  m.shared = initial_theta(config, input_dim, seed);
  m.senses.assign(all.begin(), all.end());
  Rng rng = make_rng(seed, 5);
  if (m.senses.size() >= 2) {
    TaskHead h = init_head(config.hidden_dim, m.senses.size(), rng);
    m.head_weight = h.weight;
    m.head_bias = h.bias;
  } else {
    m.head_weight = ad::Var::parameter(Matrix(config.hidden_dim, m.senses.size()));
    m.head_bias = ad::Var::parameter(Matrix(1, m.senses.size()));
  }
  return m;
}

ad::Var ne_batch_loss(const NeModel& model, const Matrix& x, std::span<const std::size_t> global_labels) {
  std::set<std::size_t> present(global_labels.begin(), global_labels.end());
  const std::vector<std::size_t> active(present.begin(), present.end());
  std::vector<std::size_t> local(global_labels.size());
  for (std::size_t i = 0; i < local.size(); ++i) {
    local[i] = static_cast<std::size_t>(std::lower_bound(active.begin(), active.end(), global_labels[i]) -
                                        active.begin());
  }
  ad::Var hidden = forward_shared(model.shared, ad::Var::constant(x));
  ad::Var logits = ad::add(ad::matmul(hidden, model.head_weight), model.head_bias);
  return ad::nll_loss(masked_log_softmax(logits, active), local);
}

namespace {

struct NeBatch {
  Matrix x;
  std::vector<std::size_t> labels;
};

NeBatch ne_batch(const Episode& ep, const Corpus& corpus, const NeModel& model) {
  NeBatch b;
  const std::size_t n = ep.support.size() + ep.query.size();
  b.x = Matrix(n, corpus.embedding_dim());
  std::size_t row = 0;
  for (const auto* items : {&ep.support, &ep.query}) {
    for (const EpisodeItem& it : *items) {
      const auto e = corpus.embedding(it.instance);
      std::copy(e.begin(), e.end(), b.x.row_span(row++).begin());
      b.labels.push_back(*model.index_of(ep.classes[it.label]));
    }
  }
  return b;
}

NeModel copy_model(const NeModel& m) {
  return {m.shared.clone_leaves(), ad::Var::parameter(m.head_weight.value()),
          ad::Var::parameter(m.head_bias.value()), m.senses};
}

}  // namespace

NeTrainResult ne_train(const MetaConfig& config, const Corpus& corpus,
                       std::span<const Episode> train_pool, std::span<const Episode> val_episodes,
                       std::uint64_t seed) {
  config.validate();
  NeTrainResult result;
  result.model = ne_init(config, corpus.embedding_dim(), train_pool, seed);
  if (train_pool.empty() || config.max_epochs == 0) return result;

  std::vector<NeBatch> batches;
  for (const Episode& ep : train_pool) batches.push_back(ne_batch(ep, corpus, result.model));

  NeModel model = copy_model(result.model);
  Adam optimizer(StepDecay{config.learner_lr, config.decay_factor, config.decay_every});
  Rng order_rng = make_rng(seed, 2);
  double best_val = -std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    shuffle(batches, order_rng);
    double loss_sum = 0.0;
    for (const NeBatch& b : batches) {
      ad::Var loss = ne_batch_loss(model, b.x, b.labels);
      std::vector<ad::Var> params = model.parameters();
      const auto grads = ad::grad(loss, params);
      std::vector<Matrix> g;
      for (const ad::Var& v : grads) g.push_back(v.value());
      optimizer.step(params, g);
      loss_sum += loss.item();
    }
    const double val = mean_macro_f1(ne_test(config, corpus, model, val_episodes, seed));
    result.log.push_back({epoch, loss_sum / static_cast<double>(batches.size()), val, optimizer.current_lr()});
    if (val > best_val) {
      best_val = val;
      result.model = copy_model(model);
      result.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= config.patience) {
      break;
    }
  }
  return result;
}

std::vector<std::size_t> ne_finetune_and_predict(const NeModel& model, const Episode& episode,
                                                 const TaskData& task, const MetaConfig& config,
                                                 Rng& rng) {
  const std::size_t hidden = model.shared.hidden_dim();
  const std::size_t n_global = model.senses.size();
  const double bound = 1.0 / std::sqrt(static_cast<double>(hidden));
  const Matrix& gw = model.head_weight.value();
  const Matrix& gb = model.head_bias.value();

  // Column of each episode class in the fine-tuning head.
  std::vector<std::optional<std::size_t>> global(episode.n_classes());
  std::size_t unseen = 0;
  for (std::size_t c = 0; c < episode.n_classes(); ++c) {
    global[c] = model.index_of(episode.classes[c]);
    if (!global[c]) ++unseen;
  }

  const bool masked = config.ne_mask_test;
  const std::size_t width = masked ? episode.n_classes() : n_global + unseen;
  Matrix w(hidden, width);
  Matrix b(1, width);
  std::vector<std::size_t> column(episode.n_classes());
  std::size_t next_fresh = masked ? 0 : n_global;
  if (!masked) {
    for (std::size_t h = 0; h < hidden; ++h)
      for (std::size_t j = 0; j < n_global; ++j) w(h, j) = gw(h, j);
    for (std::size_t j = 0; j < n_global; ++j) b(0, j) = gb(0, j);
  }
  for (std::size_t c = 0; c < episode.n_classes(); ++c) {
    if (global[c]) {
      column[c] = masked ? c : *global[c];
      if (masked) {
        for (std::size_t h = 0; h < hidden; ++h) w(h, c) = gw(h, *global[c]);
        b(0, c) = gb(0, *global[c]);
      }
    } else {
      column[c] = masked ? c : next_fresh++;
      for (std::size_t h = 0; h < hidden; ++h) w(h, column[c]) = uniform(rng, -bound, bound);
      b(0, column[c]) = 0.0;
    }
  }

  TaskData local = task;
  for (std::size_t& y : local.support_y) y = column[y];
  for (std::size_t& y : local.query_y) y = column[y];
  local.n_classes = width;

  TaskHead head{ad::Var::parameter(std::move(w)), ad::Var::parameter(std::move(b))};
  Adapted a = inner_adapt(local, model.shared, head, inner_options(config, false));
  ad::NoGradGuard no_grad;
  ad::Var hidden_q = forward_shared(a.shared, ad::Var::constant(task.query_x));
  const auto cols = argmax_rows(head_logits(a.head, hidden_q).value());

  std::vector<std::size_t> pred(cols.size(), episode.n_classes());
  for (std::size_t i = 0; i < cols.size(); ++i) {
    for (std::size_t c = 0; c < column.size(); ++c) {
      if (column[c] == cols[i]) pred[i] = c;
    }
  }
  return pred;
}

std::vector<EpisodeScore> ne_test(const MetaConfig& config, const Corpus& corpus, const NeModel& model,
                                  std::span<const Episode> episodes, std::uint64_t seed) {
  std::vector<EpisodeScore> out;
  for (const Episode& ep : episodes) {
    const TaskData task = materialize(ep, corpus);
    Rng rng = episode_rng(seed, ep.id);
    const auto pred = ne_finetune_and_predict(model, ep, task, config, rng);
    out.push_back(score_episode(ep, task.query_y, pred));
  }
  return out;
}

std::vector<std::size_t> ef_wrap(const MetaConfig& config, const TaskData& task, std::size_t input_dim,
                                 std::uint64_t seed, Rng& head_rng) {
  const SharedBlock fresh = initial_theta(config, input_dim, seed);
  return predict_episode(config, task, fresh, head_rng);
}

std::vector<EpisodeScore> baseline_test(Method method, const Corpus& corpus,
                                        std::span<const Episode> episodes) {
  std::vector<EpisodeScore> out;
  for (const Episode& ep : episodes) {
    const TaskData task = materialize(ep, corpus);
    std::vector<std::size_t> pred;
    if (method == Method::majority) {
      pred = majority_sense_predict(ep);
    } else if (method == Method::nearest_neighbor) {
      pred = nearest_neighbor_predict(task);
    } else {
      throw std::invalid_argument("baseline_test: " + std::string(method_name(method)) +
                                  " needs a trained model");
    }
    out.push_back(score_episode(ep, task.query_y, pred));
  }
  return out;
}

}  // namespace metawsd
