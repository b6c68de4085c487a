#include "mimlfast/training.hpp"

#include <cmath>
#include <limits>

#include "mimlfast/data_io.hpp"
#include "mimlfast/evaluation.hpp"
#include "mimlfast/objective.hpp"

namespace mimlfast {

double step_size(const TrainConfig& cfg, std::uint64_t t) {
  return cfg.gamma0 / (1.0 + cfg.eta * cfg.gamma0 * static_cast<double>(t));
}

TrainingPair sample_training_pair(const Dataset& data, Rng& rng) {
  if (data.empty()) throw ContractViolation("cannot sample from an empty dataset");
  std::uniform_int_distribution<std::size_t> pick_bag(0, data.size() - 1);
  const std::size_t b = pick_bag(rng);
  const auto& labels = data.bags[b].labels();
  // Index |Y| stands for the dummy, which every bag carries.
  std::uniform_int_distribution<std::size_t> pick_label(0, labels.size());
  const std::size_t i = pick_label(rng);
  return {b, i == labels.size() ? data.label_space.dummy_id() : labels[i]};
}

std::optional<Triplet> find_violation(const Model& model, const EmbeddedBag& bag,
                                      std::size_t bag_index, const BagScore& key,
                                      const std::vector<LabelId>& pool, Rng& rng) {
  if (pool.empty()) return std::nullopt;
  std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
  for (std::size_t i = 1; i <= pool.size(); ++i) {
    const LabelId y_bar = pool[pick(rng)];
    const BagScore other = bag_score(model, bag, y_bar);
    if (other.score > key.score - kMargin) {
      Triplet t;
      t.bag_index = bag_index;
      t.y = key.label;
      t.y_bar = y_bar;
      t.key_instance = key.key_instance;
      t.sub_concept = key.sub_concept;
      t.key_instance_bar = other.key_instance;
      t.sub_concept_bar = other.sub_concept;
      t.v = i;
      t.s_weight = harmonic_weight(pool.size(), i);
      t.margin_loss = kMargin + other.score - key.score;
      return t;
    }
  }
  return std::nullopt;
}

std::optional<Triplet> find_violation(const Model& model, const Bag& bag,
                                      std::size_t bag_index, LabelId y,
                                      const std::vector<LabelId>& pool, Rng& rng) {
  const EmbeddedBag embedded(model, bag);
  return find_violation(model, embedded, bag_index, bag_score(model, embedded, y), pool, rng);
}

void sgd_step_unprojected(Model& model, const Bag& bag, const Triplet& triplet,
                          double gamma) {
  const double g = gamma * triplet.s_weight;
  if (g == 0.0) return;
  const auto x = bag.instance(triplet.key_instance);
  const auto x_bar = bag.instance(triplet.key_instance_bar);
  const std::size_t m = model.shared_dim();
  const std::size_t d = model.input_dim();

  // All three gradients use the parameters from before the step.
  std::vector<double> buf(4 * m);
  std::span<double> e(buf.data(), m), e_bar(buf.data() + m, m);
  std::span<double> w_y(buf.data() + 2 * m, m), w_ybar(buf.data() + 3 * m, m);
  model.embed(x, e);
  model.embed(x_bar, e_bar);
  auto head_y = model.head(triplet.y, triplet.sub_concept);
  auto head_ybar = model.head(triplet.y_bar, triplet.sub_concept_bar);
  std::copy(head_y.begin(), head_y.end(), w_y.begin());
  std::copy(head_ybar.begin(), head_ybar.end(), w_ybar.begin());

  if (model.has_shared_space()) {
    auto w0 = model.w0();
    for (std::size_t i = 0; i < m; ++i) {
      double* row = w0.data() + i * d;
      const double a = g * w_ybar[i];
      const double b = g * w_y[i];
      for (std::size_t j = 0; j < d; ++j) row[j] -= a * x_bar[j] - b * x[j];
    }
  }
  for (std::size_t i = 0; i < m; ++i) {
    head_y[i] += g * e[i];
    head_ybar[i] -= g * e_bar[i];
  }
}

void sgd_update(Model& model, const Bag& bag, const Triplet& triplet, double gamma) {
  if (gamma * triplet.s_weight == 0.0) return;
  sgd_step_unprojected(model, bag, triplet, gamma);
  const double radius = model.norm_bound();
  project_to_ball(model.head(triplet.y, triplet.sub_concept), radius);
  project_to_ball(model.head(triplet.y_bar, triplet.sub_concept_bar), radius);
  project_w0_columns(model);
}

std::size_t average_label_count(const Dataset& data) {
  if (data.empty()) return 1;
  double total = 0.0;
  for (const auto& bag : data.bags) total += static_cast<double>(bag.labels().size());
  const auto r = static_cast<std::size_t>(std::llround(total / static_cast<double>(data.size())));
  return std::max<std::size_t>(1, r);
}

TrainResult train(const Dataset& data, const TrainConfig& cfg) {
  cfg.validate();
  if (data.empty()) throw ConfigError("training set is empty");
  data.validate();

  TrainState state;
  state.rng.seed(cfg.rng_seed);
  state.model = new_model(data.feature_dim, data.label_space, cfg, state.rng);
  if (cfg.variant == Variant::TopR) state.model.set_top_r(average_label_count(data));

  auto [train_set, val_set] = split(data, 1.0 - cfg.validation_fraction, state.rng);
  state.validation_size = val_set.size();
  const LabelSets val_truths = truth_sets(val_set);
  auto validation_loss = [&](const Model& model) {
    if (val_set.empty()) return std::numeric_limits<double>::quiet_NaN();
    return ranking_loss(real_label_scores(model, val_set), val_truths).value;
  };

  Model best = state.model;
  state.best_val_rankloss = validation_loss(state.model);
  state.history.push_back({0, state.best_val_rankloss, 0.0});

  EmbeddedBag embedded;
  std::vector<LabelId> pool;
  const LabelSpace& labels = data.label_space;
  while (state.t < cfg.max_iters) {
    const auto pair = sample_training_pair(train_set, state.rng);
    const Bag& bag = train_set.bags[pair.bag_index];
    if (fill_ybar_pool(bag, pair.y, labels, pool)) {
      embedded.assign(state.model, bag);
      const BagScore key = bag_score(state.model, embedded, pair.y);
      const auto triplet =
          find_violation(state.model, embedded, pair.bag_index, key, pool, state.rng);
      if (triplet) {
        state.cumulative_loss += triplet->loss();
        sgd_update(state.model, bag, *triplet, step_size(cfg, state.t));
      }
    }
    ++state.t;

    if (state.t % cfg.eval_every != 0 && state.t != cfg.max_iters) continue;
    const double loss = validation_loss(state.model);
    state.history.push_back({state.t, loss, state.cumulative_loss});
    if (val_set.empty()) {
      best = state.model;
      state.best_iteration = state.t;
      continue;
    }
    if (loss < state.best_val_rankloss) {
      state.best_val_rankloss = loss;
      state.best_iteration = state.t;
      state.evals_since_improvement = 0;
      best = state.model;
    } else if (++state.evals_since_improvement >= cfg.patience) {
      break;
    }
  }
  return {std::move(best), std::move(state)};
}

std::vector<std::pair<std::uint64_t, double>> cumulative_loss_curve(const TrainState& state) {
  std::vector<std::pair<std::uint64_t, double>> curve;
  for (const auto& h : state.history) {
    if (h.iteration == 0) continue;
    curve.emplace_back(h.iteration, h.cumulative_loss / static_cast<double>(h.iteration));
  }
  return curve;
}

}  // namespace mimlfast
