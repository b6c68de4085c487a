#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "mimlfast/scoring.hpp"
#include "mimlfast/types.hpp"

namespace mimlfast {

struct TrainingPair {
  std::size_t bag_index = 0;
  // A relevant label of the bag, or the dummy.
  LabelId y = 0;
};

// One SGD unit: bag, relevant label y, violated label y_bar, the key
// instance / sub-concept for each, and the sampling step that found y_bar.
struct Triplet {
  std::size_t bag_index = 0;
  LabelId y = 0;
  LabelId y_bar = 0;
  std::size_t key_instance = 0;
  std::size_t sub_concept = 0;
  std::size_t key_instance_bar = 0;
  std::size_t sub_concept_bar = 0;
  std::size_t v = 1;
  double s_weight = 0.0;
  // Hinge value |1 + f_ybar - f_y|_+ at the time of sampling.
  double margin_loss = 0.0;

  double loss() const { return s_weight * margin_loss; }
};

struct HistoryPoint {
  std::uint64_t iteration = 0;
  double validation_ranking_loss = 0.0;
  // Sum of sampled triplet losses over iterations [0, iteration).
  double cumulative_loss = 0.0;

  bool operator==(const HistoryPoint&) const = default;
};

struct TrainState {
  Model model;  // last iterate
  std::uint64_t t = 0;
  Rng rng;
  double best_val_rankloss = 0.0;
  std::uint64_t best_iteration = 0;
  std::size_t evals_since_improvement = 0;
  double cumulative_loss = 0.0;
  std::size_t validation_size = 0;
  std::vector<HistoryPoint> history;
};

struct TrainResult {
  Model model;  // parameters with the best validation ranking loss
  TrainState state;
};

// gamma0 / (1 + eta * gamma0 * t)
double step_size(const TrainConfig& cfg, std::uint64_t t);

TrainingPair sample_training_pair(const Dataset& data, Rng& rng);

// Draws labels from the pool uniformly with replacement, at most |pool|
// times, and stops at the first one with f_ybar(X) > f_y(X) - 1. Returns
// nullopt when no draw violates the margin.
std::optional<Triplet> find_violation(const Model& model, const Bag& bag,
                                      std::size_t bag_index, LabelId y,
                                      const std::vector<LabelId>& pool, Rng& rng);
std::optional<Triplet> find_violation(const Model& model, const EmbeddedBag& bag,
                                      std::size_t bag_index, const BagScore& key,
                                      const std::vector<LabelId>& pool, Rng& rng);

// Simultaneous gradient step on W0, w_{y,k} and w_{ybar,kbar} followed by
// projection of the touched heads and every W0 column onto the C-ball.
void sgd_update(Model& model, const Bag& bag, const Triplet& triplet, double gamma);

// Same as sgd_update without the projection; exposed for gradient checks.
void sgd_step_unprojected(Model& model, const Bag& bag, const Triplet& triplet,
                          double gamma);

// Mean |Y_i| rounded to the nearest integer, at least 1.
std::size_t average_label_count(const Dataset& data);

TrainResult train(const Dataset& data, const TrainConfig& cfg);

// (t, cumulative loss / t) at every recorded history point with t > 0.
std::vector<std::pair<std::uint64_t, double>> cumulative_loss_curve(const TrainState& state);

}  // namespace mimlfast
