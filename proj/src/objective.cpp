#include "mimlfast/objective.hpp"

#include <cmath>
#include <string>

namespace mimlfast {
namespace {

std::vector<double> pool_scores(const std::vector<double>& scores,
                                const std::vector<LabelId>& pool) {
  std::vector<double> out;
  out.reserve(pool.size());
  for (LabelId j : pool) out.push_back(scores[j]);
  return out;
}

struct PoolView {
  double f_l;
  std::vector<double> pool;
};

PoolView pool_view(const Model& model, const Bag& bag, LabelId l) {
  std::vector<LabelId> pool;
  fill_ybar_pool(bag, l, model.label_space(), pool);
  const auto scores = label_scores(model, bag);
  return {scores[l], pool_scores(scores, pool)};
}

}  // namespace

bool fill_ybar_pool(const Bag& bag, LabelId y, const LabelSpace& labels,
                    std::vector<LabelId>& pool) {
  const LabelId dummy = labels.dummy_id();
  if (y != dummy && !bag.has_label(y)) {
    throw ContractViolation("label " + std::to_string(y) + " is neither relevant to bag '" +
                            bag.id() + "' nor the dummy");
  }
  pool.clear();
  const auto& relevant = bag.labels();
  auto it = relevant.begin();
  for (LabelId j = 0; j < labels.num_labels(); ++j) {
    while (it != relevant.end() && *it < j) ++it;
    if (it != relevant.end() && *it == j) continue;
    pool.push_back(j);
  }
  if (y != dummy) pool.push_back(dummy);
  return !pool.empty();
}

std::vector<LabelId> build_ybar_pool(const Bag& bag, LabelId y, const LabelSpace& labels) {
  std::vector<LabelId> pool;
  if (!fill_ybar_pool(bag, y, labels, pool)) {
    throw NoTrainableContrast("bag '" + bag.id() +
                              "' is relevant to every label; no trainable contrast for the "
                              "dummy");
  }
  return pool;
}

std::size_t rank_count(double f_l, std::span<const double> pool_scores) {
  std::size_t count = 0;
  for (double f_j : pool_scores) count += f_j > f_l ? 1 : 0;
  return count;
}

std::size_t margin_violation_count(double f_l, std::span<const double> pool_scores) {
  std::size_t count = 0;
  for (double f_j : pool_scores) count += f_j > f_l - kMargin ? 1 : 0;
  return count;
}

double surrogate_psi(double f_l, std::span<const double> pool_scores) {
  const std::size_t violations = margin_violation_count(f_l, pool_scores);
  if (violations == 0) return 0.0;
  double sum = 0.0;
  for (double f_j : pool_scores) sum += hinge(kMargin + f_j - f_l);
  return ranking_error(violations) * sum / static_cast<double>(violations);
}

std::size_t rank_count(const Model& model, const Bag& bag, LabelId l) {
  const auto v = pool_view(model, bag, l);
  return rank_count(v.f_l, v.pool);
}

std::size_t margin_violation_count(const Model& model, const Bag& bag, LabelId l) {
  const auto v = pool_view(model, bag, l);
  return margin_violation_count(v.f_l, v.pool);
}

double surrogate_psi(const Model& model, const Bag& bag, LabelId l) {
  const auto v = pool_view(model, bag, l);
  return surrogate_psi(v.f_l, v.pool);
}

double ranking_error(std::size_t rank) {
  double h = 0.0;
  for (std::size_t i = rank; i >= 1; --i) h += 1.0 / static_cast<double>(i);
  return h;
}

double hinge(double q) { return q > 0.0 ? q : 0.0; }

double triplet_loss(const Model& model, const Bag& bag, LabelId y, LabelId ybar,
                    double weight) {
  if (weight < 0.0) throw ContractViolation("triplet weight must be non-negative");
  const EmbeddedBag embedded(model, bag);
  const double f_y = bag_score(model, embedded, y).score;
  const double f_ybar = bag_score(model, embedded, ybar).score;
  return weight * hinge(kMargin + f_ybar - f_y);
}

double harmonic_weight(std::size_t pool_size, std::size_t v) {
  if (v < 1 || v > pool_size) {
    throw ContractViolation("sampling step v=" + std::to_string(v) + " outside [1, " +
                            std::to_string(pool_size) + "]");
  }
  return ranking_error(pool_size / v);
}

double estimate_rank_expectation(double p) {
  if (!(p > 0.0 && p < 1.0)) throw ContractViolation("p must lie in (0, 1)");
  return -p * std::log(p) / (1.0 - p);
}

}  // namespace mimlfast
