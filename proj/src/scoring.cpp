#include "mimlfast/scoring.hpp"

#include <algorithm>
#include <numeric>

namespace mimlfast {
namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

void check_label(const Model& model, LabelId l) {
  if (l >= model.label_space().num_heads()) {
    throw ContractViolation("label id " + std::to_string(l) + " out of range");
  }
}

SubConceptScore best_sub_concept(const Model& model, std::span<const double> embedded,
                                 LabelId l) {
  SubConceptScore best{dot(model.head(l, 0), embedded), 0};
  for (std::size_t k = 1; k < model.num_sub_concepts(); ++k) {
    const double s = dot(model.head(l, k), embedded);
    if (s > best.score) best = {s, k};
  }
  return best;
}

}  // namespace

void EmbeddedBag::assign(const Model& model, const Bag& bag) {
  size_ = bag.size();
  dim_ = model.shared_dim();
  values_.resize(size_ * dim_);
  if (size_ == 0) throw ContractViolation("bag '" + bag.id() + "' is empty");
  if (bag.dim() != model.input_dim()) {
    throw ContractViolation("bag '" + bag.id() + "' dimension does not match the model");
  }
  for (std::size_t i = 0; i < size_; ++i) {
    model.embed(bag.instance(i), {values_.data() + i * dim_, dim_});
  }
}

double instance_score(const Model& model, std::span<const double> x, LabelId l,
                      std::size_t k) {
  check_label(model, l);
  if (k >= model.num_sub_concepts()) throw ContractViolation("sub-concept out of range");
  std::vector<double> embedded(model.shared_dim());
  model.embed(x, embedded);
  return dot(model.head(l, k), embedded);
}

SubConceptScore instance_label_score(const Model& model, std::span<const double> x,
                                     LabelId l) {
  check_label(model, l);
  std::vector<double> embedded(model.shared_dim());
  model.embed(x, embedded);
  return best_sub_concept(model, embedded, l);
}

BagScore bag_score(const Model& model, const EmbeddedBag& bag, LabelId l) {
  check_label(model, l);
  BagScore best{l, 0.0, 0, 0};
  for (std::size_t i = 0; i < bag.size(); ++i) {
    const auto s = best_sub_concept(model, bag.instance(i), l);
    if (i == 0 || s.score > best.score) best = {l, s.score, i, s.sub_concept};
  }
  return best;
}

BagScore bag_score(const Model& model, const Bag& bag, LabelId l) {
  return bag_score(model, EmbeddedBag(model, bag), l);
}

std::vector<double> label_scores(const Model& model, const EmbeddedBag& bag) {
  const std::size_t n = model.label_space().num_heads();
  std::vector<double> scores(n);
  for (LabelId l = 0; l < n; ++l) scores[l] = bag_score(model, bag, l).score;
  return scores;
}

std::vector<double> label_scores(const Model& model, const Bag& bag) {
  return label_scores(model, EmbeddedBag(model, bag));
}

std::vector<LabelScore> rank_labels(const Model& model, const Bag& bag) {
  const auto scores = label_scores(model, bag);
  std::vector<LabelScore> ranked(scores.size());
  for (LabelId l = 0; l < scores.size(); ++l) ranked[l] = {l, scores[l]};
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const LabelScore& a, const LabelScore& b) { return a.score > b.score; });
  return ranked;
}

std::vector<LabelId> predict_relevant_from_scores(std::span<const double> scores) {
  if (scores.empty()) throw ContractViolation("no scores to threshold");
  const double dummy = scores.back();
  std::vector<LabelId> relevant;
  for (LabelId l = 0; l + 1 < scores.size(); ++l) {
    if (1.0 + scores[l] > dummy) relevant.push_back(l);
  }
  return relevant;
}

std::vector<LabelId> predict_relevant(const Model& model, const Bag& bag) {
  return predict_relevant_from_scores(label_scores(model, bag));
}

std::vector<LabelId> predict_top_r(std::span<const double> scores, std::size_t r) {
  if (scores.empty()) throw ContractViolation("no scores to rank");
  const std::size_t num_real = scores.size() - 1;
  std::vector<LabelId> order(num_real);
  std::iota(order.begin(), order.end(), LabelId{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](LabelId a, LabelId b) { return scores[a] > scores[b]; });
  order.resize(std::min(r, num_real));
  std::sort(order.begin(), order.end());
  return order;
}

std::vector<LabelId> predict(const Model& model, const Bag& bag) {
  const auto scores = label_scores(model, bag);
  if (model.variant() == Variant::TopR) return predict_top_r(scores, model.top_r());
  return predict_relevant_from_scores(scores);
}

}  // namespace mimlfast
