#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "mimlfast/types.hpp"

namespace mimlfast {

struct BagScore {
  LabelId label = 0;
  double score = 0.0;
  std::size_t key_instance = 0;
  std::size_t sub_concept = 0;
};

struct LabelScore {
  LabelId label = 0;
  double score = 0.0;
};

struct SubConceptScore {
  double score = 0.0;
  std::size_t sub_concept = 0;
};

// A bag with every instance already mapped into the shared space. Scoring
// many labels against one bag only pays for the projection once.
class EmbeddedBag {
 public:
  EmbeddedBag() = default;
  EmbeddedBag(const Model& model, const Bag& bag) { assign(model, bag); }

  // Re-embeds in place, reusing the buffer.
  void assign(const Model& model, const Bag& bag);

  std::size_t size() const { return size_; }
  std::size_t dim() const { return dim_; }
  std::span<const double> instance(std::size_t i) const {
    return {values_.data() + i * dim_, dim_};
  }

 private:
  std::size_t size_ = 0;
  std::size_t dim_ = 0;
  std::vector<double> values_;
};

double instance_score(const Model& model, std::span<const double> x, LabelId l,
                      std::size_t k);

// Max over sub-concepts; the smallest k wins ties.
SubConceptScore instance_label_score(const Model& model, std::span<const double> x,
                                     LabelId l);

// Max over instances and sub-concepts. Ties go to the smallest instance
// index, then the smallest k.
BagScore bag_score(const Model& model, const Bag& bag, LabelId l);
BagScore bag_score(const Model& model, const EmbeddedBag& bag, LabelId l);

// f_l(X) for every label id 0..L (dummy last).
std::vector<double> label_scores(const Model& model, const EmbeddedBag& bag);
std::vector<double> label_scores(const Model& model, const Bag& bag);

// All labels, dummy included, by descending score; ties by ascending id.
std::vector<LabelScore> rank_labels(const Model& model, const Bag& bag);

// Real labels l with 1 + f_l(X) > f_dummy(X).
std::vector<LabelId> predict_relevant(const Model& model, const Bag& bag);
std::vector<LabelId> predict_relevant_from_scores(std::span<const double> scores);

// The r highest-scoring real labels, returned in ascending id order.
std::vector<LabelId> predict_top_r(std::span<const double> scores, std::size_t r);

// Applies the prediction rule of the model's variant.
std::vector<LabelId> predict(const Model& model, const Bag& bag);

}  // namespace mimlfast
