#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "mimlfast/types.hpp"

namespace mimlfast {

// Per-bag inputs to the metrics. Scores hold one entry per real label,
// indexed by label id; the dummy is never part of them.
using LabelSets = std::vector<std::vector<LabelId>>;
using ScoreTable = std::vector<std::vector<double>>;

struct MetricValue {
  double value = 0.0;
  // Bags left out because the metric is undefined for them.
  std::size_t skipped = 0;
};

double hamming_loss(const LabelSets& predictions, const LabelSets& truths,
                    std::size_t num_labels);
MetricValue one_error(const ScoreTable& scores, const LabelSets& truths);
MetricValue coverage(const ScoreTable& scores, const LabelSets& truths);
MetricValue ranking_loss(const ScoreTable& scores, const LabelSets& truths);
MetricValue average_precision(const ScoreTable& scores, const LabelSets& truths);

// Real-label positions (0 = top) after sorting by descending score with
// ascending-id tie-break.
std::vector<std::size_t> rank_positions(const std::vector<double>& scores);

// Real-label scores for every bag.
ScoreTable real_label_scores(const Model& model, const Dataset& data);
LabelSets truth_sets(const Dataset& data);
LabelSets predictions(const Model& model, const Dataset& data);

double key_instance_accuracy(const Model& model, const Dataset& data);

struct SubConceptHistogram {
  std::size_t num_sub_concepts = 0;
  // counts[l][k]: how often sub-concept k wins for real label l.
  std::vector<std::vector<std::size_t>> counts;

  std::size_t total() const;
};

SubConceptHistogram sub_concept_report(const Model& model, const Dataset& data);

struct EvalReport {
  double hamming_loss = 0.0;
  double one_error = 0.0;
  double coverage = 0.0;
  double ranking_loss = 0.0;
  double average_precision = 0.0;
  std::size_t n_bags = 0;
  // Bags skipped because their truth set is empty (one error, coverage,
  // average precision) or because ranking loss has no pairs to compare.
  std::size_t skipped_empty_truth = 0;
  std::size_t skipped_no_pairs = 0;
  std::optional<double> key_instance_accuracy;
  std::optional<SubConceptHistogram> sub_concepts;

  std::string to_text() const;
  // A single JSON object on one line.
  std::string to_record() const;
};

// All five criteria from already-computed predictions and scores.
EvalReport evaluate(const LabelSets& predicted, const ScoreTable& scores,
                    const LabelSets& truths, std::size_t num_labels);
EvalReport evaluate(const Model& model, const Dataset& data, bool with_key_instances);

}  // namespace mimlfast
