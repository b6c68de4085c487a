#include "mimlfast/evaluation.hpp"

#include <algorithm>
#include <iomanip>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "mimlfast/scoring.hpp"

namespace mimlfast {
namespace {

void check_sizes(std::size_t a, std::size_t b) {
  if (a != b) throw ContractViolation("metric inputs have different bag counts");
}

std::vector<bool> membership(const std::vector<LabelId>& labels, std::size_t num_labels) {
  std::vector<bool> in(num_labels, false);
  for (LabelId l : labels) {
    if (l >= num_labels) {
      throw ContractViolation("label id " + std::to_string(l) + " out of range");
    }
    in[l] = true;
  }
  return in;
}

double mean_or_zero(double sum, std::size_t count) {
  return count == 0 ? 0.0 : sum / static_cast<double>(count);
}

}  // namespace

std::vector<std::size_t> rank_positions(const std::vector<double>& scores) {
  std::vector<LabelId> order(scores.size());
  std::iota(order.begin(), order.end(), LabelId{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](LabelId a, LabelId b) { return scores[a] > scores[b]; });
  std::vector<std::size_t> pos(scores.size());
  for (std::size_t r = 0; r < order.size(); ++r) pos[order[r]] = r;
  return pos;
}

double hamming_loss(const LabelSets& predictions, const LabelSets& truths,
                    std::size_t num_labels) {
  check_sizes(predictions.size(), truths.size());
  if (num_labels == 0) throw ContractViolation("hamming loss needs at least one label");
  double sum = 0.0;
  for (std::size_t b = 0; b < truths.size(); ++b) {
    const auto pred = membership(predictions[b], num_labels);
    const auto truth = membership(truths[b], num_labels);
    std::size_t diff = 0;
    for (std::size_t l = 0; l < num_labels; ++l) diff += pred[l] != truth[l] ? 1 : 0;
    sum += static_cast<double>(diff) / static_cast<double>(num_labels);
  }
  return mean_or_zero(sum, truths.size());
}

MetricValue one_error(const ScoreTable& scores, const LabelSets& truths) {
  check_sizes(scores.size(), truths.size());
  MetricValue out;
  double errors = 0.0;
  std::size_t counted = 0;
  for (std::size_t b = 0; b < truths.size(); ++b) {
    if (truths[b].empty()) {
      ++out.skipped;
      continue;
    }
    const auto& s = scores[b];
    const auto top = static_cast<LabelId>(std::max_element(s.begin(), s.end()) - s.begin());
    const auto truth = membership(truths[b], s.size());
    errors += truth[top] ? 0.0 : 1.0;
    ++counted;
  }
  out.value = mean_or_zero(errors, counted);
  return out;
}

MetricValue coverage(const ScoreTable& scores, const LabelSets& truths) {
  check_sizes(scores.size(), truths.size());
  MetricValue out;
  double sum = 0.0;
  std::size_t counted = 0;
  for (std::size_t b = 0; b < truths.size(); ++b) {
    if (truths[b].empty()) {
      ++out.skipped;
      continue;
    }
    const std::size_t num_labels = scores[b].size();
    membership(truths[b], num_labels);
    const auto pos = rank_positions(scores[b]);
    std::size_t depth = 0;
    for (LabelId l : truths[b]) depth = std::max(depth, pos[l]);
    sum += num_labels > 1 ? static_cast<double>(depth) / static_cast<double>(num_labels - 1)
                          : 0.0;
    ++counted;
  }
  out.value = mean_or_zero(sum, counted);
  return out;
}

MetricValue ranking_loss(const ScoreTable& scores, const LabelSets& truths) {
  check_sizes(scores.size(), truths.size());
  MetricValue out;
  double sum = 0.0;
  std::size_t counted = 0;
  for (std::size_t b = 0; b < truths.size(); ++b) {
    const auto& s = scores[b];
    const auto truth = membership(truths[b], s.size());
    const std::size_t n_rel = truths[b].size();
    const std::size_t n_irr = s.size() - n_rel;
    if (n_rel == 0 || n_irr == 0) {
      ++out.skipped;
      continue;
    }
    double misordered = 0.0;
    for (std::size_t r = 0; r < s.size(); ++r) {
      if (!truth[r]) continue;
      for (std::size_t i = 0; i < s.size(); ++i) {
        if (truth[i]) continue;
        if (s[i] > s[r]) {
          misordered += 1.0;
        } else if (s[i] == s[r]) {
          misordered += 0.5;
        }
      }
    }
    sum += misordered / static_cast<double>(n_rel * n_irr);
    ++counted;
  }
  out.value = mean_or_zero(sum, counted);
  return out;
}

MetricValue average_precision(const ScoreTable& scores, const LabelSets& truths) {
  check_sizes(scores.size(), truths.size());
  MetricValue out;
  double sum = 0.0;
  std::size_t counted = 0;
  for (std::size_t b = 0; b < truths.size(); ++b) {
    if (truths[b].empty()) {
      ++out.skipped;
      continue;
    }
    membership(truths[b], scores[b].size());
    const auto pos = rank_positions(scores[b]);
    double precision = 0.0;
    for (LabelId l : truths[b]) {
      std::size_t above = 0;
      for (LabelId other : truths[b]) above += pos[other] <= pos[l] ? 1 : 0;
      precision += static_cast<double>(above) / static_cast<double>(pos[l] + 1);
    }
    sum += precision / static_cast<double>(truths[b].size());
    ++counted;
  }
  out.value = mean_or_zero(sum, counted);
  return out;
}

ScoreTable real_label_scores(const Model& model, const Dataset& data) {
  ScoreTable table;
  table.reserve(data.size());
  for (const auto& bag : data.bags) {
    auto s = label_scores(model, bag);
    s.pop_back();
    table.push_back(std::move(s));
  }
  return table;
}

LabelSets truth_sets(const Dataset& data) {
  LabelSets out;
  out.reserve(data.size());
  for (const auto& bag : data.bags) out.push_back(bag.labels());
  return out;
}

LabelSets predictions(const Model& model, const Dataset& data) {
  LabelSets out;
  out.reserve(data.size());
  for (const auto& bag : data.bags) out.push_back(predict(model, bag));
  return out;
}

double key_instance_accuracy(const Model& model, const Dataset& data) {
  if (!data.has_instance_labels()) {
    throw ConfigError("key-instance accuracy needs per-instance label annotations");
  }
  std::size_t pairs = 0;
  std::size_t hits = 0;
  for (const auto& bag : data.bags) {
    if (bag.labels().empty()) continue;
    const EmbeddedBag embedded(model, bag);
    for (LabelId l : bag.labels()) {
      const auto best = bag_score(model, embedded, l);
      hits += bag.instance_has_label(best.key_instance, l) ? 1 : 0;
      ++pairs;
    }
  }
  return pairs == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(pairs);
}

std::size_t SubConceptHistogram::total() const {
  std::size_t sum = 0;
  for (const auto& row : counts) sum += std::accumulate(row.begin(), row.end(), std::size_t{0});
  return sum;
}

SubConceptHistogram sub_concept_report(const Model& model, const Dataset& data) {
  SubConceptHistogram hist;
  hist.num_sub_concepts = model.num_sub_concepts();
  hist.counts.assign(model.label_space().num_labels(),
                     std::vector<std::size_t>(hist.num_sub_concepts, 0));
  for (const auto& bag : data.bags) {
    if (bag.labels().empty()) continue;
    const EmbeddedBag embedded(model, bag);
    for (LabelId l : bag.labels()) ++hist.counts[l][bag_score(model, embedded, l).sub_concept];
  }
  return hist;
}

EvalReport evaluate(const LabelSets& predicted, const ScoreTable& scores,
                    const LabelSets& truths, std::size_t num_labels) {
  EvalReport report;
  report.n_bags = truths.size();
  report.hamming_loss = hamming_loss(predicted, truths, num_labels);
  const auto oe = one_error(scores, truths);
  const auto rl = ranking_loss(scores, truths);
  report.one_error = oe.value;
  report.coverage = coverage(scores, truths).value;
  report.ranking_loss = rl.value;
  report.average_precision = average_precision(scores, truths).value;
  report.skipped_empty_truth = oe.skipped;
  report.skipped_no_pairs = rl.skipped;
  return report;
}

EvalReport evaluate(const Model& model, const Dataset& data, bool with_key_instances) {
  LabelSets predicted;
  ScoreTable scores;
  predicted.reserve(data.size());
  scores.reserve(data.size());
  for (const auto& bag : data.bags) {
    auto s = label_scores(model, bag);
    predicted.push_back(model.variant() == Variant::TopR ? predict_top_r(s, model.top_r())
                                                         : predict_relevant_from_scores(s));
    s.pop_back();
    scores.push_back(std::move(s));
  }
  auto report = evaluate(predicted, scores, truth_sets(data), data.label_space.num_labels());
  if (with_key_instances) {
    report.key_instance_accuracy = key_instance_accuracy(model, data);
    report.sub_concepts = sub_concept_report(model, data);
  }
  return report;
}

std::string EvalReport::to_text() const {
  std::ostringstream os;
  os << std::setprecision(6) << std::fixed;
  os << "n_bags: " << n_bags << '\n'
     << "hamming_loss: " << hamming_loss << '\n'
     << "one_error: " << one_error << '\n'
     << "coverage: " << coverage << '\n'
     << "ranking_loss: " << ranking_loss << '\n'
     << "average_precision: " << average_precision << '\n'
     << "skipped_empty_truth: " << skipped_empty_truth << '\n'
     << "skipped_no_pairs: " << skipped_no_pairs << '\n';
  if (key_instance_accuracy) os << "key_instance_accuracy: " << *key_instance_accuracy << '\n';
  if (sub_concepts) {
    for (std::size_t l = 0; l < sub_concepts->counts.size(); ++l) {
      os << "sub_concepts[" << l << "]:";
      for (auto c : sub_concepts->counts[l]) os << ' ' << c;
      os << '\n';
    }
  }
  return os.str();
}

std::string EvalReport::to_record() const {
  nlohmann::ordered_json rec;
  rec["n_bags"] = n_bags;
  rec["hamming_loss"] = hamming_loss;
  rec["one_error"] = one_error;
  rec["coverage"] = coverage;
  rec["ranking_loss"] = ranking_loss;
  rec["average_precision"] = average_precision;
  rec["skipped_empty_truth"] = skipped_empty_truth;
  rec["skipped_no_pairs"] = skipped_no_pairs;
  if (key_instance_accuracy) rec["key_instance_accuracy"] = *key_instance_accuracy;
  if (sub_concepts) rec["sub_concepts"] = sub_concepts->counts;
  return rec.dump();
}

}  // namespace mimlfast
