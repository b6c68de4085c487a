#pragma once

// Random model/bag generators and brute-force oracles shared by the unit
// and acceptance suites. Oracles read raw parameters and never call into
// the scoring module.

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "mimlfast/objective.hpp"
#include "mimlfast/training.hpp"
#include "mimlfast/types.hpp"

namespace mimlfast::testing {

inline Model random_model(Rng& rng, std::size_t d, std::size_t m, std::size_t K,
                          std::size_t L, double C = 1e6,
                          Variant variant = Variant::Full, double scale = 1.0) {
  Model model(variant, d, m, K, LabelSpace(L), C);
  std::normal_distribution<double> g(0.0, scale);
  for (double& v : model.w0()) v = g(rng);
  for (double& v : model.heads()) v = g(rng);
  return model;
}

// m = d = 1 and W0 = [1], so head (l, k) scores head * x. Heads are listed
// label-major, dummy last.
inline Model scalar_model(std::size_t L, std::size_t K, const std::vector<double>& heads) {
  Model model(Variant::Full, 1, 1, K, LabelSpace(L), 1e6);
  model.w0()[0] = 1.0;
  std::copy(heads.begin(), heads.end(), model.heads().begin());
  return model;
}

inline Bag unit_bag(std::vector<LabelId> labels = {}) {
  return Bag("u", 1, {1.0}, std::move(labels));
}

inline Bag random_bag(Rng& rng, std::size_t d, std::size_t z, std::vector<LabelId> labels,
                      const std::string& id = "b") {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> features(d * z);
  for (double& v : features) v = g(rng);
  return Bag(id, d, std::move(features), std::move(labels));
}

// Random subset of [0, L), each label kept with probability q.
inline std::vector<LabelId> random_labels(Rng& rng, std::size_t L, double q = 0.4) {
  std::bernoulli_distribution keep(q);
  std::vector<LabelId> out;
  for (LabelId l = 0; l < L; ++l) {
    if (keep(rng)) out.push_back(l);
  }
  return out;
}

// Explicit sum_j sum_i w_i W0[i,j] x_j.
inline double brute_instance_score(const Model& model, std::span<const double> x, LabelId l,
                                   std::size_t k) {
  const auto w = model.head(l, k);
  const std::size_t d = model.input_dim();
  double total = 0.0;
  if (!model.has_shared_space()) {
    for (std::size_t j = 0; j < d; ++j) total += w[j] * x[j];
    return total;
  }
  const auto w0 = model.w0();
  for (std::size_t j = 0; j < d; ++j) {
    for (std::size_t i = 0; i < model.shared_dim(); ++i) total += w[i] * w0[i * d + j] * x[j];
  }
  return total;
}

// max over instances and sub-concepts by exhaustive enumeration.
inline double brute_bag_score(const Model& model, const Bag& bag, LabelId l,
                              std::size_t* key = nullptr, std::size_t* sub = nullptr) {
  double best = -INFINITY;
  for (std::size_t i = 0; i < bag.size(); ++i) {
    for (std::size_t k = 0; k < model.num_sub_concepts(); ++k) {
      const double s = brute_instance_score(model, bag.instance(i), l, k);
      if (s > best) {
        best = s;
        if (key) *key = i;
        if (sub) *sub = k;
      }
    }
  }
  return best;
}

inline double harmonic(std::size_t n) {
  double h = 0.0;
  for (std::size_t i = 1; i <= n; ++i) h += 1.0 / static_cast<double>(i);
  return h;
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

// Relevant label or the dummy, chosen so the pool is non-empty.
struct Instance {
  Model model;
  Bag bag;
  LabelId y;
};

inline Instance random_instance(Rng& rng, std::size_t max_labels = 6) {
  std::uniform_int_distribution<std::size_t> pick_L(2, max_labels);
  const std::size_t L = pick_L(rng);
  auto model = random_model(rng, 3, 2, 2, L, 1e6, Variant::Full, 0.8);
  auto labels = random_labels(rng, L);
  if (labels.size() == L) labels.pop_back();
  Bag bag = random_bag(rng, 3, 3, labels);
  std::uniform_int_distribution<std::size_t> pick(0, labels.size());
  const std::size_t i = pick(rng);
  const LabelId y = i == labels.size() ? model.label_space().dummy_id() : labels[i];
  return {std::move(model), std::move(bag), y};
}

// Central finite differences of triplet_loss over every W0 entry and the two
// touched heads, laid out as [W0 | head_y | head_ybar].
inline std::vector<double> numeric_gradient(Model model, const Bag& bag, const Triplet& t,
                                            double h) {
  auto loss = [&] { return triplet_loss(model, bag, t.y, t.y_bar, t.s_weight); };
  std::vector<double> grad;
  auto probe = [&](std::span<double> params) {
    for (double& p : params) {
      const double saved = p;
      p = saved + h;
      const double up = loss();
      p = saved - h;
      const double down = loss();
      p = saved;
      grad.push_back((up - down) / (2 * h));
    }
  };
  probe(model.w0());
  probe(model.head(t.y, t.sub_concept));
  probe(model.head(t.y_bar, t.sub_concept_bar));
  return grad;
}

// The negated update at gamma = 1, in the same layout.
inline std::vector<double> analytic_gradient(const Model& model, const Bag& bag, const Triplet& t) {
  Model moved = model;
  sgd_step_unprojected(moved, bag, t, 1.0);
  std::vector<double> grad;
  auto diff = [&](std::span<const double> before, std::span<const double> after) {
    for (std::size_t i = 0; i < before.size(); ++i) grad.push_back(before[i] - after[i]);
  };
  diff(model.w0(), moved.w0());
  diff(model.head(t.y, t.sub_concept), moved.head(t.y, t.sub_concept));
  diff(model.head(t.y_bar, t.sub_concept_bar), moved.head(t.y_bar, t.sub_concept_bar));
  return grad;
}

inline double relative_error(const std::vector<double>& a, const std::vector<double>& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - b[i]) * (a[i] - b[i]);
    den += b[i] * b[i];
  }
  return std::sqrt(num) / std::max(std::sqrt(den), 1e-12);
}

inline std::optional<Triplet> random_triplet(Rng& rng, const Model& model, Bag& bag_out) {
  const std::size_t L = model.label_space().num_labels();
  auto labels = random_labels(rng, L, 0.5);
  if (labels.empty()) labels.push_back(0);
  if (labels.size() == L) labels.pop_back();
  bag_out = random_bag(rng, model.input_dim(), 3, labels);
  const auto pool = build_ybar_pool(bag_out, labels[0], model.label_space());
  return find_violation(model, bag_out, 0, labels[0], pool, rng);
}

}  // namespace mimlfast::testing
