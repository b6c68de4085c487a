#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "mimlfast/scoring.hpp"
#include "mimlfast/types.hpp"

namespace mimlfast {

// The bag is relevant to every real label and y is the dummy, so there is
// nothing to rank y above.
class NoTrainableContrast : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

inline constexpr double kMargin = 1.0;

// Irrelevant labels for (bag, y). When y is a real label the dummy is
// included; when y is the dummy only the real irrelevant labels are.
std::vector<LabelId> build_ybar_pool(const Bag& bag, LabelId y, const LabelSpace& labels);

// Non-throwing form used by the training loop. Returns false when the pool
// would be empty.
bool fill_ybar_pool(const Bag& bag, LabelId y, const LabelSpace& labels,
                    std::vector<LabelId>& pool);

// Score-level forms. `pool_scores` holds f_j(X) for every j in the pool.
std::size_t rank_count(double f_l, std::span<const double> pool_scores);
std::size_t margin_violation_count(double f_l, std::span<const double> pool_scores);
double surrogate_psi(double f_l, std::span<const double> pool_scores);

// Model-level forms; the pool comes from build_ybar_pool (empty pool -> 0).
std::size_t rank_count(const Model& model, const Bag& bag, LabelId l);
std::size_t margin_violation_count(const Model& model, const Bag& bag, LabelId l);
double surrogate_psi(const Model& model, const Bag& bag, LabelId l);

// Harmonic number H_R.
double ranking_error(std::size_t rank);

double hinge(double q);

// weight * |1 + f_ybar(X) - f_y(X)|_+ with bag-level scores.
double triplet_loss(const Model& model, const Bag& bag, LabelId y, LabelId ybar,
                    double weight);

// H_{floor(pool_size / v)}, the sampled stand-in for the ranking error.
double harmonic_weight(std::size_t pool_size, std::size_t v);

// E[1/xi] for xi ~ Geometric(p): -p ln(p) / (1 - p).
double estimate_rank_expectation(double p);

}  // namespace mimlfast
