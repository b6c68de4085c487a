#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mimlfast {

using LabelId = std::uint32_t;
using Rng = std::mt19937_64;

// Raised for invalid hyperparameters, shapes, or missing inputs.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Raised when a caller breaks a function precondition (bad label id,
// dimension mismatch, empty bag, ...).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Label ids 0..L-1 are real labels; id L is the dummy label that every
// bag implicitly carries and that separates relevant from irrelevant labels.
class LabelSpace {
 public:
  LabelSpace() = default;
  explicit LabelSpace(std::size_t num_labels);

  std::size_t num_labels() const { return num_labels_; }
  LabelId dummy_id() const { return static_cast<LabelId>(num_labels_); }
  // Real labels plus the dummy.
  std::size_t num_heads() const { return num_labels_ + 1; }
  bool is_real(LabelId l) const { return l < num_labels_; }

  bool operator==(const LabelSpace&) const = default;

 private:
  std::size_t num_labels_ = 0;
};

// A bag of instances stored as one row-major z x d block.
class Bag {
 public:
  Bag() = default;
  Bag(std::string id, std::size_t dim, std::vector<double> features,
      std::vector<LabelId> labels,
      std::vector<std::vector<LabelId>> instance_labels = {});

  const std::string& id() const { return id_; }
  std::size_t dim() const { return dim_; }
  std::size_t size() const { return dim_ == 0 ? 0 : features_.size() / dim_; }
  std::span<const double> instance(std::size_t i) const {
    return {features_.data() + i * dim_, dim_};
  }
  const std::vector<double>& features() const { return features_; }

  // Sorted, unique real label ids.
  const std::vector<LabelId>& labels() const { return labels_; }
  bool has_label(LabelId l) const;

  bool has_instance_labels() const { return !instance_labels_.empty(); }
  const std::vector<std::vector<LabelId>>& instance_labels() const {
    return instance_labels_;
  }
  bool instance_has_label(std::size_t i, LabelId l) const;

  bool operator==(const Bag&) const = default;

 private:
  std::string id_;
  std::size_t dim_ = 0;
  std::vector<double> features_;
  std::vector<LabelId> labels_;
  std::vector<std::vector<LabelId>> instance_labels_;
};

struct Dataset {
  std::vector<Bag> bags;
  LabelSpace label_space;
  std::size_t feature_dim = 0;

  std::size_t size() const { return bags.size(); }
  bool empty() const { return bags.empty(); }
  bool has_instance_labels() const;

  // Throws ContractViolation on the first broken invariant.
  void validate() const;

  bool operator==(const Dataset&) const = default;
};

enum class Variant : std::uint32_t {
  Full = 0,
  // No shared projection: each head is a linear model on the raw features.
  NoSharedSpace = 1,
  // Full training; prediction keeps the top r labels instead of using the
  // dummy threshold.
  TopR = 2,
};

std::string to_string(Variant v);
Variant parse_variant(const std::string& name);

struct TrainConfig {
  std::size_t m = 10;
  std::size_t K = 1;
  double C = 1.0;
  double gamma0 = 0.001;
  double eta = 1e-5;
  std::uint64_t max_iters = 100000;
  std::uint64_t eval_every = 1000;
  std::size_t patience = 5;
  double validation_fraction = 0.1;
  std::uint64_t rng_seed = 0;
  Variant variant = Variant::Full;

  void validate() const;
};

// Shared projection W0 (m x d, row-major) plus one m-vector per
// (label, sub-concept) pair for labels 0..L, dummy included.
class Model {
 public:
  Model() = default;
  Model(Variant variant, std::size_t input_dim, std::size_t shared_dim,
        std::size_t num_sub_concepts, LabelSpace label_space, double norm_bound);

  Variant variant() const { return variant_; }
  bool has_shared_space() const { return variant_ != Variant::NoSharedSpace; }
  std::size_t input_dim() const { return input_dim_; }
  // Dimension the heads live in (equals input_dim without a shared space).
  std::size_t shared_dim() const { return shared_dim_; }
  std::size_t num_sub_concepts() const { return num_sub_concepts_; }
  const LabelSpace& label_space() const { return label_space_; }
  double norm_bound() const { return norm_bound_; }

  // Number of labels kept by the TopR prediction rule.
  std::size_t top_r() const { return top_r_; }
  void set_top_r(std::size_t r) { top_r_ = r; }

  std::span<double> w0() { return w0_; }
  std::span<const double> w0() const { return w0_; }
  std::span<double> heads() { return heads_; }
  std::span<const double> heads() const { return heads_; }

  std::span<double> head(LabelId l, std::size_t k) {
    return {heads_.data() + head_offset(l, k), shared_dim_};
  }
  std::span<const double> head(LabelId l, std::size_t k) const {
    return {heads_.data() + head_offset(l, k), shared_dim_};
  }

  // Maps x into the shared space (W0 x, or a copy of x without one).
  void embed(std::span<const double> x, std::span<double> out) const;

  double max_head_norm() const;
  double max_w0_column_norm() const;
  bool all_finite() const;

  bool operator==(const Model&) const = default;

 private:
  std::size_t head_offset(LabelId l, std::size_t k) const {
    return (static_cast<std::size_t>(l) * num_sub_concepts_ + k) * shared_dim_;
  }

  Variant variant_ = Variant::Full;
  std::size_t input_dim_ = 0;
  std::size_t shared_dim_ = 0;
  std::size_t num_sub_concepts_ = 0;
  LabelSpace label_space_;
  double norm_bound_ = 1.0;
  std::size_t top_r_ = 0;
  std::vector<double> w0_;
  std::vector<double> heads_;
};

// Scales v onto the L2 ball of the given radius if it lies outside.
void project_to_ball(std::span<double> v, double radius);
void project_w0_columns(Model& model);

// Gaussian init with mean 0 and std 1/sqrt(d), then norm projection.
Model new_model(std::size_t d, const LabelSpace& label_space,
                const TrainConfig& cfg, Rng& rng);

}  // namespace mimlfast
