#include "mimlfast/types.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace mimlfast {

LabelSpace::LabelSpace(std::size_t num_labels) : num_labels_(num_labels) {
  if (num_labels == 0) throw ConfigError("label space needs at least one label");
}

Bag::Bag(std::string id, std::size_t dim, std::vector<double> features,
         std::vector<LabelId> labels,
         std::vector<std::vector<LabelId>> instance_labels)
    : id_(std::move(id)),
      dim_(dim),
      features_(std::move(features)),
      labels_(std::move(labels)),
      instance_labels_(std::move(instance_labels)) {
  if (dim_ == 0) throw ContractViolation("bag '" + id_ + "': zero feature dimension");
  if (features_.empty() || features_.size() % dim_ != 0) {
    throw ContractViolation("bag '" + id_ + "': feature block is not a non-empty z x d matrix");
  }
  std::sort(labels_.begin(), labels_.end());
  labels_.erase(std::unique(labels_.begin(), labels_.end()), labels_.end());
  if (!instance_labels_.empty() && instance_labels_.size() != size()) {
    throw ContractViolation("bag '" + id_ + "': instance_labels count differs from instance count");
  }
  for (auto& il : instance_labels_) {
    std::sort(il.begin(), il.end());
    il.erase(std::unique(il.begin(), il.end()), il.end());
  }
}

bool Bag::has_label(LabelId l) const {
  return std::binary_search(labels_.begin(), labels_.end(), l);
}

bool Bag::instance_has_label(std::size_t i, LabelId l) const {
  const auto& il = instance_labels_.at(i);
  return std::binary_search(il.begin(), il.end(), l);
}

bool Dataset::has_instance_labels() const {
  return !bags.empty() &&
         std::all_of(bags.begin(), bags.end(),
                     [](const Bag& b) { return b.has_instance_labels(); });
}

void Dataset::validate() const {
  if (feature_dim == 0) throw ContractViolation("dataset feature_dim must be positive");
  if (label_space.num_labels() == 0) throw ContractViolation("dataset has no labels");
  std::set<std::string> seen;
  for (const auto& bag : bags) {
    if (bag.dim() != feature_dim) {
      std::ostringstream os;
      os << "bag '" << bag.id() << "' has dimension " << bag.dim() << ", expected "
         << feature_dim;
      throw ContractViolation(os.str());
    }
    if (bag.size() == 0) throw ContractViolation("bag '" + bag.id() + "' has no instances");
    if (!seen.insert(bag.id()).second) {
      throw ContractViolation("duplicate bag id '" + bag.id() + "'");
    }
    for (LabelId l : bag.labels()) {
      if (!label_space.is_real(l)) {
        throw ContractViolation("bag '" + bag.id() + "' has out-of-range label " +
                                std::to_string(l));
      }
    }
    for (const auto& il : bag.instance_labels()) {
      for (LabelId l : il) {
        if (!label_space.is_real(l)) {
          throw ContractViolation("bag '" + bag.id() +
                                  "' has out-of-range instance label " + std::to_string(l));
        }
      }
    }
    for (double v : bag.features()) {
      if (!std::isfinite(v)) {
        throw ContractViolation("bag '" + bag.id() + "' has a non-finite feature");
      }
    }
  }
}

std::string to_string(Variant v) {
  switch (v) {
    case Variant::Full: return "full";
    case Variant::NoSharedSpace: return "v1";
    case Variant::TopR: return "v2";
  }
  return "unknown";
}

Variant parse_variant(const std::string& name) {
  if (name == "full") return Variant::Full;
  if (name == "v1") return Variant::NoSharedSpace;
  if (name == "v2") return Variant::TopR;
  throw ConfigError("unknown variant '" + name + "' (expected full, v1 or v2)");
}

void TrainConfig::validate() const {
  if (m == 0) throw ConfigError("m must be positive");
  if (K == 0) throw ConfigError("K must be positive");
  if (!(C > 0.0)) throw ConfigError("C must be positive");
  if (!(gamma0 > 0.0)) throw ConfigError("gamma0 must be positive");
  if (!(eta >= 0.0)) throw ConfigError("eta must be non-negative");
  if (eval_every == 0) throw ConfigError("eval_every must be positive");
  if (patience == 0) throw ConfigError("patience must be positive");
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) {
    throw ConfigError("validation_fraction must lie in (0, 1)");
  }
}

Model::Model(Variant variant, std::size_t input_dim, std::size_t shared_dim,
             std::size_t num_sub_concepts, LabelSpace label_space, double norm_bound)
    : variant_(variant),
      input_dim_(input_dim),
      shared_dim_(variant == Variant::NoSharedSpace ? input_dim : shared_dim),
      num_sub_concepts_(num_sub_concepts),
      label_space_(label_space),
      norm_bound_(norm_bound) {
  if (input_dim_ == 0 || shared_dim_ == 0 || num_sub_concepts_ == 0) {
    throw ConfigError("model dimensions must be positive");
  }
  if (label_space_.num_labels() == 0) throw ConfigError("model needs at least one label");
  if (!(norm_bound_ > 0.0)) throw ConfigError("norm bound C must be positive");
  if (has_shared_space()) w0_.assign(shared_dim_ * input_dim_, 0.0);
  heads_.assign(label_space_.num_heads() * num_sub_concepts_ * shared_dim_, 0.0);
}

void Model::embed(std::span<const double> x, std::span<double> out) const {
  if (x.size() != input_dim_ || out.size() != shared_dim_) {
    throw ContractViolation("embed: dimension mismatch");
  }
  if (!has_shared_space()) {
    std::copy(x.begin(), x.end(), out.begin());
    return;
  }
  const double* row = w0_.data();
  for (std::size_t i = 0; i < shared_dim_; ++i, row += input_dim_) {
    double acc = 0.0;
    for (std::size_t j = 0; j < input_dim_; ++j) acc += row[j] * x[j];
    out[i] = acc;
  }
}

double Model::max_head_norm() const {
  double best = 0.0;
  for (std::size_t off = 0; off < heads_.size(); off += shared_dim_) {
    double sq = 0.0;
    for (std::size_t i = 0; i < shared_dim_; ++i) sq += heads_[off + i] * heads_[off + i];
    best = std::max(best, std::sqrt(sq));
  }
  return best;
}

double Model::max_w0_column_norm() const {
  double best = 0.0;
  if (!has_shared_space()) return best;
  for (std::size_t j = 0; j < input_dim_; ++j) {
    double sq = 0.0;
    for (std::size_t i = 0; i < shared_dim_; ++i) {
      const double v = w0_[i * input_dim_ + j];
      sq += v * v;
    }
    best = std::max(best, std::sqrt(sq));
  }
  return best;
}

bool Model::all_finite() const {
  auto finite = [](double v) { return std::isfinite(v); };
  return std::all_of(w0_.begin(), w0_.end(), finite) &&
         std::all_of(heads_.begin(), heads_.end(), finite);
}

void project_to_ball(std::span<double> v, double radius) {
  double sq = 0.0;
  for (double x : v) sq += x * x;
  if (sq <= radius * radius) return;
  const double scale = radius / std::sqrt(sq);
  for (double& x : v) x *= scale;
}

void project_w0_columns(Model& model) {
  if (!model.has_shared_space()) return;
  const std::size_t m = model.shared_dim();
  const std::size_t d = model.input_dim();
  const double radius = model.norm_bound();
  auto w0 = model.w0();
  for (std::size_t j = 0; j < d; ++j) {
    double sq = 0.0;
    for (std::size_t i = 0; i < m; ++i) sq += w0[i * d + j] * w0[i * d + j];
    if (sq <= radius * radius) continue;
    const double scale = radius / std::sqrt(sq);
    for (std::size_t i = 0; i < m; ++i) w0[i * d + j] *= scale;
  }
}

Model new_model(std::size_t d, const LabelSpace& label_space, const TrainConfig& cfg,
                Rng& rng) {
  if (d == 0 || cfg.m == 0 || cfg.K == 0) throw ConfigError("d, m and K must be positive");
  Model model(cfg.variant, d, cfg.m, cfg.K, label_space, cfg.C);
  std::normal_distribution<double> init(0.0, 1.0 / std::sqrt(static_cast<double>(d)));
  for (double& v : model.w0()) v = init(rng);
  for (double& v : model.heads()) v = init(rng);
  project_w0_columns(model);
  for (LabelId l = 0; l < label_space.num_heads(); ++l) {
    for (std::size_t k = 0; k < cfg.K; ++k) project_to_ball(model.head(l, k), cfg.C);
  }
  return model;
}

}  // namespace mimlfast
