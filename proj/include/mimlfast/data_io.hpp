#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <utility>

#include "mimlfast/types.hpp"

namespace mimlfast {

// Malformed or invalid dataset file; `line` is 1-based (0 if unknown).
class LoadError : public std::runtime_error {
 public:
  LoadError(std::size_t line, const std::string& what);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// JSON-lines format. Line 1:
//   {"miml_header": 1, "num_labels": L, "feature_dim": d}
// then one bag per line:
//   {"id": "...", "labels": [...], "instances": [[...], ...],
//    "instance_labels": [[...], ...]}   (instance_labels optional)
Dataset load_dataset(const std::string& path);
Dataset read_dataset(std::istream& in);
void save_dataset(const std::string& path, const Dataset& data);
void write_dataset(std::ostream& out, const Dataset& data);

// First part gets ceil(n * fraction) bags chosen by a seeded shuffle; both
// parts keep the original relative bag order.
std::pair<Dataset, Dataset> split(const Dataset& data, double fraction, Rng& rng);

struct SynthSpec {
  std::size_t n_bags = 2000;
  std::size_t z = 5;
  std::size_t d = 20;
  std::size_t L = 5;
  std::size_t K_true = 2;
  std::size_t m_true = 3;
  double noise_sigma = 0.1;
  std::uint64_t rng_seed = 0;

  void validate() const;
};

// Planted-model generator. A random projection and K_true heads per label
// define instance scores; an instance carries label l iff its planted score
// clears a per-label threshold set at the (1 - 1/L) quantile, so each label
// covers about 1/L of instances. Instances are cluster centres plus
// Gaussian noise, and each bag draws its instances from a couple of
// clusters. Bag labels are the union of instance labels.
Dataset generate_synthetic(const SynthSpec& spec);

}  // namespace mimlfast
