#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>

#include "mimlfast/types.hpp"

namespace mimlfast {

class ModelFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Binary layout, little-endian:
//   char[8]  "MIMLFST1"
//   u32      variant (0 full, 1 v1, 2 v2)
//   u64      d, m, K, L
//   f64      C
//   u64      top_r
//   f64[m*d] W0, row-major (absent for v1)
//   f64[(L+1)*K*m] heads, ordered by label, then sub-concept
void write_model(std::ostream& out, const Model& model);
Model read_model(std::istream& in);
void save_model(const std::string& path, const Model& model);
Model load_model(const std::string& path);

// Throws ModelFormatError when the model cannot score this dataset.
void check_compatible(const Model& model, const Dataset& data);

}  // namespace mimlfast
