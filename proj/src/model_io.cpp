#include "mimlfast/model_io.hpp"

#include <array>
#include <cmath>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <vector>

namespace mimlfast {
namespace {

constexpr std::array<char, 8> kMagic = {'M', 'I', 'M', 'L', 'F', 'S', 'T', '1'};
constexpr std::size_t kHeaderBytes = 8 + 4 + 4 * 8 + 8 + 8;

static_assert(std::endian::native == std::endian::little,
              "model files are little-endian; add byte swapping for this target");

template <typename T>
void put(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

class Reader {
 public:
  explicit Reader(std::vector<char> bytes) : bytes_(std::move(bytes)) {}

  template <typename T>
  T get() {
    T value;
    need(sizeof(T));
    std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }

  void get_doubles(std::span<double> out) {
    need(out.size() * sizeof(double));
    std::memcpy(out.data(), bytes_.data() + pos_, out.size() * sizeof(double));
    pos_ += out.size() * sizeof(double);
  }

  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (remaining() < n) throw ModelFormatError("model file is truncated");
  }

  std::vector<char> bytes_;
  std::size_t pos_ = 0;
};

// Checked a*b for sizes read from disk.
std::uint64_t mul(std::uint64_t a, std::uint64_t b) {
  if (a != 0 && b > std::numeric_limits<std::uint64_t>::max() / a) {
    throw ModelFormatError("model dimensions overflow");
  }
  return a * b;
}

}  // namespace

void write_model(std::ostream& out, const Model& model) {
  out.write(kMagic.data(), kMagic.size());
  put<std::uint32_t>(out, static_cast<std::uint32_t>(model.variant()));
  put<std::uint64_t>(out, model.input_dim());
  put<std::uint64_t>(out, model.shared_dim());
  put<std::uint64_t>(out, model.num_sub_concepts());
  put<std::uint64_t>(out, model.label_space().num_labels());
  put<double>(out, model.norm_bound());
  put<std::uint64_t>(out, model.top_r());
  const auto w0 = model.w0();
  const auto heads = model.heads();
  out.write(reinterpret_cast<const char*>(w0.data()),
            static_cast<std::streamsize>(w0.size() * sizeof(double)));
  out.write(reinterpret_cast<const char*>(heads.data()),
            static_cast<std::streamsize>(heads.size() * sizeof(double)));
}

Model read_model(std::istream& in) {
  Reader r(std::vector<char>(std::istreambuf_iterator<char>(in), {}));
  if (r.remaining() < kHeaderBytes) throw ModelFormatError("model file is truncated");
  std::array<char, 8> magic{};
  for (char& c : magic) c = r.get<char>();
  if (magic != kMagic) throw ModelFormatError("not a model file (bad magic)");

  const auto variant_raw = r.get<std::uint32_t>();
  if (variant_raw > static_cast<std::uint32_t>(Variant::TopR)) {
    throw ModelFormatError("unknown model variant " + std::to_string(variant_raw));
  }
  const auto variant = static_cast<Variant>(variant_raw);
  const auto d = r.get<std::uint64_t>();
  const auto m = r.get<std::uint64_t>();
  const auto K = r.get<std::uint64_t>();
  const auto L = r.get<std::uint64_t>();
  const auto C = r.get<double>();
  const auto top_r = r.get<std::uint64_t>();
  if (d == 0 || m == 0 || K == 0 || L == 0) throw ModelFormatError("model has a zero dimension");
  if (!(C > 0.0) || !std::isfinite(C)) throw ModelFormatError("model norm bound is invalid");
  if (variant == Variant::NoSharedSpace && m != d) {
    throw ModelFormatError("v1 model must have heads of the input dimension");
  }
  const bool shared = variant != Variant::NoSharedSpace;
  const std::uint64_t w0_count = shared ? mul(m, d) : 0;
  const std::uint64_t head_count = mul(mul(L + 1, K), m);
  const std::uint64_t payload = mul(w0_count + head_count, sizeof(double));
  if (payload != r.remaining()) {
    throw ModelFormatError("model payload size does not match its declared dimensions");
  }

  Model model(variant, d, m, K, LabelSpace(L), C);
  model.set_top_r(top_r);
  r.get_doubles(model.w0());
  r.get_doubles(model.heads());
  if (!model.all_finite()) throw ModelFormatError("model contains non-finite parameters");
  return model;
}

void save_model(const std::string& path, const Model& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ModelFormatError("cannot write '" + path + "'");
  write_model(out, model);
  if (!out) throw ModelFormatError("write to '" + path + "' failed");
}

Model load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ModelFormatError("cannot open '" + path + "'");
  return read_model(in);
}

void check_compatible(const Model& model, const Dataset& data) {
  if (model.input_dim() != data.feature_dim) {
    throw ModelFormatError("model expects feature dimension " +
                           std::to_string(model.input_dim()) + ", data has " +
                           std::to_string(data.feature_dim));
  }
  if (model.label_space().num_labels() != data.label_space.num_labels()) {
    throw ModelFormatError("model has " + std::to_string(model.label_space().num_labels()) +
                           " labels, data has " +
                           std::to_string(data.label_space.num_labels()));
  }
}

}  // namespace mimlfast
