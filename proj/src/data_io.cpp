#include "mimlfast/data_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

namespace mimlfast {
namespace {

using ordered_json = nlohmann::ordered_json;

LabelId parse_label(const nlohmann::json& v, std::size_t num_labels, std::size_t line,
                    const char* field) {
  if (!v.is_number_integer()) {
    throw LoadError(line, std::string(field) + " must contain integers");
  }
  const auto raw = v.get<std::int64_t>();
  if (raw < 0 || static_cast<std::uint64_t>(raw) >= num_labels) {
    throw LoadError(line, std::string(field) + " value " + std::to_string(raw) +
                              " outside [0, " + std::to_string(num_labels) + ")");
  }
  return static_cast<LabelId>(raw);
}

std::vector<LabelId> parse_label_list(const nlohmann::json& v, std::size_t num_labels,
                                      std::size_t line, const char* field) {
  if (!v.is_array()) throw LoadError(line, std::string(field) + " must be an array");
  std::vector<LabelId> out;
  out.reserve(v.size());
  for (const auto& e : v) out.push_back(parse_label(e, num_labels, line, field));
  return out;
}

Bag parse_bag(const std::string& text, std::size_t num_labels, std::size_t dim,
              std::size_t line) {
  nlohmann::json rec;
  try {
    rec = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw LoadError(line, std::string("invalid JSON: ") + e.what());
  }
  if (!rec.is_object()) throw LoadError(line, "record must be a JSON object");
  if (!rec.contains("id") || !rec["id"].is_string()) {
    throw LoadError(line, "record needs a string \"id\"");
  }
  if (!rec.contains("labels")) throw LoadError(line, "record needs \"labels\"");
  if (!rec.contains("instances") || !rec["instances"].is_array()) {
    throw LoadError(line, "record needs an \"instances\" array");
  }
  const auto& instances = rec["instances"];
  if (instances.empty()) throw LoadError(line, "bag has no instances");

  std::vector<double> features;
  features.reserve(instances.size() * dim);
  for (const auto& inst : instances) {
    if (!inst.is_array()) throw LoadError(line, "each instance must be an array");
    if (inst.size() != dim) {
      throw LoadError(line, "instance has dimension " + std::to_string(inst.size()) +
                                ", expected " + std::to_string(dim));
    }
    for (const auto& v : inst) {
      if (!v.is_number()) throw LoadError(line, "instance features must be numbers");
      const double x = v.get<double>();
      if (!std::isfinite(x)) throw LoadError(line, "non-finite feature value");
      features.push_back(x);
    }
  }

  auto labels = parse_label_list(rec["labels"], num_labels, line, "labels");
  std::vector<std::vector<LabelId>> instance_labels;
  if (rec.contains("instance_labels") && !rec["instance_labels"].is_null()) {
    const auto& il = rec["instance_labels"];
    if (!il.is_array() || il.size() != instances.size()) {
      throw LoadError(line, "instance_labels must have one entry per instance");
    }
    for (const auto& e : il) {
      instance_labels.push_back(parse_label_list(e, num_labels, line, "instance_labels"));
    }
  }
  return Bag(rec["id"].get<std::string>(), dim, std::move(features), std::move(labels),
             std::move(instance_labels));
}

}  // namespace

LoadError::LoadError(std::size_t line, const std::string& what)
    : std::runtime_error(line == 0 ? what : "line " + std::to_string(line) + ": " + what),
      line_(line) {}

Dataset read_dataset(std::istream& in) {
  std::string text;
  std::size_t line = 0;
  if (!std::getline(in, text)) throw LoadError(1, "missing header line");
  ++line;

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw LoadError(line, std::string("invalid header: ") + e.what());
  }
  if (!header.is_object() || header.value("miml_header", 0) != 1) {
    throw LoadError(line, "first line must be a {\"miml_header\": 1, ...} object");
  }
  auto positive = [&](const char* key) -> std::size_t {
    if (!header.contains(key) || !header[key].is_number_integer() ||
        header[key].get<std::int64_t>() <= 0) {
      throw LoadError(line, std::string("header field \"") + key +
                                "\" must be a positive integer");
    }
    return header[key].get<std::size_t>();
  };
  Dataset data;
  data.label_space = LabelSpace(positive("num_labels"));
  data.feature_dim = positive("feature_dim");

  std::set<std::string> ids;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    Bag bag = parse_bag(text, data.label_space.num_labels(), data.feature_dim, line);
    if (!ids.insert(bag.id()).second) {
      throw LoadError(line, "duplicate bag id '" + bag.id() + "'");
    }
    data.bags.push_back(std::move(bag));
  }
  return data;
}

Dataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw LoadError(0, "cannot open '" + path + "'");
  return read_dataset(in);
}

void write_dataset(std::ostream& out, const Dataset& data) {
  ordered_json header;
  header["miml_header"] = 1;
  header["num_labels"] = data.label_space.num_labels();
  header["feature_dim"] = data.feature_dim;
  out << header.dump() << '\n';
  for (const auto& bag : data.bags) {
    ordered_json rec;
    rec["id"] = bag.id();
    rec["labels"] = bag.labels();
    auto instances = ordered_json::array();
    for (std::size_t i = 0; i < bag.size(); ++i) {
      const auto x = bag.instance(i);
      instances.push_back(std::vector<double>(x.begin(), x.end()));
    }
    rec["instances"] = std::move(instances);
    if (bag.has_instance_labels()) rec["instance_labels"] = bag.instance_labels();
    out << rec.dump() << '\n';
  }
}

void save_dataset(const std::string& path, const Dataset& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw LoadError(0, "cannot write '" + path + "'");
  write_dataset(out, data);
  if (!out) throw LoadError(0, "write to '" + path + "' failed");
}

std::pair<Dataset, Dataset> split(const Dataset& data, double fraction, Rng& rng) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw ContractViolation("split fraction must lie in (0, 1)");
  }
  const std::size_t n = data.size();
  const auto first_size = std::min<std::size_t>(
      n, static_cast<std::size_t>(std::ceil(static_cast<double>(n) * fraction - 1e-9)));

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  std::sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(first_size));
  std::sort(order.begin() + static_cast<std::ptrdiff_t>(first_size), order.end());

  Dataset first{{}, data.label_space, data.feature_dim};
  Dataset second{{}, data.label_space, data.feature_dim};
  for (std::size_t i = 0; i < n; ++i) {
    (i < first_size ? first : second).bags.push_back(data.bags[order[i]]);
  }
  return {std::move(first), std::move(second)};
}

void SynthSpec::validate() const {
  if (n_bags == 0 || z == 0 || d == 0 || L == 0 || K_true == 0 || m_true == 0) {
    throw ConfigError("synthetic spec sizes must all be positive");
  }
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) {
    throw ConfigError("noise_sigma must be a finite non-negative number");
  }
}

Dataset generate_synthetic(const SynthSpec& spec) {
  spec.validate();
  Rng rng(spec.rng_seed);
  std::normal_distribution<double> unit(0.0, 1.0);

  // Planted projection and heads.
  std::vector<double> proj(spec.m_true * spec.d);
  const double proj_std = 1.0 / std::sqrt(static_cast<double>(spec.d));
  for (double& v : proj) v = proj_std * unit(rng);
  std::vector<double> heads(spec.L * spec.K_true * spec.m_true);
  for (double& v : heads) v = unit(rng);

  // Cluster centres.
  const std::size_t n_centers = 40 * spec.L * spec.K_true;
  std::vector<double> centers(n_centers * spec.d);
  for (double& v : centers) v = unit(rng);

  const std::size_t clusters_per_bag = std::min<std::size_t>(2, spec.z);
  std::uniform_int_distribution<std::size_t> pick_center(0, n_centers - 1);
  std::uniform_int_distribution<std::size_t> pick_local(0, clusters_per_bag - 1);
  const std::size_t n_inst = spec.n_bags * spec.z;
  std::vector<double> features(n_inst * spec.d);
  std::vector<std::size_t> local(clusters_per_bag);
  for (std::size_t b = 0; b < spec.n_bags; ++b) {
    for (auto& c : local) c = pick_center(rng);
    for (std::size_t i = 0; i < spec.z; ++i) {
      const std::size_t c = local[pick_local(rng)];
      double* x = features.data() + (b * spec.z + i) * spec.d;
      for (std::size_t j = 0; j < spec.d; ++j) {
        x[j] = centers[c * spec.d + j] + spec.noise_sigma * unit(rng);
      }
    }
  }

  // Planted scores max_k h_{l,k}' P x for every instance and label.
  std::vector<double> scores(n_inst * spec.L);
  std::vector<double> embedded(spec.m_true);
  for (std::size_t n = 0; n < n_inst; ++n) {
    const double* x = features.data() + n * spec.d;
    for (std::size_t i = 0; i < spec.m_true; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < spec.d; ++j) acc += proj[i * spec.d + j] * x[j];
      embedded[i] = acc;
    }
    for (std::size_t l = 0; l < spec.L; ++l) {
      double best = 0.0;
      for (std::size_t k = 0; k < spec.K_true; ++k) {
        const double* h = heads.data() + (l * spec.K_true + k) * spec.m_true;
        double s = 0.0;
        for (std::size_t i = 0; i < spec.m_true; ++i) s += h[i] * embedded[i];
        if (k == 0 || s > best) best = s;
      }
      scores[n * spec.L + l] = best;
    }
  }

  // Per-label threshold at the (1 - 1/L) quantile of instance scores.
  std::vector<double> thresholds(spec.L);
  const auto n_positive = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(static_cast<double>(n_inst) /
                                               static_cast<double>(spec.L))));
  std::vector<double> column(n_inst);
  for (std::size_t l = 0; l < spec.L; ++l) {
    for (std::size_t n = 0; n < n_inst; ++n) column[n] = scores[n * spec.L + l];
    // Instances strictly above the (n_positive+1)-th largest score are positive.
    if (n_positive >= n_inst) {
      thresholds[l] = -std::numeric_limits<double>::infinity();
      continue;
    }
    auto nth = column.begin() + static_cast<std::ptrdiff_t>(n_positive);
    std::nth_element(column.begin(), nth, column.end(), std::greater<>());
    thresholds[l] = *nth;
  }

  Dataset data;
  data.label_space = LabelSpace(spec.L);
  data.feature_dim = spec.d;
  data.bags.reserve(spec.n_bags);
  const int width = static_cast<int>(std::to_string(spec.n_bags - 1).size());
  for (std::size_t b = 0; b < spec.n_bags; ++b) {
    std::vector<std::vector<LabelId>> instance_labels(spec.z);
    std::set<LabelId> bag_labels;
    for (std::size_t i = 0; i < spec.z; ++i) {
      const std::size_t n = b * spec.z + i;
      for (std::size_t l = 0; l < spec.L; ++l) {
        if (scores[n * spec.L + l] > thresholds[l]) {
          instance_labels[i].push_back(static_cast<LabelId>(l));
          bag_labels.insert(static_cast<LabelId>(l));
        }
      }
    }
    std::ostringstream id;
    id << "bag" << std::setw(width) << std::setfill('0') << b;
    std::vector<double> block(features.begin() + static_cast<std::ptrdiff_t>(b * spec.z * spec.d),
                              features.begin() +
                                  static_cast<std::ptrdiff_t>((b + 1) * spec.z * spec.d));
    data.bags.emplace_back(id.str(), spec.d, std::move(block),
                           std::vector<LabelId>(bag_labels.begin(), bag_labels.end()),
                           std::move(instance_labels));
  }
  return data;
}

}  // namespace mimlfast
