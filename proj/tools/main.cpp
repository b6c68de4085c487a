// mimlfast command-line tool: synth, train, predict, eval, inspect.
//
// Exit codes: 0 success, 1 data or model error, 2 usage error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "mimlfast/data_io.hpp"
#include "mimlfast/evaluation.hpp"
#include "mimlfast/model_io.hpp"
#include "mimlfast/objective.hpp"
#include "mimlfast/scoring.hpp"
#include "mimlfast/training.hpp"

namespace {

using namespace mimlfast;
using ordered_json = nlohmann::ordered_json;

constexpr int kDataError = 1;
constexpr int kUsageError = 2;

// Output sink that is either stdout ("-") or a file.
class Output {
 public:
  explicit Output(const std::string& path) {
    if (path != "-") {
      file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
      if (!*file_) throw LoadError(0, "cannot write '" + path + "'");
    }
  }
  std::ostream& stream() { return file_ ? *file_ : std::cout; }

 private:
  std::unique_ptr<std::ofstream> file_;
};

struct TrainArgs {
  std::string data;
  std::string out;
  std::string history;
  std::string variant = "full";
  TrainConfig cfg;
};

struct PredictArgs {
  std::string model;
  std::string data;
  std::string out = "-";
};

struct EvalArgs {
  std::string model;
  std::string predictions;
  std::string data;
  std::string format = "text";
  bool with_key_instances = false;
};

struct InspectArgs {
  std::string model;
  std::string data;
  std::string out = "-";
  std::string format = "text";
};

struct SynthArgs {
  SynthSpec spec;
  std::string out;
};

Dataset load_for_model(const std::string& path, const Model& model) {
  Dataset data = load_dataset(path);
  check_compatible(model, data);
  return data;
}

int cmd_train(const TrainArgs& args) {
  TrainConfig cfg = args.cfg;
  cfg.variant = parse_variant(args.variant);
  cfg.validate();
  const Dataset data = load_dataset(args.data);
  const auto result = train(data, cfg);
  save_model(args.out, result.model);

  const std::string history_path =
      args.history.empty() ? args.out + ".history.jsonl" : args.history;
  Output history(history_path);
  for (const auto& h : result.state.history) {
    ordered_json rec;
    rec["iteration"] = h.iteration;
    rec["validation_ranking_loss"] = h.validation_ranking_loss;
    rec["cumulative_loss"] = h.cumulative_loss;
    rec["running_mean_loss"] =
        h.iteration == 0 ? 0.0 : h.cumulative_loss / static_cast<double>(h.iteration);
    history.stream() << rec.dump() << '\n';
  }
  std::cerr << "trained " << result.state.t << " iterations on " << data.size()
            << " bags (validation " << result.state.validation_size
            << "); best validation ranking loss " << result.state.best_val_rankloss
            << " at iteration " << result.state.best_iteration << '\n';
  return 0;
}

int cmd_predict(const PredictArgs& args) {
  const Model model = load_model(args.model);
  const Dataset data = load_for_model(args.data, model);
  Output out(args.out);
  for (const auto& bag : data.bags) {
    auto scores = label_scores(model, bag);
    const auto relevant = model.variant() == Variant::TopR
                              ? predict_top_r(scores, model.top_r())
                              : predict_relevant_from_scores(scores);
    const double dummy = scores.back();
    scores.pop_back();
    const auto pos = rank_positions(scores);
    std::vector<LabelId> order(scores.size());
    for (LabelId l = 0; l < scores.size(); ++l) order[pos[l]] = l;

    ordered_json rec;
    rec["id"] = bag.id();
    auto ranking = ordered_json::array();
    for (LabelId l : order) ranking.push_back({{"label", l}, {"score", scores[l]}});
    rec["ranking"] = std::move(ranking);
    rec["dummy_score"] = dummy;
    rec["relevant"] = relevant;
    out.stream() << rec.dump() << '\n';
  }
  return 0;
}

// Reads predict output back into per-bag predictions and scores, ordered
// like the truth dataset.
void read_predictions(const std::string& path, const Dataset& data, LabelSets& predicted,
                      ScoreTable& scores) {
  std::ifstream in(path);
  if (!in) throw LoadError(0, "cannot open '" + path + "'");
  const std::size_t L = data.label_space.num_labels();
  std::map<std::string, std::pair<std::vector<LabelId>, std::vector<double>>> by_id;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(text);
      std::vector<double> s(L, 0.0);
      std::vector<bool> seen(L, false);
      for (const auto& entry : rec.at("ranking")) {
        const auto l = entry.at("label").get<std::size_t>();
        if (l >= L) throw LoadError(line, "ranking label out of range");
        s[l] = entry.at("score").get<double>();
        seen[l] = true;
      }
      for (bool b : seen) {
        if (!b) throw LoadError(line, "ranking does not cover every label");
      }
      auto rel = rec.at("relevant").get<std::vector<LabelId>>();
      for (LabelId l : rel) {
        if (l >= L) throw LoadError(line, "relevant label out of range");
      }
      by_id[rec.at("id").get<std::string>()] = {std::move(rel), std::move(s)};
    } catch (const nlohmann::json::exception& e) {
      throw LoadError(line, std::string("bad prediction record: ") + e.what());
    }
  }
  for (const auto& bag : data.bags) {
    auto it = by_id.find(bag.id());
    if (it == by_id.end()) throw LoadError(0, "no prediction for bag '" + bag.id() + "'");
    predicted.push_back(it->second.first);
    scores.push_back(it->second.second);
  }
}

int cmd_eval(const EvalArgs& args) {
  if (args.model.empty() == args.predictions.empty()) {
    throw ConfigError("eval needs exactly one of --model or --predictions");
  }
  if (args.with_key_instances && args.model.empty()) {
    throw ConfigError("--with-key-instances needs --model");
  }
  EvalReport report;
  if (!args.model.empty()) {
    const Model model = load_model(args.model);
    const Dataset data = load_for_model(args.data, model);
    report = evaluate(model, data, args.with_key_instances);
  } else {
    const Dataset data = load_dataset(args.data);
    LabelSets predicted;
    ScoreTable scores;
    read_predictions(args.predictions, data, predicted, scores);
    report = evaluate(predicted, scores, truth_sets(data), data.label_space.num_labels());
  }
  if (args.format == "records") {
    std::cout << report.to_record() << '\n';
  } else {
    std::cout << report.to_text();
  }
  return 0;
}

int cmd_inspect(const InspectArgs& args) {
  const Model model = load_model(args.model);
  const Dataset data = load_for_model(args.data, model);
  Output out(args.out);
  const bool records = args.format == "records";
  for (const auto& bag : data.bags) {
    if (bag.labels().empty()) continue;
    const EmbeddedBag embedded(model, bag);
    for (LabelId l : bag.labels()) {
      const auto s = bag_score(model, embedded, l);
      if (records) {
        ordered_json rec;
        rec["id"] = bag.id();
        rec["label"] = l;
        rec["key_instance"] = s.key_instance;
        rec["sub_concept"] = s.sub_concept;
        rec["score"] = s.score;
        if (bag.has_instance_labels()) {
          rec["key_instance_correct"] = bag.instance_has_label(s.key_instance, l);
        }
        out.stream() << rec.dump() << '\n';
      } else {
        out.stream() << bag.id() << '\t' << l << '\t' << s.key_instance << '\t'
                     << s.sub_concept << '\t' << s.score << '\n';
      }
    }
  }
  const auto hist = sub_concept_report(model, data);
  if (records) {
    ordered_json rec;
    rec["sub_concept_histogram"] = hist.counts;
    out.stream() << rec.dump() << '\n';
  } else {
    for (std::size_t l = 0; l < hist.counts.size(); ++l) {
      out.stream() << "# label " << l << " sub-concepts:";
      for (auto c : hist.counts[l]) out.stream() << ' ' << c;
      out.stream() << '\n';
    }
  }
  return 0;
}

int cmd_synth(const SynthArgs& args) {
  args.spec.validate();
  const Dataset data = generate_synthetic(args.spec);
  Output out(args.out);
  write_dataset(out.stream(), data);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mimlfast: multi-instance multi-label learning with a shared low-rank space"};
  app.require_subcommand(1);

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "Train a model on a JSON-lines dataset");
  train_cmd->add_option("--data", train_args.data, "Training dataset")->required();
  train_cmd->add_option("--out", train_args.out, "Model output path")->required();
  train_cmd->add_option("--history", train_args.history,
                        "Training history JSON-lines (default: <out>.history.jsonl)");
  auto& cfg = train_args.cfg;
  train_cmd->add_option("--m", cfg.m, "Shared-space dimension; typical grid {50,100,200}")
      ->capture_default_str();
  train_cmd->add_option("--K", cfg.K, "Sub-concepts per label; typical grid {1,5,10,15}")
      ->capture_default_str();
  train_cmd->add_option("--C", cfg.C, "L2 norm bound; typical grid {1,5,10}")
      ->capture_default_str();
  train_cmd
      ->add_option("--gamma0", cfg.gamma0,
                   "Initial step size; typical grid {0.0001,0.0005,0.001,0.005}")
      ->capture_default_str();
  train_cmd
      ->add_option("--eta", cfg.eta,
                   "Step decay, gamma_t = gamma0/(1+eta*gamma0*t); typical grid {1e-5,1e-6}")
      ->capture_default_str();
  train_cmd->add_option("--max-iters", cfg.max_iters, "Maximum SGD iterations")
      ->capture_default_str();
  train_cmd->add_option("--eval-every", cfg.eval_every, "Iterations between validation checks")
      ->capture_default_str();
  train_cmd->add_option("--patience", cfg.patience,
                        "Validation checks without improvement before stopping")
      ->capture_default_str();
  train_cmd->add_option("--val-fraction", cfg.validation_fraction,
                        "Fraction of bags held out for early stopping")
      ->capture_default_str();
  train_cmd->add_option("--seed", cfg.rng_seed, "Random seed")->capture_default_str();
  train_cmd->add_option("--variant", train_args.variant, "full, v1 (no shared space) or v2 (top-r)")
      ->check(CLI::IsMember({"full", "v1", "v2"}))
      ->capture_default_str();

  PredictArgs predict_args;
  auto* predict_cmd = app.add_subcommand("predict", "Rank labels and predict relevant sets");
  predict_cmd->add_option("--model", predict_args.model, "Model file")->required();
  predict_cmd->add_option("--data", predict_args.data, "Dataset to score")->required();
  predict_cmd->add_option("--out", predict_args.out, "Output JSON-lines ('-' for stdout)")
      ->capture_default_str();

  EvalArgs eval_args;
  auto* eval_cmd = app.add_subcommand("eval", "Compute the five MIML criteria");
  eval_cmd->add_option("--data", eval_args.data, "Dataset with ground-truth labels")->required();
  eval_cmd->add_option("--model", eval_args.model, "Model file to evaluate");
  eval_cmd->add_option("--predictions", eval_args.predictions, "Output of `predict` to score");
  eval_cmd->add_flag("--with-key-instances", eval_args.with_key_instances,
                     "Also report key-instance accuracy and sub-concept usage");
  eval_cmd->add_option("--format", eval_args.format, "text or records")
      ->check(CLI::IsMember({"text", "records"}))
      ->capture_default_str();

  InspectArgs inspect_args;
  auto* inspect_cmd =
      app.add_subcommand("inspect", "Key instance and sub-concept per (bag, relevant label)");
  inspect_cmd->add_option("--model", inspect_args.model, "Model file")->required();
  inspect_cmd->add_option("--data", inspect_args.data, "Dataset")->required();
  inspect_cmd->add_option("--out", inspect_args.out, "Output path ('-' for stdout)")
      ->capture_default_str();
  inspect_cmd->add_option("--format", inspect_args.format, "text or records")
      ->check(CLI::IsMember({"text", "records"}))
      ->capture_default_str();

  SynthArgs synth_args;
  auto& spec = synth_args.spec;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a planted-model dataset");
  synth_cmd->add_option("--out", synth_args.out, "Output path ('-' for stdout)")->required();
  synth_cmd->add_option("--n", spec.n_bags, "Number of bags")->capture_default_str();
  synth_cmd->add_option("--z", spec.z, "Instances per bag")->capture_default_str();
  synth_cmd->add_option("--d", spec.d, "Feature dimension")->capture_default_str();
  synth_cmd->add_option("--L", spec.L, "Number of labels")->capture_default_str();
  synth_cmd->add_option("--K-true", spec.K_true, "Planted sub-concepts per label")
      ->capture_default_str();
  synth_cmd->add_option("--m-true", spec.m_true, "Planted shared-space dimension")
      ->capture_default_str();
  synth_cmd->add_option("--noise", spec.noise_sigma, "Feature noise standard deviation")
      ->capture_default_str();
  synth_cmd->add_option("--seed", spec.rng_seed, "Random seed")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsageError;
  }

  try {
    if (*train_cmd) return cmd_train(train_args);
    if (*predict_cmd) return cmd_predict(predict_args);
    if (*eval_cmd) return cmd_eval(eval_args);
    if (*inspect_cmd) return cmd_inspect(inspect_args);
    if (*synth_cmd) return cmd_synth(synth_args);
  } catch (const ConfigError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kDataError;
  }
  return kUsageError;
}
