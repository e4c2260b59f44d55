// sketchparse command-line tool.
//
//   gen-data  --out DIR --seed N --per-class N --classes LIST
//   train     --train FILE --dev FILE --out MODELDIR [--epochs N --seed N --hidden N --loss-weights 1,2]
//   predict   --model MODELDIR --input FILE --out FILE
//   evaluate  --model MODELDIR --test FILE [--hard FILE] --report FILE
//   inspect   --sample JSON
//
// Exit codes: 0 success, 1 usage error, 2 data error.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "sketchparse/error.hpp"
#include "sketchparse/pipeline.hpp"

namespace sp = sketchparse;
using nlohmann::ordered_json;

namespace {

constexpr int kUsage = 1;
constexpr int kData = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw sp::Error(sp::ErrorCode::Io, "cannot write " + path.string());
  out << text;
}

ordered_json weights_json(const sp::pipeline::FusionWeights& w) {
  return {{"pattern", w.pattern}, {"pe", w.pe}, {"gen", w.gen}};
}

int gen_data(const std::string& out_dir, std::uint64_t seed, int per_class, const std::string& classes,
             int entities, int predicates) {
  sp::GenConfig cfg;
  cfg.seed = seed;
  cfg.samples_per_class = per_class;
  cfg.classes = classes.empty() ? sp::default_synthetic_classes() : split_list(classes);
  cfg.entity_vocab = entities;
  cfg.predicate_vocab = predicates;
  const auto& known = sp::synthetic_class_names();
  for (const auto& c : cfg.classes) {
    if (std::find(known.begin(), known.end(), c) == known.end()) throw UsageError("unknown class: " + c);
  }
  if (per_class <= 0) throw UsageError("--per-class must be positive");
  const auto corpus = sp::generate_synthetic(cfg);
  const auto parts = sp::split(corpus, {0.8, 0.1, 0.1}, seed);
  std::filesystem::create_directories(out_dir);
  const std::filesystem::path dir(out_dir);
  sp::save_jsonl(dir / "train.jsonl", parts.train);
  sp::save_jsonl(dir / "dev.jsonl", parts.dev);
  sp::save_jsonl(dir / "test.jsonl", parts.test);
  // Hard subset: test questions whose logical form uses more than one predicate.
  sp::Corpus hard;
  hard.split = sp::SplitTag::Hard;
  for (const auto& s : parts.test.samples) {
    const auto lf = s.parsed_form();
    if (std::count_if(lf.tokens.begin(), lf.tokens.end(), [](const auto& t) { return sp::is_predicate(t); }) > 1)
      hard.samples.push_back(s);
  }
  sp::save_jsonl(dir / "hard.jsonl", hard);
  std::cout << "wrote " << parts.train.size() << " train, " << parts.dev.size() << " dev, "
            << parts.test.size() << " test, " << hard.size() << " hard samples to " << out_dir << "\n";
  return 0;
}

int train(const std::string& train_path, const std::string& dev_path, const std::string& out_dir, int epochs,
          std::uint64_t seed, int hidden, const std::string& loss_weights) {
  sp::pipeline::SystemConfig cfg;
  cfg.seed = seed;
  cfg.multitask.epochs = epochs;
  cfg.multitask.hidden = hidden;
  const auto w = split_list(loss_weights);
  if (w.size() != 2) throw UsageError("--loss-weights expects two comma-separated numbers");
  try {
    cfg.multitask.weights = {std::stod(w[0]), std::stod(w[1])};
  } catch (const std::exception&) {
    throw UsageError("--loss-weights expects two comma-separated numbers");
  }
  if (epochs <= 0 || hidden <= 0) throw UsageError("--epochs and --hidden must be positive");

  const auto train_set = sp::load_jsonl(train_path, sp::SplitTag::Train);
  const auto dev_set = sp::load_jsonl(dev_path, sp::SplitTag::Dev);
  sp::pipeline::TrainSummary summary;
  const auto system = sp::pipeline::train_system(train_set, dev_set, cfg, &summary);
  sp::pipeline::save_system(system, out_dir);

  ordered_json log;
  auto& epochs_json = log["multitask_epochs"] = ordered_json::array();
  for (const auto& e : summary.multitask.epochs) {
    epochs_json.push_back({{"epoch", e.epoch},
                           {"train_loss", e.train_loss},
                           {"dev_sketch_accuracy", e.dev_sketch_accuracy},
                           {"dev_entity_accuracy", e.dev_entity_accuracy},
                           {"dev_joint_accuracy", e.dev_joint_accuracy}});
  }
  log["best_epoch"] = summary.multitask.best_epoch;
  log["dev_pattern_coverage"] = summary.dev_pattern_coverage;
  log["dev_base_matcher_top1"] = summary.dev_base_matcher_top1;
  log["dev_ensemble_top1"] = summary.dev_ensemble_top1;
  log["dev_baseline_accuracy"] = summary.dev_baseline_accuracy;
  log["dev_tuned_accuracy"] = summary.dev_tuned_accuracy;
  log["weights"] = weights_json(system.weights);
  write_text(std::filesystem::path(out_dir) / "train_log.json", log.dump(2) + "\n");
  std::cout << log.dump(2) << "\n";
  return 0;
}

int predict(const std::string& model_dir, const std::string& input, const std::string& output) {
  const auto system = sp::pipeline::load_system(model_dir);
  std::ifstream in(input);
  if (!in) throw sp::Error(sp::ErrorCode::Io, "cannot read " + input);
  std::ostringstream out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    ordered_json j;
    try {
      j = ordered_json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw sp::Error(sp::ErrorCode::ParseError, e.what(), line_no);
    }
    if (!j.is_object() || !j.contains("question") || !j["question"].is_string())
      throw sp::Error(sp::ErrorCode::ParseError, "missing \"question\"", line_no);
    const auto result = sp::pipeline::predict(j["question"].get<std::string>(), system);
    j["predicted_logical_form"] = result.logical_form;
    j["predicted_sketch_class"] = result.set.sketch_class;
    auto& cands = j["candidates"] = ordered_json::array();
    for (const auto& c : result.set.candidates) {
      cands.push_back({{"logical_form", c.logical_form},
                       {"pattern_score", c.pattern_score},
                       {"pe_score", c.pe_score},
                       {"gen_score", c.gen_score},
                       {"fused", c.fused}});
    }
    if (!result.diagnostic.empty()) j["diagnostic"] = result.diagnostic;
    out << j.dump() << "\n";
  }
  write_text(output, out.str());
  return 0;
}

int evaluate(const std::string& model_dir, const std::string& test, const std::string& hard,
             const std::string& report_path) {
  const auto system = sp::pipeline::load_system(model_dir);
  ordered_json report;
  report["weights"] = weights_json(system.weights);
  report["test"] = sp::pipeline::to_json(sp::pipeline::evaluate(sp::load_jsonl(test, sp::SplitTag::Test), system));
  if (!hard.empty())
    report["hard"] = sp::pipeline::to_json(sp::pipeline::evaluate(sp::load_jsonl(hard, sp::SplitTag::Hard), system));
  write_text(report_path, report.dump(2) + "\n");
  std::cout << report.dump(2) << "\n";
  return 0;
}

int inspect(const std::string& json) {
  const auto s = sp::sample_from_json_line(json);
  const auto lf = s.parsed_form();
  const auto sketch = sp::extract_sketch(lf, s.params);
  const auto order = sp::question_order(s.params);
  ordered_json j;
  j["sketch"] = sketch.str();
  auto& b = j["bindings"] = ordered_json::array();
  for (const auto& x : sketch.bindings) b.push_back({x.placeholder, x.value});
  j["question_pattern"] = sp::derive_question_pattern(s.question_tokens(), s.params).str();
  j["lf_pattern"] = sp::derive_lf_pattern(lf, s.params, order).str();
  j["template"] = sp::derive_template(lf, s.params, order).str();
  const auto tokens = s.question_tokens();
  const auto spans = sp::multitask::labeled_spans(s);
  const auto labels = sp::multitask::gold_labels(static_cast<int>(tokens.size()), spans);
  std::string tags;
  for (int l : labels) tags += sp::multitask::label_char(l);
  j["labels"] = tags;
  std::cout << j.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sketch-based semantic parser"};
  app.require_subcommand(1);

  std::string out_dir, classes, train_path, dev_path, model_dir, input, output, test, hard, report, sample;
  std::uint64_t seed = 7;
  int per_class = 100, entities = 200, predicates = 40;
  auto* gen = app.add_subcommand("gen-data", "Generate a synthetic corpus split into train/dev/test/hard");
  gen->add_option("--out", out_dir, "Output directory")->required();
  gen->add_option("--seed", seed, "Random seed");
  gen->add_option("--per-class", per_class, "Samples per sketch class");
  gen->add_option("--classes", classes, "Comma-separated class names (default: the eight standard classes)");
  gen->add_option("--entities", entities, "Entity vocabulary size");
  gen->add_option("--predicates", predicates, "Predicate vocabulary size");

  int epochs = 10, hidden = 64;
  std::uint64_t train_seed = 1;
  std::string loss_weights = "1,2";
  auto* tr = app.add_subcommand("train", "Train all components and tune fusion weights");
  tr->add_option("--train", train_path, "Training JSONL")->required();
  tr->add_option("--dev", dev_path, "Development JSONL")->required();
  tr->add_option("--out", model_dir, "Model directory")->required();
  tr->add_option("--epochs", epochs, "Multi-task epochs");
  tr->add_option("--seed", train_seed, "Random seed");
  tr->add_option("--hidden", hidden, "Encoder hidden size");
  tr->add_option("--loss-weights", loss_weights, "Sketch,labeling loss weights");

  auto* pr = app.add_subcommand("predict", "Predict logical forms for a JSONL file of questions");
  pr->add_option("--model", model_dir, "Model directory")->required();
  pr->add_option("--input", input, "Input JSONL")->required();
  pr->add_option("--out", output, "Output JSONL")->required();

  auto* ev = app.add_subcommand("evaluate", "Evaluate a model and write a JSON report");
  ev->add_option("--model", model_dir, "Model directory")->required();
  ev->add_option("--test", test, "Test JSONL")->required();
  ev->add_option("--hard", hard, "Hard-subset JSONL");
  ev->add_option("--report", report, "Report path")->required();

  auto* in = app.add_subcommand("inspect", "Show the sketch, patterns and template of one sample");
  in->add_option("--sample", sample, "Sample as a JSON object")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kUsage;
  }

  try {
    if (*gen) return gen_data(out_dir, seed, per_class, classes, entities, predicates);
    if (*tr) return train(train_path, dev_path, model_dir, epochs, train_seed, hidden, loss_weights);
    if (*pr) return predict(model_dir, input, output);
    if (*ev) return evaluate(model_dir, test, hard, report);
    if (*in) return inspect(sample);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const sp::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.is_data_error() ? kData : kUsage;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kData;
  }
  return kUsage;
}
