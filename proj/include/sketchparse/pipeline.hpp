#pragma once

// End-to-end orchestration: candidate generation from the predicted sketch
// class and labeled spans, score fusion and ranking, fusion-weight tuning,
// evaluation metrics and model persistence.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "sketchparse/data.hpp"
#include "sketchparse/genscore.hpp"
#include "sketchparse/matchers.hpp"
#include "sketchparse/multitask.hpp"

namespace sketchparse::pipeline {

struct FusionWeights {
  double pattern = 1.0;
  double pe = 0.0;
  double gen = 0.0;

  bool operator==(const FusionWeights&) const = default;
};

struct Candidate {
  std::string logical_form;
  int entry = -1;  // position in the class's index entries
  LfPattern pattern;
  int frequency = 0;
  double pattern_score = 0.0;
  double pe_score = 0.5;
  double gen_score = 0.0;
  double fused = 0.0;
};

struct CandidateSet {
  std::string sketch_class;
  std::vector<Span> spans;
  std::vector<std::string> entity_fillers;  // non-numeric spans, question order
  std::vector<std::string> value_fillers;   // numeric spans, question order
  QuestionPattern question_pattern;
  std::vector<Candidate> candidates;

  bool empty() const { return candidates.empty(); }
};

// Fills every template of `sketch_class` whose arity matches the spans:
// numeric spans fill value slots, the rest fill entity slots and then any
// type slots, all in question order. Mismatched templates are skipped.
CandidateSet generate_candidates(std::span<const std::string> question, const std::string& sketch_class,
                                 const std::vector<Span>& spans, const matchers::PatternIndex& index);
CandidateSet generate_candidates(std::span<const std::string> question,
                                 const multitask::MultiTaskModel& model,
                                 const matchers::PatternIndex& index);

struct Scorers {
  const matchers::PatternIndex* index = nullptr;
  const matchers::MatcherEnsemble* matchers = nullptr;
  const matchers::CooccurrenceModel* cooccurrence = nullptr;
  const genscore::GenEnsemble* gen = nullptr;
};

// Fills pattern_score, pe_score and gen_score of every candidate.
void score_candidates(CandidateSet& set, std::span<const std::string> question, const Scorers& scorers);

// fused = w . scores, sorted descending; ties by index frequency, then by
// logical-form string.
std::vector<Candidate> rank(std::vector<Candidate> candidates, const FusionWeights& w);

struct ScoredPool {
  std::vector<Candidate> candidates;
  std::string gold;
};

double pool_accuracy(const std::vector<ScoredPool>& pools, const FusionWeights& w);

// Exhaustive simplex grid; ties prefer larger w.pattern, then larger w.pe.
// Throws EmptyCorpus.
FusionWeights tune_weights(const std::vector<ScoredPool>& dev, double step = 0.05,
                           int* evaluated = nullptr);

struct SystemConfig {
  std::uint64_t seed = 1;
  multitask::TrainConfig multitask;
  matchers::MatcherConfig matcher;
  matchers::CooccurrenceConfig cooccurrence;
  genscore::GenConfig gen;
  double grid_step = 0.05;
};

struct System {
  multitask::MultiTaskModel multitask;
  matchers::PatternIndex index;
  matchers::MatcherEnsemble matchers;
  matchers::CooccurrenceModel cooccurrence;
  genscore::GenEnsemble gen;
  FusionWeights weights;

  Scorers scorers() const { return {&index, &matchers, &cooccurrence, &gen}; }
};

struct TrainSummary {
  multitask::TrainLog multitask;
  double dev_pattern_coverage = 0.0;
  double dev_baseline_accuracy = 0.0;  // weights (1, 0, 0)
  double dev_tuned_accuracy = 0.0;
  double dev_base_matcher_top1 = 0.0;
  double dev_ensemble_top1 = 0.0;
};

// Throws EmptyCorpus.
System train_system(const Corpus& train, const Corpus& dev, const SystemConfig& cfg,
                    TrainSummary* summary = nullptr);

struct PredictionResult {
  CandidateSet set;  // candidates ranked
  std::string logical_form;
  std::string diagnostic;  // set when no candidate exists
};

PredictionResult predict(std::string_view question, const System& system);

// Scored, unranked candidate pool for a sample (used for weight tuning).
ScoredPool scored_pool(const Sample& sample, const System& system);

// Metrics.

struct SampleOutcome {
  std::string gold_class;  // inventory class used for scoring
  std::string predicted_class;
  bool sketch_ok = false;
  bool entity_ok = false;
  bool lf_ok = false;
  bool gold_generated = false;
  bool no_candidates = false;
  bool inventory_miss = false;
  bool near_miss = false;
  std::string taxonomy;  // empty when lf_ok
};

// Compares a prediction against the gold sample. `classes` is the model's
// sketch inventory (gold sketches outside it map to the nearest class).
SampleOutcome assess(const Sample& gold, const PredictionResult& prediction,
                     const std::vector<std::string>& classes);

struct ClassMetrics {
  std::size_t count = 0;
  double err_s = 0.0;
  double err_e = 0.0;
  double err_m = 0.0;
  double err_l = 0.0;
};

struct MetricsReport {
  std::map<std::string, ClassMetrics> per_class;
  ClassMetrics overall;
  double gold_inclusion = 0.0;
  double pattern_coverage = 0.0;
  std::map<std::string, std::size_t> taxonomy;
  std::size_t near_misses = 0;
  std::size_t inventory_misses = 0;
};

MetricsReport compute_metrics(std::span<const SampleOutcome> outcomes);
MetricsReport evaluate(const Corpus& corpus, const System& system);
nlohmann::ordered_json to_json(const MetricsReport& report);

// True when the forms differ only by the order of exchangeable
// "( or ( equal ?x A ) ( equal ?x B ) )" arguments.
bool exchangeable_near_miss(const std::string& predicted, const std::string& gold);

// Persistence: MODELDIR/model.json (metadata) and MODELDIR/arrays.bin.
void save_system(const System& system, const std::filesystem::path& dir);
System load_system(const std::filesystem::path& dir);

}  // namespace sketchparse::pipeline
