#pragma once

// Stage-three scorers: the question-pattern / logical-form-pattern matcher
// (predicate and entity-order selection) with in-class negative sampling,
// ranking-sampling refits and ensembling, plus the predicate-entity
// co-occurrence scorer.

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "sketchparse/data.hpp"
#include "sketchparse/learn.hpp"

namespace sketchparse::matchers {

using learn::Matrix;
using learn::Vector;

// Pattern identity with numeric literals masked.
std::string pattern_key(const LfPattern& pattern);

struct IndexEntry {
  LfPattern pattern;
  LfTemplate tmpl;
  std::string key;
  int frequency = 0;
};

struct PatternIndex {
  std::map<std::string, std::vector<IndexEntry>> classes;  // sketch class -> entries

  const std::vector<IndexEntry>* entries(const std::string& sketch_class) const;
  int find(const std::string& sketch_class, const std::string& key) const;  // -1 if absent
  std::size_t size() const;
};

struct GoldPattern {
  std::string sketch_class;
  QuestionPattern question;
  LfPattern pattern;
  LfTemplate tmpl;
};
GoldPattern gold_pattern(const Sample& sample);

// Throws EmptyCorpus.
PatternIndex build_pattern_index(const Corpus& train);
// Fraction of samples whose (class, pattern) is present in the index.
double pattern_coverage(const PatternIndex& index, const Corpus& corpus);

struct PatternPairSample {
  QuestionPattern question;
  LfPattern pattern;
  int label = 0;
  std::string sketch_class;
};

// Up to k distinct same-class patterns other than `gold`, uniform without
// replacement. Throws EmptyClass when the class has no entries.
std::vector<PatternPairSample> sample_negatives(const QuestionPattern& question, const LfPattern& gold,
                                                const std::string& gold_class,
                                                const PatternIndex& index, int k, std::uint64_t seed);

// Unigrams plus adjacent bigrams; feeds both sides of the pair encoder.
TokenSeq matcher_tokens(std::span<const std::string> tokens);

struct MatcherModel {
  learn::Vocab vocab;
  learn::EncoderParams encoder;
  learn::LinearHead head;  // 2 x 4h

  static MatcherModel zeros(learn::Vocab vocab, int hidden);
  static MatcherModel init(learn::Vocab vocab, int hidden, learn::Rng& rng);
};

// Probability of the "match" class for already-encoded ids.
double score_ids(std::span<const int> a, std::span<const int> b, const MatcherModel& model);
// P(label = 1 | question pattern, logical-form pattern). Throws EmptyInput.
double score_pair(const QuestionPattern& question, const LfPattern& pattern, const MatcherModel& model);

struct MatcherGrads {
  Matrix embeddings;
  learn::LinearHeadGrad head;

  explicit MatcherGrads(const MatcherModel& model);
  void set_zero();
};

// Two-class cross-entropy; accumulates gradients when asked.
double pair_loss(const MatcherModel& model, std::span<const int> a, std::span<const int> b, int label,
                 MatcherGrads* grads = nullptr);

struct RankingSampling {
  double threshold = 1e-4;
  int hard_picks = 20;
  int easy_picks = 5;
};

struct ScoredNegative {
  LfPattern pattern;
  double probability = 0.0;
};

struct ResamplePool {
  QuestionPattern question;
  LfPattern gold;
  std::string sketch_class;
  std::vector<ScoredNegative> negatives;
};

struct ResampleResult {
  std::vector<PatternPairSample> samples;  // positives and picked negatives
  std::size_t hard = 0;
  std::size_t easy = 0;
};

// Per pool: min(hard_picks, #p > threshold) hard and min(easy_picks,
// #p <= threshold) easy negatives, uniform without replacement, plus the gold.
ResampleResult ranking_resample(std::span<const ResamplePool> pools, const RankingSampling& cfg,
                                std::uint64_t seed);

// Scores every same-class non-gold pattern of each training sample.
std::vector<ResamplePool> score_pools(const MatcherModel& model, const Corpus& train,
                                      const PatternIndex& index);

struct MatcherConfig {
  int hidden = 64;
  int negatives = 20;
  int base_epochs = 3;
  int refit_models = 2;
  int refit_epochs = 2;
  int batch_size = 32;
  double learning_rate = 1e-2;
  std::uint64_t seed = 1;
  RankingSampling sampling;
};

struct MatcherEnsemble {
  std::vector<MatcherModel> members;

  // Arithmetic mean of member probabilities.
  double score(const QuestionPattern& question, const LfPattern& pattern) const;
};

// Base model on uniform in-class negatives, then `refit_models` models
// continued from the base on ranking-resampled negatives (resampled every
// epoch from the base model's scores). Throws EmptyCorpus.
MatcherEnsemble train_matcher_ensemble(const Corpus& train, const Corpus& dev,
                                       const PatternIndex& index, const MatcherConfig& cfg);

// Fraction of samples whose gold pattern outscores every other same-class
// pattern under `score`.
template <typename ScoreFn>
double top1_pattern_accuracy(const Corpus& corpus, const PatternIndex& index, ScoreFn&& score);

using PredicateEntity = std::pair<std::string, std::string>;

// For each parenthesized group (and each turn's top level), every predicate
// directly inside it paired with every entity surface directly inside it.
std::vector<PredicateEntity> predicate_entity_pairs(const LogicalForm& lf,
                                                    const std::set<std::string>& entities);

struct CooccurrenceConfig {
  int hidden = 32;
  int negatives = 5;
  int epochs = 10;
  int batch_size = 32;
  double learning_rate = 1e-2;
  std::uint64_t seed = 1;
};

struct CooccurrenceModel {
  std::set<PredicateEntity> pairs;
  std::vector<std::string> predicates;
  MatcherModel scorer;

  bool seen(const std::string& predicate, const std::string& entity) const {
    return pairs.contains({predicate, entity});
  }
  double pair_probability(const std::string& predicate, const std::string& entity) const;
};

// Records every training (predicate, entity) pair and trains the pair scorer
// against predicates never seen with the entity.
CooccurrenceModel build_cooccurrence(const Corpus& train, const CooccurrenceConfig& cfg);

// Mean pair probability over the candidate's pairs; 0.5 when it has none.
double score_candidate_pe(const LogicalForm& candidate, const std::set<std::string>& entities,
                          const CooccurrenceModel& model);

learn::ArrayMap to_arrays(const MatcherModel& model, const std::string& prefix);
void from_arrays(MatcherModel& model, const learn::ArrayMap& arrays, const std::string& prefix);

// ---------------------------------------------------------------------------

template <typename ScoreFn>
double top1_pattern_accuracy(const Corpus& corpus, const PatternIndex& index, ScoreFn&& score) {
  if (corpus.empty()) return 0.0;
  std::size_t hits = 0;
  for (const auto& s : corpus.samples) {
    const auto gold = gold_pattern(s);
    const auto* entries = index.entries(gold.sketch_class);
    const auto key = pattern_key(gold.pattern);
    if (!entries || index.find(gold.sketch_class, key) < 0) continue;
    const double gold_score = score(gold.question, gold.pattern);
    bool best = true;
    for (const auto& e : *entries) {
      if (e.key == key) continue;
      if (score(gold.question, e.pattern) >= gold_score) {
        best = false;
        break;
      }
    }
    hits += best;
  }
  return static_cast<double>(hits) / static_cast<double>(corpus.size());
}

}  // namespace sketchparse::matchers
