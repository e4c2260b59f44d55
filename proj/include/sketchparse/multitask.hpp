#pragma once

// Joint sketch classification and CRF entity labeling over one shared
// embedding encoder. Loss = w_sketch * CE(sketch) + w_label * NLL(CRF).

#include <cstdint>
#include <string>
#include <vector>

#include "sketchparse/crf.hpp"
#include "sketchparse/data.hpp"
#include "sketchparse/learn.hpp"

namespace sketchparse::multitask {

enum Label : int { kB = 0, kI = 1, kO = 2, kP = 3 };
inline constexpr int kNumLabels = 4;
char label_char(int label);

// b/i/o labels over `length` real tokens for the given (non-overlapping) spans.
LabelSeq gold_labels(int length, std::span<const Span> spans);

// Maximal b i* runs in order; a stray i opens a new span. Stops at the first p.
std::vector<Span> extract_entities(std::span<const std::string> question, std::span<const int> labels);

// Gold labeling spans of a sample: every parameter span, deduplicated.
// Throws OverlappingSpans.
std::vector<Span> labeled_spans(const Sample& sample);

struct MultiTaskModel {
  learn::Vocab vocab;
  learn::EncoderParams encoder;
  learn::LinearHead classifier;  // k_s x h
  learn::LinearHead emitter;     // k_e x (2w+1)h
  Matrix transitions;            // k_e x k_e, [from, to]
  std::vector<std::string> classes;
  int max_length = 64;

  int class_count() const { return static_cast<int>(classes.size()); }
  int class_index(const std::string& sketch) const;  // -1 if absent

  static MultiTaskModel zeros(learn::Vocab vocab, std::vector<std::string> classes, int hidden,
                              int window);
  static MultiTaskModel init(learn::Vocab vocab, std::vector<std::string> classes, int hidden,
                             int window, learn::Rng& rng);
};

// Inventory class with the largest token-overlap (Jaccard) with `sketch`;
// ties go to the earlier class.
int nearest_class(const std::string& sketch, const std::vector<std::string>& classes);

// Softmax over sketch classes.
Vector classify_sketch(std::span<const std::string> question, const MultiTaskModel& model);

// k_e x n emissions for the real tokens; the p label is masked to -inf.
Matrix emission_scores(std::span<const int> ids, const MultiTaskModel& model);

// Viterbi labels padded with p up to max_length.
LabelSeq label_question(std::span<const std::string> question, const MultiTaskModel& model);

struct Prediction {
  int sketch = -1;
  Vector probabilities;
  LabelSeq labels;
  std::vector<Span> spans;
};
Prediction predict(std::span<const std::string> question, const MultiTaskModel& model);

struct LossWeights {
  double sketch = 1.0;
  double labeling = 2.0;
};

struct Example {
  std::vector<int> ids;
  int sketch = 0;
  LabelSeq labels;  // real tokens only
};

// Builds a training example; unseen sketches map to the nearest class.
Example make_example(const Sample& sample, const MultiTaskModel& model);

struct Grads {
  Matrix embeddings;
  learn::LinearHeadGrad classifier;
  learn::LinearHeadGrad emitter;
  Matrix transitions;

  explicit Grads(const MultiTaskModel& model);
  void set_zero();
};

struct JointLoss {
  double sketch = 0.0;
  double labeling = 0.0;
  double total = 0.0;
};

// Loss of one example; accumulates weighted gradients into `grads` if given.
JointLoss joint_loss(const MultiTaskModel& model, const Example& ex, LossWeights weights,
                     Grads* grads = nullptr);

struct TrainConfig {
  int epochs = 10;
  std::uint64_t seed = 1;
  int hidden = 64;
  int window = 2;
  int batch_size = 32;
  double learning_rate = 1e-2;
  double word_dropout = 0.05;
  int max_length = 64;
  LossWeights weights;
};

struct EpochStats {
  int epoch = 0;
  double train_loss = 0.0;
  double dev_sketch_accuracy = 0.0;
  double dev_entity_accuracy = 0.0;
  double dev_joint_accuracy = 0.0;
};

struct TrainLog {
  std::vector<EpochStats> epochs;
  int best_epoch = 0;
};

// Returns the snapshot with the best dev joint accuracy (first on ties).
// Throws EmptyCorpus.
MultiTaskModel train_multitask(const Corpus& train, const Corpus& dev, const TrainConfig& cfg,
                               TrainLog* log = nullptr);

learn::ArrayMap to_arrays(const MultiTaskModel& model, const std::string& prefix);
void from_arrays(MultiTaskModel& model, const learn::ArrayMap& arrays, const std::string& prefix);

}  // namespace sketchparse::multitask
