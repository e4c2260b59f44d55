#pragma once

// Whole-sequence reranking signal: the conditional loss of a split logical
// form given the question, normalized per candidate pool as 1 - loss / max.
//
// Each member is a class-conditional bigram model over split logical-form
// words mixed with a copy distribution over the question words:
//   p(w | prev, q) = lambda * count_q(w) / |q| + (1 - lambda) * bigram(w | prev)
//   bigram(w | prev) = (c(prev, w) + alpha) / (c(prev) + alpha * |V|)
// where V is the training target vocabulary plus one unknown slot.

#include <map>
#include <string>
#include <vector>

#include "sketchparse/data.hpp"

namespace sketchparse::genscore {

inline constexpr std::string_view kBos = "<s>";
inline constexpr std::string_view kEos = "</s>";
inline constexpr std::string_view kAnyClass = "*";

// Predicates and entities split on '_', '.', ':' (dropping "mso"); other
// tokens are kept as they are.
TokenSeq split_logical_form(std::span<const std::string> tokens);

struct BigramCounts {
  std::map<std::string, std::map<std::string, double>> next;  // prev -> w -> count
  std::map<std::string, double> total;                        // prev -> count
};

struct GenModel {
  double copy_weight = 0.5;     // lambda
  double smoothing = 0.1;       // alpha
  double lexical_weight = 0.0;  // share of the non-copy branch given to the question lexicon
  std::vector<std::string> vocabulary;        // sorted target words, excluding the unknown slot
  std::map<std::string, BigramCounts> counts;  // sketch class (and "*") -> counts
  BigramCounts lexicon;                        // question word -> target word -> count

  std::size_t vocab_size() const { return vocabulary.size() + 1; }
  const BigramCounts& counts_for(const std::string& sketch_class) const;
  double bigram(const BigramCounts& c, const std::string& prev, const std::string& word) const;
  // Mean over question words v of the smoothed t(word | v).
  double lexical(std::span<const std::string> question, const std::string& word) const;
};

// Mean -log p over the target words, where
// p = lambda * copy + (1 - lambda) * ((1 - mu) * bigram + mu * lexical).
// Throws EmptyCandidate.
double seq_loss(std::span<const std::string> question, std::span<const std::string> split_lf,
                const GenModel& model, const std::string& sketch_class = std::string(kAnyClass));

struct NormalizedScores {
  std::vector<double> scores;
  bool all_zero = false;  // every loss was 0; scores are all 1
};

// score_i = 1 - loss_i / max(loss). Throws EmptyCandidate on an empty list.
NormalizedScores normalize_losses(std::span<const double> losses);

struct MemberConfig {
  double copy_weight;
  double smoothing;
  double lexical_weight = 0.9;
};

struct GenConfig {
  std::vector<MemberConfig> members = {{0.3, 0.1}, {0.5, 0.1}, {0.7, 0.1}};
};

GenModel fit_member(const Corpus& train, MemberConfig member);

struct GenEnsemble {
  std::vector<GenModel> members;

  // Mean over members of the per-pool normalized scores.
  std::vector<double> score_pool(std::span<const std::string> question,
                                 const std::vector<TokenSeq>& split_candidates,
                                 const std::string& sketch_class) const;
};

// Throws EmptyCorpus.
GenEnsemble fit_genmodel(const Corpus& train, const GenConfig& cfg = {});

}  // namespace sketchparse::genscore
