#include "sketchparse/genscore.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "sketchparse/error.hpp"

namespace sketchparse::genscore {

TokenSeq split_logical_form(std::span<const std::string> tokens) {
  TokenSeq out;
  for (const auto& tok : tokens) {
    const bool compound = tok.find_first_of("_.:") != std::string::npos && !is_numeric_literal(tok) &&
                          !is_variable(tok);
    if (!compound) {
      out.push_back(tok);
      continue;
    }
    auto words = split_compound(tok);
    if (words.empty()) out.push_back(tok);
    for (auto& w : words) out.push_back(std::move(w));
  }
  return out;
}

const BigramCounts& GenModel::counts_for(const std::string& sketch_class) const {
  auto it = counts.find(sketch_class);
  if (it != counts.end()) return it->second;
  static const BigramCounts empty;
  auto any = counts.find(std::string(kAnyClass));
  return any != counts.end() ? any->second : empty;
}

double GenModel::bigram(const BigramCounts& c, const std::string& prev, const std::string& word) const {
  double pair = 0.0, total = 0.0;
  if (auto it = c.total.find(prev); it != c.total.end()) total = it->second;
  if (auto it = c.next.find(prev); it != c.next.end()) {
    if (auto jt = it->second.find(word); jt != it->second.end()) pair = jt->second;
  }
  return (pair + smoothing) / (total + smoothing * static_cast<double>(vocab_size()));
}

double GenModel::lexical(std::span<const std::string> question, const std::string& word) const {
  const double v = static_cast<double>(vocab_size());
  if (question.empty()) return 1.0 / v;
  double sum = 0.0;
  for (const auto& q : question) sum += bigram(lexicon, q, word);
  return sum / static_cast<double>(question.size());
}

double seq_loss(std::span<const std::string> question, std::span<const std::string> split_lf,
                const GenModel& model, const std::string& sketch_class) {
  if (split_lf.empty()) throw Error(ErrorCode::EmptyCandidate, "candidate has no tokens");
  const auto& counts = model.counts_for(sketch_class);
  const double qlen = static_cast<double>(question.size());
  auto copy_prob = [&](const std::string& w) {
    if (question.empty()) return 0.0;
    return static_cast<double>(std::count(question.begin(), question.end(), w)) / qlen;
  };
  const bool known_vocab = !model.vocabulary.empty();
  auto in_vocab = [&](const std::string& w) {
    return known_vocab && std::binary_search(model.vocabulary.begin(), model.vocabulary.end(), w);
  };
  double nll = 0.0;
  std::string prev(kBos);
  for (const auto& w : split_lf) {
    const std::string& key = in_vocab(w) ? w : std::string("<unk>");
    double generate = model.bigram(counts, prev, key);
    if (model.lexical_weight > 0.0)
      generate = (1.0 - model.lexical_weight) * generate + model.lexical_weight * model.lexical(question, key);
    const double p = model.copy_weight * copy_prob(w) + (1.0 - model.copy_weight) * generate;
    nll -= std::log(p);
    prev = key;
  }
  return nll / static_cast<double>(split_lf.size());
}

NormalizedScores normalize_losses(std::span<const double> losses) {
  if (losses.empty()) throw Error(ErrorCode::EmptyCandidate, "no losses to normalize");
  const double mx = *std::max_element(losses.begin(), losses.end());
  NormalizedScores out;
  if (!(mx > 0.0)) {
    out.scores.assign(losses.size(), 1.0);
    out.all_zero = true;
    return out;
  }
  out.scores.reserve(losses.size());
  for (double l : losses) out.scores.push_back(std::clamp(1.0 - l / mx, 0.0, 1.0));
  return out;
}

GenModel fit_member(const Corpus& train, MemberConfig member) {
  GenModel m;
  m.copy_weight = member.copy_weight;
  m.smoothing = member.smoothing;
  m.lexical_weight = member.lexical_weight;
  std::set<std::string> vocab;
  std::vector<std::pair<std::string, TokenSeq>> targets;
  for (const auto& s : train.samples) {
    auto words = split_logical_form(s.parsed_form().tokens);
    for (const auto& w : words) vocab.insert(w);
    for (const auto& q : s.question_tokens()) {
      for (const auto& w : words) {
        m.lexicon.next[q][w] += 1.0;
        m.lexicon.total[q] += 1.0;
      }
    }
    targets.emplace_back(s.sketch_class, std::move(words));
  }
  vocab.insert(std::string(kEos));
  m.vocabulary.assign(vocab.begin(), vocab.end());
  const std::string any(kAnyClass);
  for (const auto& [cls, words] : targets) {
    for (const std::string* key : {&cls, &any}) {
      auto& c = m.counts[*key];
      std::string prev(kBos);
      auto bump = [&](const std::string& w) {
        c.next[prev][w] += 1.0;
        c.total[prev] += 1.0;
        prev = w;
      };
      for (const auto& w : words) bump(w);
      bump(std::string(kEos));
    }
  }
  return m;
}

std::vector<double> GenEnsemble::score_pool(std::span<const std::string> question,
                                            const std::vector<TokenSeq>& split_candidates,
                                            const std::string& sketch_class) const {
  std::vector<double> mean(split_candidates.size(), 0.0);
  if (split_candidates.empty() || members.empty()) return mean;
  for (const auto& m : members) {
    std::vector<double> losses;
    losses.reserve(split_candidates.size());
    for (const auto& c : split_candidates) losses.push_back(seq_loss(question, c, m, sketch_class));
    const auto norm = normalize_losses(losses);
    for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += norm.scores[i];
  }
  for (auto& v : mean) v /= static_cast<double>(members.size());
  return mean;
}

GenEnsemble fit_genmodel(const Corpus& train, const GenConfig& cfg) {
  if (train.empty()) throw Error(ErrorCode::EmptyCorpus, "generation scorer needs training data");
  GenEnsemble e;
  for (const auto& member : cfg.members) e.members.push_back(fit_member(train, member));
  return e;
}

}  // namespace sketchparse::genscore
