#include "sketchparse/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "sketchparse/error.hpp"

namespace sketchparse::pipeline {

namespace {

bool is_numeric_span(std::span<const std::string> question, Span s) {
  return s.length() == 1 && is_numeric_literal(question[s.start]);
}

// Entity fillers and type fillers for one template, or false when the spans
// do not fit it.
bool assign_fillers(const LfTemplate& tmpl, const std::vector<std::string>& surfaces,
                    std::vector<std::string>& entities, std::vector<std::string>& types) {
  const auto arity = static_cast<std::size_t>(tmpl.entity_arity);
  const auto type_count = tmpl.type_slots.size();
  if (surfaces.size() == arity) {
    entities = surfaces;
    types.clear();
    return true;
  }
  if (type_count == 0 || surfaces.size() != arity + type_count) return false;
  entities.assign(surfaces.begin(), surfaces.begin() + static_cast<std::ptrdiff_t>(arity));
  types.assign(surfaces.begin() + static_cast<std::ptrdiff_t>(arity), surfaces.end());
  return true;
}

}  // namespace

CandidateSet generate_candidates(std::span<const std::string> question, const std::string& sketch_class,
                                 const std::vector<Span>& spans, const matchers::PatternIndex& index) {
  CandidateSet set;
  set.sketch_class = sketch_class;
  set.spans = spans;
  std::vector<Span> entity_spans;
  for (const auto& s : spans) {
    if (is_numeric_span(question, s)) {
      set.value_fillers.push_back(question[s.start]);
    } else {
      entity_spans.push_back(s);
      set.entity_fillers.push_back(span_surface(question, s));
    }
  }
  set.question_pattern = question_pattern_from_spans(question, entity_spans);

  const auto* entries = index.entries(sketch_class);
  if (!entries) return set;
  std::set<std::string> seen;
  std::vector<std::string> fillers, types;
  for (std::size_t i = 0; i < entries->size(); ++i) {
    const auto& e = (*entries)[i];
    if (e.tmpl.value_slots.size() != set.value_fillers.size()) continue;
    if (!assign_fillers(e.tmpl, set.entity_fillers, fillers, types)) continue;
    auto lf = substitute_template(e.tmpl, fillers);
    for (std::size_t v = 0; v < e.tmpl.value_slots.size(); ++v)
      for (auto pos : e.tmpl.value_slots[v]) lf.tokens[pos] = set.value_fillers[v];
    for (std::size_t t = 0; t < types.size(); ++t)
      for (auto pos : e.tmpl.type_slots[t]) lf.tokens[pos] = types[t];
    auto text = lf.str();
    if (!seen.insert(text).second) continue;
    Candidate c;
    c.logical_form = std::move(text);
    c.entry = static_cast<int>(i);
    c.pattern = e.pattern;
    c.frequency = e.frequency;
    set.candidates.push_back(std::move(c));
  }
  return set;
}

CandidateSet generate_candidates(std::span<const std::string> question,
                                 const multitask::MultiTaskModel& model,
                                 const matchers::PatternIndex& index) {
  const auto pred = multitask::predict(question, model);
  return generate_candidates(question, model.classes.at(pred.sketch), pred.spans, index);
}

void score_candidates(CandidateSet& set, std::span<const std::string> question, const Scorers& scorers) {
  if (set.candidates.empty()) return;
  const std::set<std::string> entities(set.entity_fillers.begin(), set.entity_fillers.end());
  std::vector<TokenSeq> split;
  split.reserve(set.candidates.size());
  for (auto& c : set.candidates) {
    const auto lf = parse_logical_form(c.logical_form);
    if (scorers.matchers) c.pattern_score = scorers.matchers->score(set.question_pattern, c.pattern);
    if (scorers.cooccurrence) c.pe_score = matchers::score_candidate_pe(lf, entities, *scorers.cooccurrence);
    split.push_back(genscore::split_logical_form(lf.tokens));
  }
  if (scorers.gen) {
    const auto gen = scorers.gen->score_pool(question, split, set.sketch_class);
    for (std::size_t i = 0; i < gen.size(); ++i) set.candidates[i].gen_score = gen[i];
  }
}

std::vector<Candidate> rank(std::vector<Candidate> candidates, const FusionWeights& w) {
  for (auto& c : candidates) c.fused = w.pattern * c.pattern_score + w.pe * c.pe_score + w.gen * c.gen_score;
  std::stable_sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    if (a.fused != b.fused) return a.fused > b.fused;
    if (a.frequency != b.frequency) return a.frequency > b.frequency;
    return a.logical_form < b.logical_form;
  });
  return candidates;
}

double pool_accuracy(const std::vector<ScoredPool>& pools, const FusionWeights& w) {
  if (pools.empty()) return 0.0;
  std::size_t hits = 0;
  for (const auto& p : pools) {
    if (p.candidates.empty()) continue;
    const Candidate* best = nullptr;
    double best_fused = 0.0;
    for (const auto& c : p.candidates) {
      const double f = w.pattern * c.pattern_score + w.pe * c.pe_score + w.gen * c.gen_score;
      const bool better = !best || f > best_fused ||
                          (f == best_fused && (c.frequency > best->frequency ||
                                               (c.frequency == best->frequency &&
                                                c.logical_form < best->logical_form)));
      if (better) {
        best = &c;
        best_fused = f;
      }
    }
    hits += best->logical_form == p.gold;
  }
  return static_cast<double>(hits) / static_cast<double>(pools.size());
}

FusionWeights tune_weights(const std::vector<ScoredPool>& dev, double step, int* evaluated) {
  if (dev.empty()) throw Error(ErrorCode::EmptyCorpus, "weight tuning needs dev pools");
  if (!(step > 0.0) || step > 1.0) throw Error(ErrorCode::BadRatios, "grid step must be in (0, 1]");
  const int n = static_cast<int>(std::lround(1.0 / step));
  FusionWeights best;
  double best_acc = -1.0;
  int count = 0;
  // Visiting larger w.pattern (then w.pe) first makes strict improvement the
  // tie-break rule.
  for (int i = n; i >= 0; --i) {
    for (int j = n - i; j >= 0; --j) {
      const FusionWeights w{static_cast<double>(i) / n, static_cast<double>(j) / n,
                            static_cast<double>(n - i - j) / n};
      const double acc = pool_accuracy(dev, w);
      ++count;
      if (acc > best_acc) {
        best_acc = acc;
        best = w;
      }
    }
  }
  if (evaluated) *evaluated = count;
  return best;
}

PredictionResult predict(std::string_view question, const System& system) {
  const auto tokens = tokenize_question(question);
  PredictionResult out;
  out.set = generate_candidates(tokens, system.multitask, system.index);
  if (out.set.empty()) {
    out.diagnostic = "no template of class '" + out.set.sketch_class + "' accepts " +
                     std::to_string(out.set.entity_fillers.size()) + " entity and " +
                     std::to_string(out.set.value_fillers.size()) + " value span(s)";
    return out;
  }
  score_candidates(out.set, tokens, system.scorers());
  out.set.candidates = rank(std::move(out.set.candidates), system.weights);
  out.logical_form = out.set.candidates.front().logical_form;
  return out;
}

ScoredPool scored_pool(const Sample& sample, const System& system) {
  const auto tokens = sample.question_tokens();
  auto set = generate_candidates(tokens, system.multitask, system.index);
  score_candidates(set, tokens, system.scorers());
  return {std::move(set.candidates), sample.parsed_form().str()};
}

System train_system(const Corpus& train, const Corpus& dev, const SystemConfig& cfg, TrainSummary* summary) {
  if (train.empty()) throw Error(ErrorCode::EmptyCorpus, "training set is empty");
  System sys;
  auto mt = cfg.multitask;
  mt.seed = cfg.seed;
  TrainSummary local;
  TrainSummary& sum = summary ? *summary : local;
  sys.multitask = multitask::train_multitask(train, dev, mt, &sum.multitask);
  sys.index = matchers::build_pattern_index(train);

  auto mc = cfg.matcher;
  mc.seed = cfg.seed + 1;
  sys.matchers = matchers::train_matcher_ensemble(train, dev, sys.index, mc);
  auto cc = cfg.cooccurrence;
  cc.seed = cfg.seed + 2;
  sys.cooccurrence = matchers::build_cooccurrence(train, cc);
  sys.gen = genscore::fit_genmodel(train, cfg.gen);

  const Corpus& tune = dev.empty() ? train : dev;
  sum.dev_pattern_coverage = matchers::pattern_coverage(sys.index, tune);
  const auto& base = sys.matchers.members.front();
  sum.dev_base_matcher_top1 = matchers::top1_pattern_accuracy(
      tune, sys.index, [&](const auto& q, const auto& p) { return matchers::score_pair(q, p, base); });
  sum.dev_ensemble_top1 = matchers::top1_pattern_accuracy(
      tune, sys.index, [&](const auto& q, const auto& p) { return sys.matchers.score(q, p); });

  std::vector<ScoredPool> pools;
  pools.reserve(tune.size());
  for (const auto& s : tune.samples) pools.push_back(scored_pool(s, sys));
  sys.weights = tune_weights(pools, cfg.grid_step);
  sum.dev_baseline_accuracy = pool_accuracy(pools, FusionWeights{1.0, 0.0, 0.0});
  sum.dev_tuned_accuracy = pool_accuracy(pools, sys.weights);
  return sys;
}

}  // namespace sketchparse::pipeline
