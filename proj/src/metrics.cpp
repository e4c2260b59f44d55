#include <algorithm>
#include <set>

#include "sketchparse/error.hpp"
#include "sketchparse/pipeline.hpp"

namespace sketchparse::pipeline {

namespace {

// Sorts the arguments of every "( or ... )" group.
TokenSeq canonical_or(const TokenSeq& tokens) {
  TokenSeq out;
  std::size_t i = 0;
  while (i < tokens.size()) {
    if (tokens[i] == "(" && i + 1 < tokens.size() && tokens[i + 1] == "or") {
      std::vector<TokenSeq> args;
      std::size_t j = i + 2;
      while (j < tokens.size() && tokens[j] != ")") {
        TokenSeq arg;
        if (tokens[j] == "(") {
          int depth = 0;
          do {
            depth += tokens[j] == "(" ? 1 : tokens[j] == ")" ? -1 : 0;
            arg.push_back(tokens[j++]);
          } while (j < tokens.size() && depth > 0);
        } else {
          arg.push_back(tokens[j++]);
        }
        args.push_back(canonical_or(arg));
      }
      std::sort(args.begin(), args.end());
      out.push_back("(");
      out.push_back("or");
      for (auto& a : args) out.insert(out.end(), a.begin(), a.end());
      if (j < tokens.size()) out.push_back(tokens[j]);
      i = j + 1;
    } else {
      out.push_back(tokens[i++]);
    }
  }
  return out;
}

TokenSeq entity_sequence(const TokenSeq& tokens, const std::set<std::string>& entities) {
  TokenSeq out;
  for (const auto& t : tokens)
    if (entities.contains(t)) out.push_back(t);
  return out;
}

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

bool exchangeable_near_miss(const std::string& predicted, const std::string& gold) {
  const auto p = tokenize(predicted, false);
  const auto g = tokenize(gold, false);
  return p != g && canonical_or(p) == canonical_or(g);
}

SampleOutcome assess(const Sample& gold, const PredictionResult& prediction,
                     const std::vector<std::string>& classes) {
  SampleOutcome o;
  o.gold_class = gold.sketch_class;
  if (std::find(classes.begin(), classes.end(), gold.sketch_class) == classes.end()) {
    o.inventory_miss = true;
    const int nearest = multitask::nearest_class(gold.sketch_class, classes);
    if (nearest >= 0) o.gold_class = classes[nearest];
  }
  o.predicted_class = prediction.set.sketch_class;
  o.sketch_ok = o.predicted_class == o.gold_class && !o.inventory_miss;

  auto gold_spans = multitask::labeled_spans(gold);
  auto pred_spans = prediction.set.spans;
  std::sort(gold_spans.begin(), gold_spans.end());
  std::sort(pred_spans.begin(), pred_spans.end());
  o.entity_ok = gold_spans == pred_spans;

  const auto gold_lf = gold.parsed_form();
  const auto gold_text = gold_lf.str();
  o.no_candidates = prediction.set.empty();
  o.lf_ok = !o.no_candidates && prediction.logical_form == gold_text;
  o.gold_generated = std::any_of(prediction.set.candidates.begin(), prediction.set.candidates.end(),
                                 [&](const Candidate& c) { return c.logical_form == gold_text; });
  if (o.lf_ok) return o;

  if (!o.sketch_ok) {
    o.taxonomy = "wrong-sketch";
  } else if (!o.entity_ok) {
    o.taxonomy = "wrong-entities";
  } else if (o.no_candidates) {
    o.taxonomy = "no-candidates";
  } else {
    const auto pred_tokens = tokenize(prediction.logical_form, false);
    std::set<std::string> entities(prediction.set.entity_fillers.begin(), prediction.set.entity_fillers.end());
    for (const auto& p : gold.params)
      if (p.kind == ParamKind::Entity) entities.insert(p.surface);
    auto pe = entity_sequence(pred_tokens, entities);
    auto ge = entity_sequence(gold_lf.tokens, entities);
    const bool reordered = pe != ge && std::is_permutation(pe.begin(), pe.end(), ge.begin(), ge.end());
    o.taxonomy = reordered ? "wrong-order" : "wrong-predicate";
    o.near_miss = exchangeable_near_miss(prediction.logical_form, gold_text);
  }
  return o;
}

MetricsReport compute_metrics(std::span<const SampleOutcome> outcomes) {
  MetricsReport r;
  struct Tally {
    std::size_t support = 0, predicted = 0, tp = 0, e = 0, m = 0, l = 0;
  };
  std::map<std::string, Tally> tally;
  std::size_t inclusion = 0;
  for (const auto& o : outcomes) {
    auto& g = tally[o.gold_class];
    ++g.support;
    g.tp += o.sketch_ok;
    g.e += !o.entity_ok;
    g.m += !(o.sketch_ok && o.entity_ok);
    g.l += !o.lf_ok;
    if (!o.predicted_class.empty()) ++tally[o.predicted_class].predicted;
    inclusion += o.gold_generated;
    if (!o.taxonomy.empty()) ++r.taxonomy[o.taxonomy];
    r.near_misses += o.near_miss;
    r.inventory_misses += o.inventory_miss;
  }
  const std::size_t n = outcomes.size();
  double weighted_s = 0.0;
  std::size_t e = 0, m = 0, l = 0;
  for (const auto& [cls, t] : tally) {
    if (t.support == 0) continue;
    const double precision = ratio(t.tp, t.predicted);
    const double recall = ratio(t.tp, t.support);
    const double f1 = precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
    ClassMetrics c;
    c.count = t.support;
    c.err_s = 1.0 - f1;
    c.err_e = ratio(t.e, t.support);
    c.err_m = ratio(t.m, t.support);
    c.err_l = ratio(t.l, t.support);
    r.per_class[cls] = c;
    weighted_s += c.err_s * static_cast<double>(t.support);
    e += t.e;
    m += t.m;
    l += t.l;
  }
  r.overall.count = n;
  r.overall.err_s = n == 0 ? 0.0 : weighted_s / static_cast<double>(n);
  r.overall.err_e = ratio(e, n);
  r.overall.err_m = ratio(m, n);
  r.overall.err_l = ratio(l, n);
  r.gold_inclusion = ratio(inclusion, n);
  return r;
}

MetricsReport evaluate(const Corpus& corpus, const System& system) {
  std::vector<SampleOutcome> outcomes;
  outcomes.reserve(corpus.size());
  for (const auto& s : corpus.samples) outcomes.push_back(assess(s, predict(s.question, system), system.multitask.classes));
  auto report = compute_metrics(outcomes);
  report.pattern_coverage = matchers::pattern_coverage(system.index, corpus);
  return report;
}

nlohmann::ordered_json to_json(const MetricsReport& report) {
  auto row = [](const ClassMetrics& c) {
    nlohmann::ordered_json j;
    j["count"] = c.count;
    j["err_s"] = c.err_s;
    j["err_e"] = c.err_e;
    j["err_m"] = c.err_m;
    j["err_l"] = c.err_l;
    j["acc_l"] = 1.0 - c.err_l;
    return j;
  };
  nlohmann::ordered_json j;
  j["overall"] = row(report.overall);
  j["gold_inclusion"] = report.gold_inclusion;
  j["pattern_coverage"] = report.pattern_coverage;
  auto& per = j["per_class"] = nlohmann::ordered_json::object();
  for (const auto& [cls, c] : report.per_class) per[cls] = row(c);
  auto& tax = j["error_taxonomy"] = nlohmann::ordered_json::object();
  for (const char* k : {"wrong-sketch", "wrong-entities", "wrong-order", "wrong-predicate", "no-candidates"}) {
    auto it = report.taxonomy.find(k);
    tax[k] = it == report.taxonomy.end() ? 0 : it->second;
  }
  j["exchangeable_near_misses"] = report.near_misses;
  j["inventory_misses"] = report.inventory_misses;
  return j;
}

}  // namespace sketchparse::pipeline
