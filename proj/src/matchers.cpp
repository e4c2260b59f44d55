#include "sketchparse/matchers.hpp"

#include <algorithm>
#include <numeric>

#include "sketchparse/error.hpp"

namespace sketchparse::matchers {

std::string pattern_key(const LfPattern& pattern) {
  std::string key;
  for (std::size_t i = 0; i < pattern.tokens.size(); ++i) {
    if (i) key += ' ';
    key += learn::normalize_token(pattern.tokens[i]);
  }
  return key;
}

const std::vector<IndexEntry>* PatternIndex::entries(const std::string& sketch_class) const {
  auto it = classes.find(sketch_class);
  return it == classes.end() ? nullptr : &it->second;
}

int PatternIndex::find(const std::string& sketch_class, const std::string& key) const {
  const auto* list = entries(sketch_class);
  if (!list) return -1;
  for (std::size_t i = 0; i < list->size(); ++i)
    if ((*list)[i].key == key) return static_cast<int>(i);
  return -1;
}

std::size_t PatternIndex::size() const {
  std::size_t n = 0;
  for (const auto& [_, list] : classes) n += list.size();
  return n;
}

GoldPattern gold_pattern(const Sample& sample) {
  const auto lf = sample.parsed_form();
  const auto order = question_order(sample.params);
  return {sample.sketch_class, derive_question_pattern(sample.question_tokens(), sample.params),
          derive_lf_pattern(lf, sample.params, order), derive_template(lf, sample.params, order)};
}

PatternIndex build_pattern_index(const Corpus& train) {
  if (train.empty()) throw Error(ErrorCode::EmptyCorpus, "cannot index an empty corpus");
  PatternIndex index;
  for (const auto& s : train.samples) {
    auto gold = gold_pattern(s);
    auto key = pattern_key(gold.pattern);
    auto& list = index.classes[gold.sketch_class];
    auto it = std::find_if(list.begin(), list.end(), [&](const auto& e) { return e.key == key; });
    if (it != list.end()) {
      ++it->frequency;
    } else {
      list.push_back({std::move(gold.pattern), std::move(gold.tmpl), std::move(key), 1});
    }
  }
  return index;
}

double pattern_coverage(const PatternIndex& index, const Corpus& corpus) {
  if (corpus.empty()) return 1.0;
  std::size_t covered = 0;
  for (const auto& s : corpus.samples) {
    const auto gold = gold_pattern(s);
    covered += index.find(gold.sketch_class, pattern_key(gold.pattern)) >= 0;
  }
  return static_cast<double>(covered) / static_cast<double>(corpus.size());
}

namespace {

std::vector<int> choose(std::vector<int> pool, int k, learn::Rng& rng) {
  std::shuffle(pool.begin(), pool.end(), rng);
  if (static_cast<int>(pool.size()) > k) pool.resize(std::max(k, 0));
  return pool;
}

std::vector<int> other_indices(std::size_t n, int exclude) {
  std::vector<int> out;
  out.reserve(n);
  for (int i = 0; i < static_cast<int>(n); ++i)
    if (i != exclude) out.push_back(i);
  return out;
}

struct Picks {
  std::vector<int> hard;
  std::vector<int> easy;
};

// Indices into `probs`.
Picks pick_ranked(const std::vector<double>& probs, const RankingSampling& cfg, learn::Rng& rng) {
  std::vector<int> hard, easy;
  for (int i = 0; i < static_cast<int>(probs.size()); ++i) {
    (probs[i] > cfg.threshold ? hard : easy).push_back(i);
  }
  return {choose(std::move(hard), cfg.hard_picks, rng), choose(std::move(easy), cfg.easy_picks, rng)};
}

}  // namespace

std::vector<PatternPairSample> sample_negatives(const QuestionPattern& question, const LfPattern& gold,
                                                const std::string& gold_class,
                                                const PatternIndex& index, int k, std::uint64_t seed) {
  const auto* list = index.entries(gold_class);
  if (!list || list->empty()) throw Error(ErrorCode::EmptyClass, gold_class);
  learn::Rng rng(seed);
  const auto gold_key = pattern_key(gold);
  std::vector<int> pool;
  for (int i = 0; i < static_cast<int>(list->size()); ++i)
    if ((*list)[i].key != gold_key) pool.push_back(i);
  std::vector<PatternPairSample> out;
  for (int i : choose(std::move(pool), k, rng)) {
    out.push_back({question, (*list)[i].pattern, 0, gold_class});
  }
  return out;
}

TokenSeq matcher_tokens(std::span<const std::string> tokens) {
  TokenSeq out;
  out.reserve(tokens.size() * 2);
  for (const auto& t : tokens) out.push_back(learn::normalize_token(t));
  for (std::size_t i = 0; i + 1 < tokens.size(); ++i) {
    out.push_back(learn::normalize_token(tokens[i]) + "+" + learn::normalize_token(tokens[i + 1]));
  }
  return out;
}

MatcherModel MatcherModel::zeros(learn::Vocab vocab, int hidden) {
  MatcherModel m;
  m.encoder = learn::EncoderParams::zeros(vocab.size(), hidden, 0);
  m.head = learn::LinearHead::zeros(2, 4 * hidden);
  m.vocab = std::move(vocab);
  return m;
}

MatcherModel MatcherModel::init(learn::Vocab vocab, int hidden, learn::Rng& rng) {
  MatcherModel m = zeros(std::move(vocab), hidden);
  m.encoder.embeddings = learn::random_normal(hidden, m.vocab.size(), 0.1, rng);
  m.head.weight = learn::random_normal(2, 4 * hidden, 0.01, rng);
  return m;
}

double score_ids(std::span<const int> a, std::span<const int> b, const MatcherModel& model) {
  const Vector p = learn::softmax(model.head.forward(learn::encode_pair(a, b, model.encoder)));
  return p(1);
}

double score_pair(const QuestionPattern& question, const LfPattern& pattern, const MatcherModel& model) {
  const auto a = model.vocab.encode(matcher_tokens(question.tokens));
  const auto b = model.vocab.encode(matcher_tokens(pattern.tokens));
  return score_ids(a, b, model);
}

MatcherGrads::MatcherGrads(const MatcherModel& model)
    : embeddings(Matrix::Zero(model.encoder.embeddings.rows(), model.encoder.embeddings.cols())),
      head(model.head) {}

void MatcherGrads::set_zero() {
  embeddings.setZero();
  head.set_zero();
}

double pair_loss(const MatcherModel& model, std::span<const int> a, std::span<const int> b, int label,
                 MatcherGrads* grads) {
  const Vector x = learn::encode_pair(a, b, model.encoder);
  Vector g;
  const double loss = learn::softmax_cross_entropy(model.head.forward(x), label, grads ? &g : nullptr);
  if (grads) {
    const Vector dx = grads->head.accumulate(model.head, x, g);
    learn::backprop_pair(a, b, model.encoder, dx, grads->embeddings);
  }
  return loss;
}

ResampleResult ranking_resample(std::span<const ResamplePool> pools, const RankingSampling& cfg,
                                std::uint64_t seed) {
  learn::Rng rng(seed);
  ResampleResult result;
  for (const auto& pool : pools) {
    result.samples.push_back({pool.question, pool.gold, 1, pool.sketch_class});
    std::vector<double> probs;
    for (const auto& n : pool.negatives) probs.push_back(n.probability);
    const auto picks = pick_ranked(probs, cfg, rng);
    for (int i : picks.hard) result.samples.push_back({pool.question, pool.negatives[i].pattern, 0, pool.sketch_class});
    for (int i : picks.easy) result.samples.push_back({pool.question, pool.negatives[i].pattern, 0, pool.sketch_class});
    result.hard += picks.hard.size();
    result.easy += picks.easy.size();
  }
  return result;
}

namespace {

struct Query {
  const std::vector<IndexEntry>* entries = nullptr;
  const std::vector<std::vector<int>>* entry_ids = nullptr;
  std::vector<int> ids;
  int gold = -1;
};

struct EncodedPair {
  const std::vector<int>* a;
  const std::vector<int>* b;
  int label;
};

struct Prepared {
  std::map<std::string, std::vector<std::vector<int>>> entry_ids;
  std::vector<Query> queries;
};

learn::Vocab matcher_vocab(const Corpus& train, const PatternIndex& index) {
  std::vector<TokenSeq> sentences;
  for (const auto& s : train.samples) sentences.push_back(matcher_tokens(gold_pattern(s).question.tokens));
  for (const auto& [_, list] : index.classes)
    for (const auto& e : list) sentences.push_back(matcher_tokens(e.pattern.tokens));
  return learn::Vocab::build(sentences);
}

Prepared prepare(const Corpus& train, const PatternIndex& index, const learn::Vocab& vocab) {
  Prepared p;
  for (const auto& [cls, list] : index.classes) {
    auto& ids = p.entry_ids[cls];
    for (const auto& e : list) ids.push_back(vocab.encode(matcher_tokens(e.pattern.tokens)));
  }
  for (const auto& s : train.samples) {
    const auto gold = gold_pattern(s);
    const int gi = index.find(gold.sketch_class, pattern_key(gold.pattern));
    if (gi < 0) continue;
    Query q;
    q.entries = index.entries(gold.sketch_class);
    q.entry_ids = &p.entry_ids.at(gold.sketch_class);
    q.ids = vocab.encode(matcher_tokens(gold.question.tokens));
    q.gold = gi;
    p.queries.push_back(std::move(q));
  }
  return p;
}

std::vector<learn::ParamSlot> slots(MatcherModel& m, const MatcherGrads& g) {
  return {learn::slot(m.encoder.embeddings, g.embeddings), learn::slot(m.head.weight, g.head.weight),
          learn::slot(m.head.bias, g.head.bias)};
}

void train_epoch(MatcherModel& model, learn::Adam& opt, std::vector<EncodedPair>& pairs, int batch_size,
                 learn::Rng& rng) {
  std::shuffle(pairs.begin(), pairs.end(), rng);
  MatcherGrads grads(model);
  for (std::size_t b = 0; b < pairs.size(); b += batch_size) {
    const std::size_t end = std::min(pairs.size(), b + batch_size);
    grads.set_zero();
    for (std::size_t k = b; k < end; ++k) pair_loss(model, *pairs[k].a, *pairs[k].b, pairs[k].label, &grads);
    const double scale = 1.0 / static_cast<double>(end - b);
    grads.embeddings *= scale;
    grads.head.weight *= scale;
    grads.head.bias *= scale;
    const auto s = slots(model, grads);
    opt.step(s);
  }
}

// Probability for every entry of the query's class, using cached means.
std::vector<double> score_entries(const MatcherModel& model, const Query& q,
                                  const std::vector<Vector>& entry_means) {
  const Vector ma = learn::encode_sentence(q.ids, model.encoder);
  const int h = model.encoder.hidden();
  std::vector<double> out;
  out.reserve(entry_means.size());
  Vector x(4 * h);
  for (const auto& mb : entry_means) {
    x.segment(0, h) = ma;
    x.segment(h, h) = mb;
    x.segment(2 * h, h) = (ma - mb).cwiseAbs();
    x.segment(3 * h, h) = ma.cwiseProduct(mb);
    out.push_back(learn::softmax(model.head.forward(x))(1));
  }
  return out;
}

std::map<const std::vector<std::vector<int>>*, std::vector<Vector>> entry_means(
    const MatcherModel& model, const Prepared& p) {
  std::map<const std::vector<std::vector<int>>*, std::vector<Vector>> out;
  for (const auto& [_, ids] : p.entry_ids) {
    auto& means = out[&ids];
    for (const auto& e : ids) means.push_back(learn::encode_sentence(e, model.encoder));
  }
  return out;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  std::uint64_t x = seed * 0x9E3779B97F4A7C15ULL + a * 0xBF58476D1CE4E5B9ULL + b * 0x94D049BB133111EBULL;
  x ^= x >> 31;
  return x;
}

}  // namespace

std::vector<ResamplePool> score_pools(const MatcherModel& model, const Corpus& train,
                                      const PatternIndex& index) {
  std::vector<ResamplePool> pools;
  for (const auto& s : train.samples) {
    const auto gold = gold_pattern(s);
    const auto* list = index.entries(gold.sketch_class);
    if (!list) continue;
    const auto key = pattern_key(gold.pattern);
    ResamplePool pool{gold.question, gold.pattern, gold.sketch_class, {}};
    for (const auto& e : *list) {
      if (e.key == key) continue;
      pool.negatives.push_back({e.pattern, score_pair(gold.question, e.pattern, model)});
    }
    pools.push_back(std::move(pool));
  }
  return pools;
}

double MatcherEnsemble::score(const QuestionPattern& question, const LfPattern& pattern) const {
  if (members.empty()) return 0.5;
  double sum = 0.0;
  const auto q = matcher_tokens(question.tokens);
  const auto l = matcher_tokens(pattern.tokens);
  for (const auto& m : members) sum += score_ids(m.vocab.encode(q), m.vocab.encode(l), m);
  return sum / static_cast<double>(members.size());
}

MatcherEnsemble train_matcher_ensemble(const Corpus& train, const Corpus& /*dev*/,
                                       const PatternIndex& index, const MatcherConfig& cfg) {
  if (train.empty()) throw Error(ErrorCode::EmptyCorpus, "matcher training set is empty");
  learn::Rng rng(cfg.seed);
  MatcherModel base = MatcherModel::init(matcher_vocab(train, index), cfg.hidden, rng);
  const Prepared prep = prepare(train, index, base.vocab);

  learn::Adam opt({.learning_rate = cfg.learning_rate});
  for (int epoch = 0; epoch < cfg.base_epochs; ++epoch) {
    std::vector<EncodedPair> pairs;
    for (const auto& q : prep.queries) {
      pairs.push_back({&q.ids, &(*q.entry_ids)[q.gold], 1});
      for (int i : choose(other_indices(q.entries->size(), q.gold), cfg.negatives, rng)) {
        pairs.push_back({&q.ids, &(*q.entry_ids)[i], 0});
      }
    }
    train_epoch(base, opt, pairs, cfg.batch_size, rng);
  }

  MatcherEnsemble ensemble;
  ensemble.members.push_back(base);
  if (cfg.refit_models <= 0) return ensemble;

  // Score the training pool once with the base model.
  const auto means = entry_means(base, prep);
  std::vector<std::vector<double>> probs;
  probs.reserve(prep.queries.size());
  for (const auto& q : prep.queries) probs.push_back(score_entries(base, q, means.at(q.entry_ids)));

  for (int r = 0; r < cfg.refit_models; ++r) {
    MatcherModel refit = base;
    learn::Adam refit_opt({.learning_rate = cfg.learning_rate});
    for (int epoch = 0; epoch < cfg.refit_epochs; ++epoch) {
      learn::Rng pick_rng(mix_seed(cfg.seed, r + 1, epoch + 1));
      std::vector<EncodedPair> pairs;
      for (std::size_t qi = 0; qi < prep.queries.size(); ++qi) {
        const auto& q = prep.queries[qi];
        pairs.push_back({&q.ids, &(*q.entry_ids)[q.gold], 1});
        std::vector<double> neg_probs;
        std::vector<int> neg_index;
        for (int i = 0; i < static_cast<int>(probs[qi].size()); ++i) {
          if (i == q.gold) continue;
          neg_probs.push_back(probs[qi][i]);
          neg_index.push_back(i);
        }
        const auto picks = pick_ranked(neg_probs, cfg.sampling, pick_rng);
        for (int i : picks.hard) pairs.push_back({&q.ids, &(*q.entry_ids)[neg_index[i]], 0});
        for (int i : picks.easy) pairs.push_back({&q.ids, &(*q.entry_ids)[neg_index[i]], 0});
      }
      train_epoch(refit, refit_opt, pairs, cfg.batch_size, pick_rng);
    }
    ensemble.members.push_back(std::move(refit));
  }
  return ensemble;
}

std::vector<PredicateEntity> predicate_entity_pairs(const LogicalForm& lf,
                                                    const std::set<std::string>& entities) {
  struct Group {
    std::vector<std::string> predicates;
    std::vector<std::string> entities;
  };
  std::vector<PredicateEntity> out;
  std::vector<Group> stack(1);
  auto emit = [&](const Group& g) {
    for (const auto& p : g.predicates)
      for (const auto& e : g.entities) out.emplace_back(p, e);
  };
  for (const auto& tok : lf.tokens) {
    if (tok == "(") {
      stack.emplace_back();
    } else if (tok == ")") {
      if (stack.size() > 1) {
        emit(stack.back());
        stack.pop_back();
      }
    } else if (tok == kTurnSeparator) {
      while (stack.size() > 1) {
        emit(stack.back());
        stack.pop_back();
      }
      emit(stack.back());
      stack.back() = {};
    } else if (is_predicate(tok)) {
      stack.back().predicates.push_back(tok);
    } else if (entities.contains(tok)) {
      stack.back().entities.push_back(tok);
    }
  }
  while (!stack.empty()) {
    emit(stack.back());
    stack.pop_back();
  }
  return out;
}

double CooccurrenceModel::pair_probability(const std::string& predicate, const std::string& entity) const {
  const auto a = scorer.vocab.encode(split_compound(predicate));
  const auto b = scorer.vocab.encode(split_compound(entity));
  if (a.empty() || b.empty()) return 0.5;
  return score_ids(a, b, scorer);
}

namespace {

std::set<std::string> entity_surfaces(const Sample& s) {
  std::set<std::string> out;
  for (const auto& p : s.params)
    if (p.kind == ParamKind::Entity) out.insert(p.surface);
  return out;
}

}  // namespace

CooccurrenceModel build_cooccurrence(const Corpus& train, const CooccurrenceConfig& cfg) {
  CooccurrenceModel model;
  std::set<std::string> predicates;
  for (const auto& s : train.samples) {
    const auto lf = s.parsed_form();
    for (const auto& tok : lf.tokens)
      if (is_predicate(tok)) predicates.insert(tok);
    for (auto& pair : predicate_entity_pairs(lf, entity_surfaces(s))) model.pairs.insert(std::move(pair));
  }
  model.predicates.assign(predicates.begin(), predicates.end());

  std::vector<TokenSeq> sentences;
  for (const auto& p : model.predicates) sentences.push_back(split_compound(p));
  for (const auto& [_, e] : model.pairs) sentences.push_back(split_compound(e));
  learn::Rng rng(cfg.seed);
  model.scorer = MatcherModel::init(learn::Vocab::build(sentences), cfg.hidden, rng);
  if (model.pairs.empty() || cfg.epochs <= 0) return model;

  std::map<std::string, std::vector<int>> pred_ids, ent_ids;
  for (const auto& p : model.predicates) pred_ids[p] = model.scorer.vocab.encode(split_compound(p));
  std::map<std::string, std::set<std::string>> seen_with;
  for (const auto& [p, e] : model.pairs) {
    seen_with[e].insert(p);
    if (!ent_ids.contains(e)) ent_ids[e] = model.scorer.vocab.encode(split_compound(e));
  }

  learn::Adam opt({.learning_rate = cfg.learning_rate});
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::vector<EncodedPair> pairs;
    for (const auto& [p, e] : model.pairs) {
      const auto* ev = &ent_ids.at(e);
      pairs.push_back({&pred_ids.at(p), ev, 1});
      std::vector<int> unseen;
      for (int i = 0; i < static_cast<int>(model.predicates.size()); ++i)
        if (!seen_with[e].contains(model.predicates[i])) unseen.push_back(i);
      for (int i : choose(std::move(unseen), cfg.negatives, rng)) {
        pairs.push_back({&pred_ids.at(model.predicates[i]), ev, 0});
      }
    }
    train_epoch(model.scorer, opt, pairs, cfg.batch_size, rng);
  }
  return model;
}

double score_candidate_pe(const LogicalForm& candidate, const std::set<std::string>& entities,
                          const CooccurrenceModel& model) {
  const auto pairs = predicate_entity_pairs(candidate, entities);
  if (pairs.empty()) return 0.5;
  double sum = 0.0;
  for (const auto& [p, e] : pairs) sum += model.pair_probability(p, e);
  return sum / static_cast<double>(pairs.size());
}

learn::ArrayMap to_arrays(const MatcherModel& model, const std::string& prefix) {
  return {{prefix + "embeddings", model.encoder.embeddings},
          {prefix + "head.weight", model.head.weight},
          {prefix + "head.bias", model.head.bias}};
}

void from_arrays(MatcherModel& model, const learn::ArrayMap& arrays, const std::string& prefix) {
  auto fetch = [&](const std::string& name) -> const Matrix& {
    auto it = arrays.find(prefix + name);
    if (it == arrays.end()) throw Error(ErrorCode::ParseError, "missing array " + prefix + name);
    return it->second;
  };
  model.encoder.embeddings = fetch("embeddings");
  model.encoder.window = 0;
  model.head.weight = fetch("head.weight");
  model.head.bias = fetch("head.bias").col(0);
}

}  // namespace sketchparse::matchers
