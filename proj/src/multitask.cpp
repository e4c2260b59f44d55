#include "sketchparse/multitask.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <set>

#include "sketchparse/error.hpp"

namespace sketchparse::multitask {

char label_char(int label) {
  switch (label) {
    case kB: return 'b';
    case kI: return 'i';
    case kO: return 'o';
    case kP: return 'p';
  }
  return '?';
}

LabelSeq gold_labels(int length, std::span<const Span> spans) {
  LabelSeq labels(length, kO);
  for (const auto& s : spans) {
    if (s.start < 0 || s.end >= length || s.end < s.start) {
      throw Error(ErrorCode::SpanOutOfRange, "span outside question");
    }
    labels[s.start] = kB;
    for (int i = s.start + 1; i <= s.end; ++i) labels[i] = kI;
  }
  return labels;
}

std::vector<Span> extract_entities(std::span<const std::string> question, std::span<const int> labels) {
  std::vector<Span> spans;
  const int n = static_cast<int>(std::min(question.size(), labels.size()));
  for (int i = 0; i < n; ++i) {
    const int l = labels[i];
    if (l == kP) break;
    if (l == kB || (l == kI && (spans.empty() || spans.back().end != i - 1))) {
      spans.push_back({i, i});
    } else if (l == kI) {
      spans.back().end = i;
    }
  }
  return spans;
}

std::vector<Span> labeled_spans(const Sample& sample) {
  std::vector<Span> spans;
  for (const auto& p : sample.params) spans.push_back(p.span);
  std::sort(spans.begin(), spans.end());
  spans.erase(std::unique(spans.begin(), spans.end()), spans.end());
  for (std::size_t i = 1; i < spans.size(); ++i) {
    if (spans[i].start <= spans[i - 1].end) {
      throw Error(ErrorCode::OverlappingSpans, sample.question);
    }
  }
  return spans;
}

int MultiTaskModel::class_index(const std::string& sketch) const {
  auto it = std::find(classes.begin(), classes.end(), sketch);
  return it == classes.end() ? -1 : static_cast<int>(it - classes.begin());
}

MultiTaskModel MultiTaskModel::zeros(learn::Vocab vocab, std::vector<std::string> classes,
                                     int hidden, int window) {
  MultiTaskModel m;
  m.encoder = learn::EncoderParams::zeros(vocab.size(), hidden, window);
  m.classifier = learn::LinearHead::zeros(static_cast<int>(classes.size()), hidden);
  m.emitter = learn::LinearHead::zeros(kNumLabels, m.encoder.context_width());
  m.transitions = Matrix::Zero(kNumLabels, kNumLabels);
  m.vocab = std::move(vocab);
  m.classes = std::move(classes);
  return m;
}

MultiTaskModel MultiTaskModel::init(learn::Vocab vocab, std::vector<std::string> classes,
                                    int hidden, int window, learn::Rng& rng) {
  MultiTaskModel m = zeros(std::move(vocab), std::move(classes), hidden, window);
  m.encoder.embeddings = learn::random_normal(hidden, m.vocab.size(), 0.1, rng);
  m.classifier.weight = learn::random_normal(m.classifier.outputs(), hidden, 0.01, rng);
  m.emitter.weight = learn::random_normal(kNumLabels, m.encoder.context_width(), 0.01, rng);
  return m;
}

int nearest_class(const std::string& sketch, const std::vector<std::string>& classes) {
  const auto toks = tokenize(sketch, false);
  const std::set<std::string> a(toks.begin(), toks.end());
  int best = classes.empty() ? -1 : 0;
  double best_score = -1.0;
  for (std::size_t c = 0; c < classes.size(); ++c) {
    const auto ct = tokenize(classes[c], false);
    const std::set<std::string> b(ct.begin(), ct.end());
    std::size_t inter = 0;
    for (const auto& t : a) inter += b.contains(t);
    const double uni = static_cast<double>(a.size() + b.size() - inter);
    const double score = uni > 0 ? static_cast<double>(inter) / uni : 0.0;
    if (score > best_score) {
      best_score = score;
      best = static_cast<int>(c);
    }
  }
  return best;
}

Vector classify_sketch(std::span<const std::string> question, const MultiTaskModel& model) {
  const auto ids = model.vocab.encode(question);
  return learn::softmax(model.classifier.forward(learn::encode_sentence(ids, model.encoder)));
}

namespace {

Matrix emissions_from_context(const Matrix& context, const MultiTaskModel& model) {
  Matrix em = model.emitter.weight * context;
  em.colwise() += model.emitter.bias;
  em.row(kP).setConstant(-std::numeric_limits<double>::infinity());
  return em;
}

}  // namespace

Matrix emission_scores(std::span<const int> ids, const MultiTaskModel& model) {
  return emissions_from_context(learn::encode_tokens(ids, model.encoder), model);
}

LabelSeq label_question(std::span<const std::string> question, const MultiTaskModel& model) {
  const auto ids = model.vocab.encode(question);
  auto labels = viterbi(emission_scores(ids, model), model.transitions);
  if (static_cast<int>(labels.size()) < model.max_length) labels.resize(model.max_length, kP);
  return labels;
}

Prediction predict(std::span<const std::string> question, const MultiTaskModel& model) {
  Prediction p;
  p.probabilities = classify_sketch(question, model);
  Eigen::Index arg = 0;
  p.probabilities.maxCoeff(&arg);
  p.sketch = static_cast<int>(arg);
  p.labels = label_question(question, model);
  p.spans = extract_entities(question, p.labels);
  return p;
}

Example make_example(const Sample& sample, const MultiTaskModel& model) {
  const auto tokens = sample.question_tokens();
  Example ex;
  ex.ids = model.vocab.encode(tokens);
  ex.sketch = model.class_index(sample.sketch_class);
  if (ex.sketch < 0) ex.sketch = nearest_class(sample.sketch_class, model.classes);
  ex.labels = gold_labels(static_cast<int>(tokens.size()), labeled_spans(sample));
  return ex;
}

Grads::Grads(const MultiTaskModel& model)
    : embeddings(Matrix::Zero(model.encoder.embeddings.rows(), model.encoder.embeddings.cols())),
      classifier(model.classifier),
      emitter(model.emitter),
      transitions(Matrix::Zero(kNumLabels, kNumLabels)) {}

void Grads::set_zero() {
  embeddings.setZero();
  classifier.set_zero();
  emitter.set_zero();
  transitions.setZero();
}

JointLoss joint_loss(const MultiTaskModel& model, const Example& ex, LossWeights weights,
                     Grads* grads) {
  JointLoss loss;
  const Vector sentence = learn::encode_sentence(ex.ids, model.encoder);
  Vector g_logits;
  loss.sketch = learn::softmax_cross_entropy(model.classifier.forward(sentence), ex.sketch,
                                             grads ? &g_logits : nullptr);

  const Matrix context = learn::encode_tokens(ex.ids, model.encoder);
  const Matrix em = emissions_from_context(context, model);
  CrfGrad cg;
  loss.labeling = crf_nll(em, model.transitions, ex.labels, grads ? &cg : nullptr);
  loss.total = weights.sketch * loss.sketch + weights.labeling * loss.labeling;

  if (grads) {
    g_logits *= weights.sketch;
    const Vector d_sentence = grads->classifier.accumulate(model.classifier, sentence, g_logits);
    learn::backprop_sentence(ex.ids, d_sentence, grads->embeddings);

    const Matrix d_em = weights.labeling * cg.emissions;
    grads->emitter.weight.noalias() += d_em * context.transpose();
    grads->emitter.bias += d_em.rowwise().sum();
    const Matrix d_context = model.emitter.weight.transpose() * d_em;
    learn::backprop_tokens(ex.ids, model.encoder.window, d_context, grads->embeddings);
    grads->transitions += weights.labeling * cg.transitions;
  }
  return loss;
}

namespace {

struct DevScore {
  double sketch = 0.0;
  double entity = 0.0;
  double joint = 0.0;
};

DevScore score_dev(const Corpus& dev, const MultiTaskModel& model) {
  DevScore s;
  if (dev.empty()) return s;
  for (const auto& sample : dev.samples) {
    const auto tokens = sample.question_tokens();
    const auto pred = predict(tokens, model);
    const bool sketch_ok = model.class_index(sample.sketch_class) == pred.sketch;
    const bool entity_ok = pred.spans == labeled_spans(sample);
    s.sketch += sketch_ok;
    s.entity += entity_ok;
    s.joint += sketch_ok && entity_ok;
  }
  const double n = static_cast<double>(dev.size());
  return {s.sketch / n, s.entity / n, s.joint / n};
}

std::vector<learn::ParamSlot> slots(MultiTaskModel& m, const Grads& g) {
  return {learn::slot(m.encoder.embeddings, g.embeddings), learn::slot(m.classifier.weight, g.classifier.weight),
          learn::slot(m.classifier.bias, g.classifier.bias), learn::slot(m.emitter.weight, g.emitter.weight),
          learn::slot(m.emitter.bias, g.emitter.bias), learn::slot(m.transitions, g.transitions)};
}

}  // namespace

MultiTaskModel train_multitask(const Corpus& train, const Corpus& dev, const TrainConfig& cfg,
                               TrainLog* log) {
  if (train.empty()) throw Error(ErrorCode::EmptyCorpus, "multitask training set is empty");
  learn::Rng rng(cfg.seed);

  std::vector<TokenSeq> sentences;
  std::set<std::string> class_set;
  for (const auto& s : train.samples) {
    sentences.push_back(s.question_tokens());
    class_set.insert(s.sketch_class);
  }
  MultiTaskModel model = MultiTaskModel::init(learn::Vocab::build(sentences),
                                              {class_set.begin(), class_set.end()}, cfg.hidden,
                                              cfg.window, rng);
  model.max_length = cfg.max_length;

  std::vector<Example> examples;
  examples.reserve(train.size());
  for (const auto& s : train.samples) examples.push_back(make_example(s, model));

  learn::Adam opt({.learning_rate = cfg.learning_rate});
  Grads grads(model);
  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), 0);
  std::bernoulli_distribution drop(cfg.word_dropout);

  MultiTaskModel best = model;
  double best_joint = -1.0;
  TrainLog local;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t b = 0; b < order.size(); b += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), b + cfg.batch_size);
      grads.set_zero();
      for (std::size_t k = b; k < end; ++k) {
        Example ex = examples[order[k]];
        if (cfg.word_dropout > 0.0) {
          for (auto& id : ex.ids)
            if (drop(rng)) id = learn::Vocab::kUnk;
        }
        epoch_loss += joint_loss(model, ex, cfg.weights, &grads).total;
      }
      const double scale = 1.0 / static_cast<double>(end - b);
      grads.embeddings *= scale;
      grads.classifier.weight *= scale;
      grads.classifier.bias *= scale;
      grads.emitter.weight *= scale;
      grads.emitter.bias *= scale;
      grads.transitions *= scale;
      const auto s = slots(model, grads);
      opt.step(s);
    }
    const auto dev_score = score_dev(dev.empty() ? train : dev, model);
    local.epochs.push_back({epoch, epoch_loss / static_cast<double>(examples.size()),
                            dev_score.sketch, dev_score.entity, dev_score.joint});
    if (dev_score.joint > best_joint) {
      best_joint = dev_score.joint;
      best = model;
      local.best_epoch = epoch;
    }
  }
  if (cfg.epochs <= 0) best = model;
  if (log) *log = std::move(local);
  return best;
}

learn::ArrayMap to_arrays(const MultiTaskModel& model, const std::string& prefix) {
  return {{prefix + "embeddings", model.encoder.embeddings},
          {prefix + "classifier.weight", model.classifier.weight},
          {prefix + "classifier.bias", model.classifier.bias},
          {prefix + "emitter.weight", model.emitter.weight},
          {prefix + "emitter.bias", model.emitter.bias},
          {prefix + "transitions", model.transitions}};
}

void from_arrays(MultiTaskModel& model, const learn::ArrayMap& arrays, const std::string& prefix) {
  auto fetch = [&](const std::string& name) -> const Matrix& {
    auto it = arrays.find(prefix + name);
    if (it == arrays.end()) throw Error(ErrorCode::ParseError, "missing array " + prefix + name);
    return it->second;
  };
  model.encoder.embeddings = fetch("embeddings");
  model.classifier.weight = fetch("classifier.weight");
  model.classifier.bias = fetch("classifier.bias").col(0);
  model.emitter.weight = fetch("emitter.weight");
  model.emitter.bias = fetch("emitter.bias").col(0);
  model.transitions = fetch("transitions");
}

}  // namespace sketchparse::multitask
