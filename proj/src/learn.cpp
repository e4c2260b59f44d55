#include "sketchparse/learn.hpp"

#include <cmath>
#include <limits>

#include "sketchparse/error.hpp"

namespace sketchparse::learn {

std::string normalize_token(std::string_view token) {
  if (is_numeric_literal(token)) return std::string(kNumberToken);
  return std::string(token);
}

Vocab::Vocab() {
  add("<pad>");
  add("<unk>");
}

int Vocab::add(std::string_view token) {
  auto key = normalize_token(token);
  auto it = stoi_.find(key);
  if (it != stoi_.end()) return it->second;
  int id = static_cast<int>(itos_.size());
  itos_.push_back(key);
  stoi_.emplace(std::move(key), id);
  return id;
}

Vocab Vocab::build(std::span<const TokenSeq> sentences, int min_count) {
  std::map<std::string, int> counts;
  std::vector<std::string> first_seen;
  for (const auto& s : sentences) {
    for (const auto& tok : s) {
      auto key = normalize_token(tok);
      if (counts[key]++ == 0) first_seen.push_back(key);
    }
  }
  Vocab v;
  for (const auto& tok : first_seen)
    if (counts[tok] >= min_count) v.add(tok);
  return v;
}

Vocab Vocab::from_tokens(std::span<const std::string> tokens) {
  Vocab v;
  v.itos_.clear();
  v.stoi_.clear();
  for (const auto& t : tokens) {
    v.stoi_.emplace(t, static_cast<int>(v.itos_.size()));
    v.itos_.push_back(t);
  }
  return v;
}

int Vocab::index(std::string_view token) const {
  auto it = stoi_.find(normalize_token(token));
  return it == stoi_.end() ? kUnk : it->second;
}

bool Vocab::contains(std::string_view token) const {
  return stoi_.contains(normalize_token(token));
}

std::vector<int> Vocab::encode(std::span<const std::string> tokens) const {
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(index(t));
  return ids;
}

Matrix random_normal(Eigen::Index rows, Eigen::Index cols, double stddev, Rng& rng) {
  std::normal_distribution<double> dist(0.0, stddev);
  Matrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = dist(rng);
  return m;
}

EncoderParams EncoderParams::zeros(int vocab_size, int hidden, int window) {
  return {Matrix::Zero(hidden, vocab_size), window};
}

EncoderParams EncoderParams::random(int vocab_size, int hidden, int window, double stddev, Rng& rng) {
  return {random_normal(hidden, vocab_size, stddev, rng), window};
}

Vector encode_sentence(std::span<const int> ids, const EncoderParams& enc) {
  if (ids.empty()) throw Error(ErrorCode::EmptyInput, "cannot encode an empty sentence");
  Vector out = Vector::Zero(enc.hidden());
  for (int id : ids) out += enc.embeddings.col(id);
  return out / static_cast<double>(ids.size());
}

void backprop_sentence(std::span<const int> ids, const Vector& grad_out, Matrix& grad_embeddings) {
  const double scale = 1.0 / static_cast<double>(ids.size());
  for (int id : ids) grad_embeddings.col(id) += scale * grad_out;
}

Matrix encode_tokens(std::span<const int> ids, const EncoderParams& enc, int padded_length) {
  if (ids.empty()) throw Error(ErrorCode::EmptyInput, "cannot encode an empty sentence");
  const int n = static_cast<int>(ids.size());
  const int m = std::max(n, padded_length);
  const int h = enc.hidden();
  const int w = enc.window;
  Matrix out(enc.context_width(), m);
  for (int i = 0; i < m; ++i) {
    for (int off = -w; off <= w; ++off) {
      const int pos = i + off;
      const int id = (pos >= 0 && pos < n && i < n) ? ids[pos] : Vocab::kPad;
      out.block(static_cast<Eigen::Index>(off + w) * h, i, h, 1) = enc.embeddings.col(id);
    }
  }
  return out;
}

void backprop_tokens(std::span<const int> ids, int window, const Matrix& grad_out,
                     Matrix& grad_embeddings) {
  const int n = static_cast<int>(ids.size());
  const int h = static_cast<int>(grad_embeddings.rows());
  for (int i = 0; i < grad_out.cols(); ++i) {
    for (int off = -window; off <= window; ++off) {
      const int pos = i + off;
      const int id = (pos >= 0 && pos < n && i < n) ? ids[pos] : Vocab::kPad;
      grad_embeddings.col(id) += grad_out.block(static_cast<Eigen::Index>(off + window) * h, i, h, 1);
    }
  }
}

Vector encode_pair(std::span<const int> a, std::span<const int> b, const EncoderParams& enc) {
  const Vector ma = encode_sentence(a, enc);
  const Vector mb = encode_sentence(b, enc);
  const int h = enc.hidden();
  Vector out(4 * h);
  out.segment(0, h) = ma;
  out.segment(h, h) = mb;
  out.segment(2 * h, h) = (ma - mb).cwiseAbs();
  out.segment(3 * h, h) = ma.cwiseProduct(mb);
  return out;
}

void backprop_pair(std::span<const int> a, std::span<const int> b, const EncoderParams& enc,
                   const Vector& grad_out, Matrix& grad_embeddings) {
  const Vector ma = encode_sentence(a, enc);
  const Vector mb = encode_sentence(b, enc);
  const int h = enc.hidden();
  const Vector sign = (ma - mb).unaryExpr([](double d) { return d > 0 ? 1.0 : d < 0 ? -1.0 : 0.0; });
  const auto g_abs = grad_out.segment(2 * h, h).cwiseProduct(sign);
  const Vector ga = grad_out.segment(0, h) + g_abs + grad_out.segment(3 * h, h).cwiseProduct(mb);
  const Vector gb = grad_out.segment(h, h) - g_abs + grad_out.segment(3 * h, h).cwiseProduct(ma);
  backprop_sentence(a, ga, grad_embeddings);
  backprop_sentence(b, gb, grad_embeddings);
}

LinearHead LinearHead::zeros(int outputs, int inputs) {
  return {Matrix::Zero(outputs, inputs), Vector::Zero(outputs)};
}

LinearHead LinearHead::random(int outputs, int inputs, double stddev, Rng& rng) {
  return {random_normal(outputs, inputs, stddev, rng), Vector::Zero(outputs)};
}

Vector LinearHeadGrad::accumulate(const LinearHead& head, const Vector& x, const Vector& grad_out) {
  weight.noalias() += grad_out * x.transpose();
  bias += grad_out;
  return head.weight.transpose() * grad_out;
}

double log_sum_exp(const Vector& z) {
  const double mx = z.maxCoeff();
  if (!std::isfinite(mx)) return mx;
  return mx + std::log((z.array() - mx).exp().sum());
}

Vector softmax(const Vector& z) {
  const double mx = z.maxCoeff();
  Vector e = (z.array() - mx).exp();
  return e / e.sum();
}

double softmax_cross_entropy(const Vector& logits, int gold, Vector* grad_logits) {
  if (gold < 0 || gold >= logits.size()) throw Error(ErrorCode::BadLabel, "gold class out of range");
  const double lse = log_sum_exp(logits);
  if (grad_logits) {
    *grad_logits = (logits.array() - lse).exp();
    (*grad_logits)(gold) -= 1.0;
  }
  return lse - logits(gold);
}

void Adam::step(std::span<const ParamSlot> slots) {
  if (m_.empty()) {
    for (const auto& s : slots) {
      m_.emplace_back(s.value.size(), 0.0);
      v_.emplace_back(s.value.size(), 0.0);
    }
  }
  if (slots.size() != m_.size()) throw Error(ErrorCode::ShapeMismatch, "slot count changed");
  for (std::size_t k = 0; k < slots.size(); ++k) {
    if (slots[k].value.size() != slots[k].grad.size() || slots[k].value.size() != m_[k].size()) {
      throw Error(ErrorCode::ShapeMismatch, "parameter/gradient size mismatch", k);
    }
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  const double lr = cfg_.learning_rate;
  for (std::size_t k = 0; k < slots.size(); ++k) {
    auto value = slots[k].value;
    auto grad = slots[k].grad;
    auto& m = m_[k];
    auto& v = v_[k];
    for (std::size_t i = 0; i < value.size(); ++i) {
      const double g = grad[i];
      m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g;
      v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g * g;
      value[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + cfg_.epsilon);
    }
  }
}

}  // namespace sketchparse::learn
