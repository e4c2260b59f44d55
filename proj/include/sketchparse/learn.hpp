#pragma once

// Minimal learning core shared by the trainable stages: vocabularies, token
// embedding encoders, linear heads, softmax, an Adam optimizer and a
// named-array checkpoint container.

#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "sketchparse/core_lf.hpp"

namespace sketchparse::learn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Rng = std::mt19937_64;

// Numeric literals share one vocabulary entry.
inline constexpr std::string_view kNumberToken = "<num>";
std::string normalize_token(std::string_view token);

class Vocab {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;

  Vocab();
  static Vocab build(std::span<const TokenSeq> sentences, int min_count = 1);
  static Vocab from_tokens(std::span<const std::string> tokens);

  int add(std::string_view token);
  int index(std::string_view token) const;
  bool contains(std::string_view token) const;
  std::vector<int> encode(std::span<const std::string> tokens) const;

  int size() const { return static_cast<int>(itos_.size()); }
  const std::string& token(int id) const { return itos_.at(id); }
  const std::vector<std::string>& tokens() const { return itos_; }

  bool operator==(const Vocab& other) const { return itos_ == other.itos_; }

 private:
  std::vector<std::string> itos_;
  std::unordered_map<std::string, int> stoi_;
};

struct EncoderParams {
  Matrix embeddings;  // hidden x vocab, one column per token id
  int window = 2;

  int hidden() const { return static_cast<int>(embeddings.rows()); }
  int context_width() const { return (2 * window + 1) * hidden(); }

  static EncoderParams zeros(int vocab_size, int hidden, int window);
  static EncoderParams random(int vocab_size, int hidden, int window, double stddev, Rng& rng);
};

// Mean of token embeddings. Throws EmptyInput.
Vector encode_sentence(std::span<const int> ids, const EncoderParams& enc);
void backprop_sentence(std::span<const int> ids, const Vector& grad_out, Matrix& grad_embeddings);

// Column i concatenates the embeddings of ids[i-w .. i+w]; positions outside
// the sentence (and columns past ids.size()) use the padding embedding.
// Result is context_width() x max(padded_length, ids.size()).
Matrix encode_tokens(std::span<const int> ids, const EncoderParams& enc, int padded_length = 0);
// grad_out columns correspond to the first grad_out.cols() positions.
void backprop_tokens(std::span<const int> ids, int window, const Matrix& grad_out,
                     Matrix& grad_embeddings);

// [mean(a); mean(b); |mean(a) - mean(b)|; mean(a) .* mean(b)]
Vector encode_pair(std::span<const int> a, std::span<const int> b, const EncoderParams& enc);
void backprop_pair(std::span<const int> a, std::span<const int> b, const EncoderParams& enc,
                   const Vector& grad_out, Matrix& grad_embeddings);

struct LinearHead {
  Matrix weight;  // k x d
  Vector bias;    // k

  Vector forward(const Vector& x) const { return weight * x + bias; }
  int outputs() const { return static_cast<int>(weight.rows()); }
  int inputs() const { return static_cast<int>(weight.cols()); }

  static LinearHead zeros(int outputs, int inputs);
  static LinearHead random(int outputs, int inputs, double stddev, Rng& rng);
};

struct LinearHeadGrad {
  Matrix weight;
  Vector bias;

  explicit LinearHeadGrad(const LinearHead& head)
      : weight(Matrix::Zero(head.weight.rows(), head.weight.cols())),
        bias(Vector::Zero(head.bias.size())) {}
  // Accumulates dL/dW, dL/db for grad_out = dL/d(Wx+b); returns dL/dx.
  Vector accumulate(const LinearHead& head, const Vector& x, const Vector& grad_out);
  void set_zero() {
    weight.setZero();
    bias.setZero();
  }
};

double log_sum_exp(const Vector& z);
Vector softmax(const Vector& z);
// -log softmax(logits)[gold]; optionally writes dL/dlogits.
double softmax_cross_entropy(const Vector& logits, int gold, Vector* grad_logits = nullptr);

Matrix random_normal(Eigen::Index rows, Eigen::Index cols, double stddev, Rng& rng);

struct AdamConfig {
  double learning_rate = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct ParamSlot {
  std::span<double> value;
  std::span<const double> grad;
};

template <typename Derived, typename GradDerived>
ParamSlot slot(Eigen::PlainObjectBase<Derived>& value, const Eigen::PlainObjectBase<GradDerived>& grad) {
  return {std::span<double>(value.data(), static_cast<std::size_t>(value.size())),
          std::span<const double>(grad.data(), static_cast<std::size_t>(grad.size()))};
}

// Adaptive-moment optimizer. Slots must keep the same order and sizes across
// steps; throws ShapeMismatch otherwise.
class Adam {
 public:
  explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}
  void step(std::span<const ParamSlot> slots);
  long steps() const { return t_; }
  const AdamConfig& config() const { return cfg_; }

 private:
  AdamConfig cfg_;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
  long t_ = 0;
};

// Named dense arrays persisted in a small versioned binary container.
using ArrayMap = std::map<std::string, Matrix>;
void save_arrays(const std::filesystem::path& path, const ArrayMap& arrays);
ArrayMap load_arrays(const std::filesystem::path& path);

}  // namespace sketchparse::learn
