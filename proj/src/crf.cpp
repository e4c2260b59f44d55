#include "sketchparse/crf.hpp"

#include <cmath>
#include <limits>

#include "sketchparse/error.hpp"

namespace sketchparse::multitask {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double lse2(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double mx = std::max(a, b);
  return mx + std::log(std::exp(a - mx) + std::exp(b - mx));
}

// alpha(j, t): log-sum of all prefixes ending in label j at position t.
Matrix forward(const Matrix& em, const Matrix& trans) {
  const auto k = em.rows();
  const auto m = em.cols();
  Matrix alpha(k, m);
  alpha.col(0) = em.col(0);
  for (Eigen::Index t = 1; t < m; ++t) {
    for (Eigen::Index j = 0; j < k; ++j) {
      double acc = kNegInf;
      for (Eigen::Index i = 0; i < k; ++i) acc = lse2(acc, alpha(i, t - 1) + trans(i, j));
      alpha(j, t) = acc + em(j, t);
    }
  }
  return alpha;
}

// beta(i, t): log-sum of all suffixes after position t given label i at t.
Matrix backward(const Matrix& em, const Matrix& trans) {
  const auto k = em.rows();
  const auto m = em.cols();
  Matrix beta(k, m);
  beta.col(m - 1).setZero();
  for (Eigen::Index t = m - 2; t >= 0; --t) {
    for (Eigen::Index i = 0; i < k; ++i) {
      double acc = kNegInf;
      for (Eigen::Index j = 0; j < k; ++j) acc = lse2(acc, trans(i, j) + em(j, t + 1) + beta(j, t + 1));
      beta(i, t) = acc;
    }
  }
  return beta;
}

double column_lse(const Matrix& a, Eigen::Index col) {
  double acc = kNegInf;
  for (Eigen::Index j = 0; j < a.rows(); ++j) acc = lse2(acc, a(j, col));
  return acc;
}

double safe_exp(double x) { return x == kNegInf || std::isnan(x) ? 0.0 : std::exp(x); }

}  // namespace

double crf_path_score(const Matrix& emissions, const Matrix& transitions, std::span<const int> labels) {
  double s = 0.0;
  for (std::size_t t = 0; t < labels.size(); ++t) {
    s += emissions(labels[t], static_cast<Eigen::Index>(t));
    if (t > 0) s += transitions(labels[t - 1], labels[t]);
  }
  return s;
}

double crf_log_partition(const Matrix& emissions, const Matrix& transitions) {
  if (emissions.cols() == 0) throw Error(ErrorCode::EmptyInput, "CRF needs at least one position");
  const Matrix alpha = forward(emissions, transitions);
  return column_lse(alpha, alpha.cols() - 1);
}

double crf_nll(const Matrix& emissions, const Matrix& transitions, std::span<const int> gold,
               CrfGrad* grad) {
  const auto k = emissions.rows();
  const auto m = emissions.cols();
  if (m == 0) throw Error(ErrorCode::EmptyInput, "CRF needs at least one position");
  if (static_cast<Eigen::Index>(gold.size()) != m) {
    throw Error(ErrorCode::BadLabel, "gold length differs from emission length");
  }
  for (std::size_t t = 0; t < gold.size(); ++t) {
    if (gold[t] < 0 || gold[t] >= k) throw Error(ErrorCode::BadLabel, "label out of range", t);
  }
  const Matrix alpha = forward(emissions, transitions);
  const double log_z = column_lse(alpha, m - 1);
  const double nll = log_z - crf_path_score(emissions, transitions, gold);
  if (grad) {
    const Matrix beta = backward(emissions, transitions);
    grad->emissions = Matrix::Zero(k, m);
    grad->transitions = Matrix::Zero(k, k);
    for (Eigen::Index t = 0; t < m; ++t)
      for (Eigen::Index j = 0; j < k; ++j)
        grad->emissions(j, t) = safe_exp(alpha(j, t) + beta(j, t) - log_z);
    for (Eigen::Index t = 1; t < m; ++t)
      for (Eigen::Index i = 0; i < k; ++i)
        for (Eigen::Index j = 0; j < k; ++j)
          grad->transitions(i, j) += safe_exp(alpha(i, t - 1) + transitions(i, j) + emissions(j, t) +
                                              beta(j, t) - log_z);
    for (Eigen::Index t = 0; t < m; ++t) {
      grad->emissions(gold[t], t) -= 1.0;
      if (t > 0) grad->transitions(gold[t - 1], gold[t]) -= 1.0;
    }
  }
  return nll;
}

LabelSeq viterbi(const Matrix& emissions, const Matrix& transitions) {
  const auto k = emissions.rows();
  const auto m = emissions.cols();
  if (m == 0) return {};
  Matrix score(k, m);
  Eigen::MatrixXi back(k, m);
  score.col(0) = emissions.col(0);
  for (Eigen::Index t = 1; t < m; ++t) {
    for (Eigen::Index j = 0; j < k; ++j) {
      double best = kNegInf;
      int arg = 0;
      for (Eigen::Index i = 0; i < k; ++i) {
        const double s = score(i, t - 1) + transitions(i, j);
        if (s > best) {
          best = s;
          arg = static_cast<int>(i);
        }
      }
      score(j, t) = best + emissions(j, t);
      back(j, t) = arg;
    }
  }
  LabelSeq path(m);
  double best = kNegInf;
  int arg = 0;
  for (Eigen::Index j = 0; j < k; ++j) {
    if (score(j, m - 1) > best) {
      best = score(j, m - 1);
      arg = static_cast<int>(j);
    }
  }
  path[m - 1] = arg;
  for (Eigen::Index t = m - 1; t > 0; --t) path[t - 1] = back(path[t], t);
  return path;
}

}  // namespace sketchparse::multitask
