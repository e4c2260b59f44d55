#pragma once

// Reference computations that do not reuse library code paths.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "sketchparse/crf.hpp"

namespace sketchparse::testing {

inline double relative_error(double a, double b) {
  const double scale = std::max({std::abs(a), std::abs(b), 1e-8});
  return std::abs(a - b) / scale;
}

// Central difference of f at x[i] with step eps; restores x[i].
inline double central_difference(double& xi, const std::function<double()>& f, double eps = 1e-4) {
  const double saved = xi;
  xi = saved + eps;
  const double up = f();
  xi = saved - eps;
  const double down = f();
  xi = saved;
  return (up - down) / (2.0 * eps);
}

struct Enumeration {
  double log_z = 0.0;
  multitask::LabelSeq argmax;
  double total_probability = 0.0;
};

// Scores every one of k^m label paths directly.
inline Enumeration enumerate_paths(const learn::Matrix& em, const learn::Matrix& tr) {
  const int k = static_cast<int>(em.rows()), m = static_cast<int>(em.cols());
  std::vector<double> scores;
  std::vector<multitask::LabelSeq> paths;
  multitask::LabelSeq path(m, 0);
  while (true) {
    double s = 0.0;
    for (int i = 0; i < m; ++i) {
      s += em(path[i], i);
      if (i > 0) s += tr(path[i - 1], path[i]);
    }
    scores.push_back(s);
    paths.push_back(path);
    int pos = m - 1;
    while (pos >= 0 && ++path[pos] == k) path[pos--] = 0;
    if (pos < 0) break;
  }
  Enumeration out;
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t p = 0; p < scores.size(); ++p) {
    // Enumeration order is lexicographic, so strict > keeps the lowest labels on ties.
    if (scores[p] > best) {
      best = scores[p];
      out.argmax = paths[p];
    }
  }
  double sum = 0.0;
  for (double s : scores) sum += std::exp(s - best);
  out.log_z = best + std::log(sum);
  for (double s : scores) out.total_probability += std::exp(s - out.log_z);
  return out;
}

}  // namespace sketchparse::testing
