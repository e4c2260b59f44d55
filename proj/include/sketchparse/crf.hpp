#pragma once

// Linear-chain CRF over a k x m emission matrix (labels x positions) and a
// k x k transition matrix indexed [from, to]. A path scores the sum of its
// emissions and transitions; there are no start/stop potentials. Entries of
// -inf mask a label at a position.

#include <span>
#include <vector>

#include "sketchparse/learn.hpp"

namespace sketchparse::multitask {

using learn::Matrix;
using learn::Vector;
using LabelSeq = std::vector<int>;

double crf_path_score(const Matrix& emissions, const Matrix& transitions, std::span<const int> labels);

double crf_log_partition(const Matrix& emissions, const Matrix& transitions);

struct CrfGrad {
  Matrix emissions;
  Matrix transitions;
};

// log Z - score(gold). When `grad` is given it receives dNLL/demissions and
// dNLL/dtransitions (expected minus observed counts). Throws BadLabel.
double crf_nll(const Matrix& emissions, const Matrix& transitions, std::span<const int> gold,
               CrfGrad* grad = nullptr);

// Highest-scoring path; ties resolve toward the lower label index.
LabelSeq viterbi(const Matrix& emissions, const Matrix& transitions);

}  // namespace sketchparse::multitask
