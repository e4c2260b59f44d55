#include "testing.hpp"

#include <limits>

#include "sketchparse/crf.hpp"
#include "sketchparse/learn.hpp"

using namespace sketchparse;
using namespace sketchparse::multitask;
using learn::Matrix;
using sketchparse::testing::central_difference;
using sketchparse::testing::error_code;
using sketchparse::testing::relative_error;

TEST_SUITE("crf") {
  TEST_CASE("closed-form partitions") {
    Matrix em(4, 1);
    em << 0.5, -1.0, 2.0, 0.0;
    CHECK(crf_log_partition(em, Matrix::Zero(4, 4)) == doctest::Approx(learn::log_sum_exp(em.col(0))).epsilon(1e-12));
    CHECK(crf_log_partition(Matrix::Zero(4, 3), Matrix::Zero(4, 4)) ==
          doctest::Approx(3.0 * std::log(4.0)).epsilon(1e-12));
  }

  TEST_CASE("partition and viterbi agree with enumeration") {
    learn::Rng rng(17);
    for (int t = 0; t < 200; ++t) {
      const int m = 1 + t % 6;
      const Matrix em = learn::random_normal(4, m, 1.5, rng);
      const Matrix tr = learn::random_normal(4, 4, 1.0, rng);
      const auto ref = sketchparse::testing::enumerate_paths(em, tr);
      CHECK(relative_error(crf_log_partition(em, tr), ref.log_z) <= 1e-6);
      CHECK(viterbi(em, tr) == ref.argmax);
      CHECK(std::abs(ref.total_probability - 1.0) <= 1e-6);
    }
  }

  TEST_CASE("viterbi special cases") {
    learn::Rng rng(2);
    const Matrix one = learn::random_normal(1, 5, 1.0, rng);
    CHECK(viterbi(one, Matrix::Zero(1, 1)) == LabelSeq(5, 0));

    Matrix em = Matrix::Zero(4, 5);
    const LabelSeq want{2, 0, 3, 1, 2};
    for (int i = 0; i < 5; ++i) em(want[i], i) = 10.0;
    CHECK(viterbi(em, Matrix::Zero(4, 4)) == want);

    // All ties resolve to the lowest label.
    CHECK(viterbi(Matrix::Zero(4, 3), Matrix::Zero(4, 4)) == LabelSeq(3, 0));
  }

  TEST_CASE("nll is non-negative and zero for a forced path") {
    learn::Rng rng(5);
    for (int t = 0; t < 30; ++t) {
      const int m = 1 + t % 6;
      const Matrix em = learn::random_normal(4, m, 1.0, rng);
      const Matrix tr = learn::random_normal(4, 4, 1.0, rng);
      LabelSeq gold(m);
      for (int i = 0; i < m; ++i) gold[i] = (t + i) % 4;
      CHECK(crf_nll(em, tr, gold) >= 0.0);
    }
    Matrix em = Matrix::Constant(4, 3, -std::numeric_limits<double>::infinity());
    const LabelSeq gold{1, 2, 0};
    for (int i = 0; i < 3; ++i) em(gold[i], i) = 0.7;
    CHECK(std::abs(crf_nll(em, Matrix::Zero(4, 4), gold)) <= 1e-12);
    CHECK(error_code([&] { crf_nll(em, Matrix::Zero(4, 4), LabelSeq{1, 4, 0}); }) == ErrorCode::BadLabel);
    CHECK(error_code([&] { crf_nll(em, Matrix::Zero(4, 4), LabelSeq{1, 2}); }) == ErrorCode::BadLabel);
  }

  TEST_CASE("nll gradient matches finite differences") {
    learn::Rng rng(31);
    for (int t = 0; t < 24; ++t) {
      const int m = 1 + t % 6;
      Matrix em = learn::random_normal(4, m, 1.0, rng);
      Matrix tr = learn::random_normal(4, 4, 1.0, rng);
      LabelSeq gold(m);
      for (int i = 0; i < m; ++i) gold[i] = static_cast<int>(rng() % 4);
      CrfGrad grad;
      crf_nll(em, tr, gold, &grad);
      auto loss = [&] { return crf_nll(em, tr, gold); };
      for (int r = 0; r < 4; ++r) {
        for (int c = 0; c < m; ++c) CHECK(relative_error(grad.emissions(r, c), central_difference(em(r, c), loss)) <= 1e-4);
        for (int c = 0; c < 4; ++c) CHECK(relative_error(grad.transitions(r, c), central_difference(tr(r, c), loss)) <= 1e-4);
      }
    }
  }
}
