// Acceptance gate: prints one PASS/FAIL line per criterion and exits nonzero
// on any failure. Usage: sketchparse_acceptance <path-to-cli> [work-dir]

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "metrics_fixture.hpp"
#include "oracles.hpp"
#include "sketchparse/crf.hpp"
#include "sketchparse/genscore.hpp"
#include "sketchparse/learn.hpp"
#include "sketchparse/matchers.hpp"
#include "sketchparse/pipeline.hpp"

namespace fs = std::filesystem;
using namespace sketchparse;
using sketchparse::testing::central_difference;
using sketchparse::testing::relative_error;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

int failures = 0;

void report(int id, bool ok, const std::string& detail) {
  std::cout << (ok ? "PASS" : "FAIL") << " criterion " << id << ": " << detail << std::endl;
  failures += !ok;
}

std::string fmt(double v) {
  std::ostringstream out;
  out.precision(6);
  out << v;
  return out.str();
}

// 1. Sketch and template round trips on a 5,000-sample corpus in under 10 s.
void round_trips() {
  const auto start = Clock::now();
  GenConfig cfg;
  cfg.classes = synthetic_class_names();
  cfg.samples_per_class = (5000 + static_cast<int>(cfg.classes.size()) - 1) / static_cast<int>(cfg.classes.size());
  auto corpus = generate_synthetic(cfg);
  corpus.samples.resize(5000);
  std::size_t sketch_ok = 0, template_ok = 0;
  for (const auto& s : corpus.samples) {
    const auto lf = s.parsed_form();
    sketch_ok += substitute_sketch(extract_sketch(lf, s.params)) == lf;
    const auto order = question_order(s.params);
    std::vector<std::string> fillers(order.size());
    for (const auto& [surface, k] : order) fillers[k - 1] = surface;
    template_ok += substitute_template(derive_template(lf, s.params, order), fillers) == lf;
  }
  const double t = seconds_since(start);
  report(1, sketch_ok == 5000 && template_ok == 5000 && t < 10.0,
         "sketch " + std::to_string(sketch_ok) + "/5000, template " + std::to_string(template_ok) + "/5000, " +
             fmt(t) + " s (limit 10 s)");
}

// 2. Forward algorithm and Viterbi against enumeration, 200 instances, m <= 6, 4 labels.
void crf_oracle() {
  const auto start = Clock::now();
  learn::Rng rng(2024);
  int z_ok = 0, v_ok = 0;
  double worst = 0.0;
  for (int t = 0; t < 200; ++t) {
    const int m = 1 + t % 6;
    const learn::Matrix em = learn::random_normal(4, m, 1.5, rng);
    const learn::Matrix tr = learn::random_normal(4, 4, 1.0, rng);
    const auto ref = sketchparse::testing::enumerate_paths(em, tr);
    const double err = relative_error(multitask::crf_log_partition(em, tr), ref.log_z);
    worst = std::max(worst, err);
    z_ok += err <= 1e-6;
    v_ok += multitask::viterbi(em, tr) == ref.argmax;
  }
  const double t = seconds_since(start);
  report(2, z_ok == 200 && v_ok == 200 && t < 30.0,
         "logZ " + std::to_string(z_ok) + "/200 (worst rel " + fmt(worst) + ", tol 1e-6), viterbi " +
             std::to_string(v_ok) + "/200 exact, " + fmt(t) + " s (limit 30 s)");
}

// 3. Finite-difference gradient checks, 20 instances per loss.
void gradient_checks() {
  constexpr double tol = 1e-4;
  learn::Rng rng(99);
  int crf_ok = 0, ce_ok = 0, matcher_ok = 0;
  double worst = 0.0;
  auto track = [&](double analytic, double numeric) {
    const double e = relative_error(analytic, numeric);
    worst = std::max(worst, e);
    return e <= tol;
  };

  for (int t = 0; t < 20; ++t) {
    const int m = 1 + t % 6;
    learn::Matrix em = learn::random_normal(4, m, 1.0, rng);
    learn::Matrix tr = learn::random_normal(4, 4, 1.0, rng);
    multitask::LabelSeq gold(m);
    for (int i = 0; i < m; ++i) gold[i] = static_cast<int>(rng() % 4);
    multitask::CrfGrad g;
    multitask::crf_nll(em, tr, gold, &g);
    auto loss = [&] { return multitask::crf_nll(em, tr, gold); };
    bool ok = true;
    for (int r = 0; r < 4; ++r) {
      for (int c = 0; c < m; ++c) ok &= track(g.emissions(r, c), central_difference(em(r, c), loss));
      for (int c = 0; c < 4; ++c) ok &= track(g.transitions(r, c), central_difference(tr(r, c), loss));
    }
    crf_ok += ok;
  }

  for (int t = 0; t < 20; ++t) {
    learn::Vector z = learn::random_normal(3 + t % 5, 1, 2.0, rng).col(0);
    const int gold = static_cast<int>(rng() % z.size());
    learn::Vector g;
    learn::softmax_cross_entropy(z, gold, &g);
    auto loss = [&] { return learn::softmax_cross_entropy(z, gold); };
    bool ok = true;
    for (int i = 0; i < z.size(); ++i) ok &= track(g[i], central_difference(z[i], loss));
    ce_ok += ok;
  }

  learn::Vocab vocab;
  for (int i = 0; i < 8; ++i) vocab.add("t" + std::to_string(i));
  for (int t = 0; t < 20; ++t) {
    auto model = matchers::MatcherModel::init(vocab, 3, rng);
    model.head = learn::LinearHead::random(2, 12, 0.7, rng);
    std::vector<int> a, b;
    for (int i = 0; i < 1 + t % 3; ++i) a.push_back(2 + static_cast<int>(rng() % 8));
    for (int i = 0; i < 1 + t % 4; ++i) b.push_back(2 + static_cast<int>(rng() % 8));
    const int label = t % 2;
    matchers::MatcherGrads g(model);
    matchers::pair_loss(model, a, b, label, &g);
    auto loss = [&] { return matchers::pair_loss(model, a, b, label); };
    bool ok = true;
    for (int r = 0; r < 3; ++r) {
      ok &= track(g.embeddings(r, a[0]), central_difference(model.encoder.embeddings(r, a[0]), loss));
      ok &= track(g.embeddings(r, b.back()), central_difference(model.encoder.embeddings(r, b.back()), loss));
    }
    for (int r = 0; r < 2; ++r)
      for (int c = 0; c < 12; ++c) ok &= track(g.head.weight(r, c), central_difference(model.head.weight(r, c), loss));
    for (int r = 0; r < 2; ++r) ok &= track(g.head.bias[r], central_difference(model.head.bias[r], loss));
    matcher_ok += ok;
  }
  report(3, crf_ok == 20 && ce_ok == 20 && matcher_ok == 20,
         "crf nll " + std::to_string(crf_ok) + "/20, cross-entropy " + std::to_string(ce_ok) + "/20, matcher " +
             std::to_string(matcher_ok) + "/20 (worst rel " + fmt(worst) + ", tol 1e-4)");
}

// 4. Normalized generative scores.
void normalization_law() {
  learn::Rng rng(8);
  std::uniform_real_distribution<double> u(0.01, 20.0);
  bool ok = true;
  double worst = 0.0;
  for (int t = 0; t < 500; ++t) {
    std::vector<double> losses(1 + t % 12);
    for (auto& l : losses) l = u(rng);
    const double max = *std::max_element(losses.begin(), losses.end());
    const auto n = genscore::normalize_losses(losses);
    for (std::size_t i = 0; i < losses.size(); ++i) {
      const double expect = 1.0 - losses[i] / max;
      worst = std::max(worst, std::abs(n.scores[i] - expect));
      ok &= std::abs(n.scores[i] - expect) <= 1e-12;
      ok &= n.scores[i] >= 0.0 && n.scores[i] <= 1.0;
      if (losses[i] == max) ok &= n.scores[i] == 0.0;
    }
    const double c = 0.1 + u(rng);
    std::vector<double> scaled(losses);
    for (auto& l : scaled) l *= c;
    const auto ns = genscore::normalize_losses(scaled);
    for (std::size_t i = 0; i < losses.size(); ++i) ok &= std::abs(ns.scores[i] - n.scores[i]) <= 1e-12;
  }
  report(4, ok, "500 pools, max deviation " + fmt(worst) + " (tol 1e-12), bounded, max-loss -> 0, scale invariant");
}

// 5. Ranking resample counts.
void resample_counts() {
  const matchers::RankingSampling cfg;
  bool ok = cfg.threshold == 1e-4 && cfg.hard_picks == 20 && cfg.easy_picks == 5;
  int cases = 0;
  for (int hard : {0, 1, 7, 20, 21, 64}) {
    for (int easy : {0, 1, 4, 5, 6, 40}) {
      matchers::ResamplePool pool;
      pool.question = {{"what", "is", "entity1"}};
      pool.gold = {{"gold", "entity1"}};
      pool.sketch_class = "c";
      // Probabilities exactly at the threshold count as easy.
      for (int i = 0; i < hard; ++i) pool.negatives.push_back({{{"h" + std::to_string(i)}}, 1e-4 + 1e-3 * (i + 1)});
      for (int i = 0; i < easy; ++i) pool.negatives.push_back({{{"e" + std::to_string(i)}}, i % 2 ? 1e-4 : 1e-7});
      const std::vector<matchers::ResamplePool> pools{pool};
      const auto r = matchers::ranking_resample(pools, cfg, 17 + cases);
      ok &= r.hard == std::min(20, hard) && r.easy == std::min(5, easy);
      ok &= r.samples.size() == static_cast<std::size_t>(1 + std::min(20, hard) + std::min(5, easy));
      ++cases;
    }
  }
  report(5, ok, std::to_string(cases) + " pool shapes give min(20, hard) hard and min(5, easy) easy at threshold 1e-4");
}

struct EndToEnd {
  pipeline::TrainSummary summary;
  pipeline::MetricsReport test;
  double seconds = 0.0;
};

// 6 and 7. Full synthetic run: 8 classes, 40 predicates, 200 entities, 4000/500/500.
EndToEnd end_to_end() {
  const auto start = Clock::now();
  GenConfig g;
  g.classes = default_synthetic_classes();
  g.predicate_vocab = 40;
  g.entity_vocab = 200;
  g.samples_per_class = 625;
  g.seed = 7;
  const auto parts = split(generate_synthetic(g), {0.8, 0.1, 0.1}, 7);
  EndToEnd out;
  pipeline::SystemConfig cfg;
  const auto system = pipeline::train_system(parts.train, parts.dev, cfg, &out.summary);
  out.test = pipeline::evaluate(parts.test, system);
  out.seconds = seconds_since(start);
  std::cout << "  split " << parts.train.size() << "/" << parts.dev.size() << "/" << parts.test.size() << std::endl;
  return out;
}

void end_to_end_criteria() {
  const auto e = end_to_end();
  const double acc = 1.0 - e.test.overall.err_l;
  report(6, acc >= 0.95 && e.test.overall.err_m <= 0.05 && e.test.pattern_coverage == 1.0 && e.seconds < 300.0,
         "Acc_l " + fmt(acc) + " (>= 0.95), Err_m " + fmt(e.test.overall.err_m) + " (<= 0.05), coverage " +
             fmt(e.test.pattern_coverage) + " (= 1), " + fmt(e.seconds) + " s (limit 300 s)");
  report(7, e.summary.dev_tuned_accuracy >= e.summary.dev_baseline_accuracy,
         "tuned dev accuracy " + fmt(e.summary.dev_tuned_accuracy) + " >= baseline (1,0,0) " +
             fmt(e.summary.dev_baseline_accuracy));
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

int run(const std::string& cmd) {
  const int rc = std::system((cmd + " > /dev/null 2>&1").c_str());
  return rc;
}

// 8. Two independent train + evaluate runs through the command-line tool.
void reproducibility(const std::string& cli, const fs::path& work) {
  if (cli.empty() || !fs::exists(cli)) {
    report(8, false, "command-line tool not found: '" + cli + "'");
    return;
  }
  fs::remove_all(work);
  fs::create_directories(work);
  const auto q = [](const fs::path& p) { return "'" + p.string() + "'"; };
  const auto data = work / "data";
  bool ok = run(q(cli) + " gen-data --out " + q(data) + " --seed 5 --per-class 100") == 0;
  std::vector<std::string> reports, arrays;
  for (int r = 0; r < 2 && ok; ++r) {
    const auto model = work / ("model" + std::to_string(r));
    const auto rep = work / ("report" + std::to_string(r) + ".json");
    ok &= run(q(cli) + " train --train " + q(data / "train.jsonl") + " --dev " + q(data / "dev.jsonl") + " --out " +
              q(model) + " --epochs 4 --seed 3") == 0;
    ok &= run(q(cli) + " evaluate --model " + q(model) + " --test " + q(data / "test.jsonl") + " --hard " +
              q(data / "hard.jsonl") + " --report " + q(rep)) == 0;
    reports.push_back(slurp(rep));
    arrays.push_back(slurp(model / "arrays.bin") + slurp(model / "model.json"));
  }
  const bool same = ok && reports.size() == 2 && !reports[0].empty() && reports[0] == reports[1] &&
                    arrays[0] == arrays[1];
  report(8, same,
         same ? "reports (" + std::to_string(reports[0].size()) + " bytes) and model files byte-identical"
              : "runs failed or differ");
  fs::remove_all(work);
}

// 9. Hand-built six-sample fixture.
void fixture_metrics() {
  const auto f = sketchparse::testing::metrics_fixture();
  std::vector<pipeline::SampleOutcome> outcomes;
  for (std::size_t i = 0; i < f.samples.size(); ++i)
    outcomes.push_back(pipeline::assess(f.samples[i], f.predictions[i], f.classes));
  const auto r = pipeline::compute_metrics(outcomes);
  auto same = [](double a, double b) { return std::abs(a - b) <= 1e-12; };
  const bool ok = same(r.overall.err_s, f.kErrS) && same(r.overall.err_e, f.kErrE) &&
                  same(r.overall.err_m, f.kErrM) && same(r.overall.err_l, f.kErrL);
  report(9, ok,
         "Err_s " + fmt(r.overall.err_s) + " (6/35), Err_e " + fmt(r.overall.err_e) + " (1/3), Err_m " +
             fmt(r.overall.err_m) + " (1/2), Err_l " + fmt(r.overall.err_l) + " (2/3)");
}

}  // namespace

int main(int argc, char** argv) {
  const std::string cli = argc > 1 ? argv[1] : "";
  const fs::path work = argc > 2 ? fs::path(argv[2]) : fs::temp_directory_path() / "sketchparse_acceptance";
  try {
    round_trips();
    crf_oracle();
    gradient_checks();
    normalization_law();
    resample_counts();
    end_to_end_criteria();
    reproducibility(cli, work);
    fixture_metrics();
  } catch (const std::exception& e) {
    std::cout << "FAIL unexpected error: " << e.what() << std::endl;
    return 1;
  }
  std::cout << (failures == 0 ? "ALL PASS" : std::to_string(failures) + " FAILED") << std::endl;
  return failures == 0 ? 0 : 1;
}
