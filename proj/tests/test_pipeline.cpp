#include "testing.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>

#include "metrics_fixture.hpp"
#include "sketchparse/pipeline.hpp"

using namespace sketchparse;
using namespace sketchparse::pipeline;
using sketchparse::testing::error_code;

namespace {

Candidate candidate(const std::string& lf, double pattern, double pe, double gen, int frequency = 1) {
  Candidate c;
  c.logical_form = lf;
  c.pattern_score = pattern;
  c.pe_score = pe;
  c.gen_score = gen;
  c.frequency = frequency;
  return c;
}

std::vector<std::string> forms(const std::vector<Candidate>& cs) {
  std::vector<std::string> out;
  for (const auto& c : cs) out.push_back(c.logical_form);
  return out;
}

struct TrainedSystem {
  Splits parts;
  System system;
  TrainSummary summary;
};

const TrainedSystem& trained() {
  static const TrainedSystem t = [] {
    TrainedSystem out;
    out.parts = split(sketchparse::testing::small_corpus(100), {0.8, 0.1, 0.1}, 3);
    const SystemConfig cfg;
    out.system = train_system(out.parts.train, out.parts.dev, cfg, &out.summary);
    return out;
  }();
  return t;
}

}  // namespace

TEST_SUITE("pipeline") {
  TEST_CASE("candidates from a single template") {
    Corpus one;
    one.samples.push_back(sketchparse::testing::birth_date_sample());
    const auto index = matchers::build_pattern_index(one);
    const auto& s = one.samples[0];
    const auto q = s.question_tokens();

    const auto set = generate_candidates(q, s.sketch_class, {{5, 6}}, index);
    REQUIRE(set.candidates.size() == 1);
    CHECK(set.candidates[0].logical_form == s.parsed_form().str());
    CHECK(set.entity_fillers == std::vector<std::string>{"chris_pine"});
    CHECK(set.value_fillers.empty());

    CHECK(generate_candidates(q, "count ( lambda ?x ( P1 E1 ?x ) )", {{5, 6}}, index).empty());
    CHECK(generate_candidates(q, s.sketch_class, {{0, 0}, {5, 6}}, index).empty());
    CHECK(generate_candidates(q, s.sketch_class, {}, index).empty());
  }

  TEST_CASE("gold spans always generate the gold form") {
    const auto corpus = sketchparse::testing::small_corpus(30);
    const auto index = matchers::build_pattern_index(corpus);
    for (const auto& s : corpus.samples) {
      const auto set = generate_candidates(s.question_tokens(), s.sketch_class, multitask::labeled_spans(s), index);
      const auto gold = s.parsed_form().str();
      const auto fs = forms(set.candidates);
      CHECK(std::find(fs.begin(), fs.end(), gold) != fs.end());
      std::vector<std::string> sorted = fs;
      std::sort(sorted.begin(), sorted.end());
      CHECK(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end());
    }
  }

  TEST_CASE("rank with pattern-only weights follows pattern scores") {
    std::vector<Candidate> cs{candidate("a", 0.2, 0.9, 0.9), candidate("b", 0.8, 0.1, 0.0),
                              candidate("c", 0.5, 0.5, 0.5)};
    const auto r = rank(cs, FusionWeights{});
    CHECK(forms(r) == std::vector<std::string>{"b", "c", "a"});
    CHECK(r[0].fused == 0.8);
    const auto g = rank(cs, FusionWeights{0.0, 0.0, 1.0});
    CHECK(g.front().logical_form == "a");
  }

  TEST_CASE("rank ties break by frequency then form") {
    std::vector<Candidate> cs{candidate("z", 0.5, 0.5, 0.5, 1), candidate("y", 0.5, 0.5, 0.5, 3),
                              candidate("x", 0.5, 0.5, 0.5, 1)};
    CHECK(forms(rank(cs, FusionWeights{})) == std::vector<std::string>{"y", "x", "z"});
  }

  TEST_CASE("rank is permutation invariant, bounded and monotone") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int t = 0; t < 50; ++t) {
      std::vector<Candidate> cs;
      for (int i = 0; i < 8; ++i) cs.push_back(candidate("lf" + std::to_string(i), u(rng), u(rng), u(rng), 1 + i % 3));
      double a = u(rng), b = u(rng) * (1.0 - a);
      const FusionWeights w{a, b, 1.0 - a - b};
      const auto base = rank(cs, w);
      for (const auto& c : base) {
        CHECK(c.fused >= 0.0);
        CHECK(c.fused <= 1.0 + 1e-12);
      }
      auto shuffled = cs;
      std::shuffle(shuffled.begin(), shuffled.end(), rng);
      CHECK(forms(rank(shuffled, w)) == forms(base));

      const auto target = base.back().logical_form;
      auto boosted = cs;
      for (auto& c : boosted)
        if (c.logical_form == target) c.pattern_score = std::min(1.0, c.pattern_score + 0.5);
      const auto after = forms(rank(boosted, w));
      const auto before_pos = forms(base).size() - 1;
      CHECK(static_cast<std::size_t>(std::find(after.begin(), after.end(), target) - after.begin()) <= before_pos);
    }
  }

  TEST_CASE("weight grid") {
    int evaluated = 0;
    std::vector<ScoredPool> one{{{candidate("g", 0.5, 0.5, 0.5)}, "g"}};
    CHECK(tune_weights(one, 0.05, &evaluated) == FusionWeights{1.0, 0.0, 0.0});
    CHECK(evaluated == 231);
    CHECK(error_code([] { tune_weights({}); }) == ErrorCode::EmptyCorpus);

    // Only the generative score separates gold here.
    std::vector<ScoredPool> gen_only{{{candidate("g", 0.4, 0.5, 0.9), candidate("h", 0.6, 0.5, 0.0)}, "g"}};
    const auto w = tune_weights(gen_only, 0.05);
    CHECK(pool_accuracy(gen_only, w) == 1.0);
    CHECK(pool_accuracy(gen_only, FusionWeights{}) == 0.0);
    // Gold wins iff 0.9g > 0.2p; the grid point with the largest p is (0.8, 0, 0.2).
    CHECK(w.pattern == doctest::Approx(0.8));
    CHECK(w.pe == 0.0);
  }

  TEST_CASE("exchangeable near miss") {
    const std::string gold = "( lambda ?x ( and ( mso:a.b.c e1 ?x ) ( or ( equal ?x m1 ) ( equal ?x m2 ) ) ) )";
    const std::string swapped = "( lambda ?x ( and ( mso:a.b.c e1 ?x ) ( or ( equal ?x m2 ) ( equal ?x m1 ) ) ) )";
    CHECK(exchangeable_near_miss(swapped, gold));
    CHECK_FALSE(exchangeable_near_miss(gold, gold));
    CHECK_FALSE(exchangeable_near_miss("( mso:a.b.c e2 e1 )", "( mso:a.b.c e1 e2 )"));
  }

  TEST_CASE("hand-built metrics fixture") {
    const auto f = sketchparse::testing::metrics_fixture();
    std::vector<SampleOutcome> outcomes;
    for (std::size_t i = 0; i < f.samples.size(); ++i) outcomes.push_back(assess(f.samples[i], f.predictions[i], f.classes));
    const auto r = compute_metrics(outcomes);
    CHECK(r.overall.count == 6);
    CHECK(std::abs(r.overall.err_s - f.kErrS) <= 1e-12);
    CHECK(std::abs(r.overall.err_e - f.kErrE) <= 1e-12);
    CHECK(std::abs(r.overall.err_m - f.kErrM) <= 1e-12);
    CHECK(std::abs(r.overall.err_l - f.kErrL) <= 1e-12);
    CHECK(std::abs(r.per_class.at(f.classes[0]).err_s - f.kErrSA) <= 1e-12);
    CHECK(std::abs(r.per_class.at(f.classes[1]).err_s - f.kErrSB) <= 1e-12);
    CHECK(r.gold_inclusion == doctest::Approx(2.0 / 6.0));
    CHECK(r.taxonomy.at("wrong-entities") == 2);
    CHECK(r.taxonomy.at("wrong-sketch") == 1);
    CHECK(r.taxonomy.at("wrong-predicate") == 1);
    CHECK(outcomes[2].no_candidates);

    const auto j = to_json(r);
    CHECK(j["error_taxonomy"]["wrong-order"] == 0);
    CHECK(j["overall"]["acc_l"].get<double>() == doctest::Approx(1.0 - f.kErrL));
  }

  TEST_CASE("taxonomy ordering and inventory misses") {
    const auto s = sketchparse::testing::birth_date_sample();
    PredictionResult p;
    p.set.sketch_class = s.sketch_class;
    p.set.spans = {{5, 6}};
    auto o = assess(s, p, {s.sketch_class});
    CHECK(o.taxonomy == "no-candidates");
    CHECK_FALSE(o.lf_ok);

    const auto swapped =
        make_sample("was ann lee directed by blue harbor", "( mso:film.film.directed_by blue_harbor ann_lee )",
                    {{"blue_harbor", ParamKind::Entity, {5, 6}}, {"ann_lee", ParamKind::Entity, {1, 2}}}, "yesno");
    PredictionResult q;
    q.set.sketch_class = swapped.sketch_class;
    q.set.spans = {{1, 2}, {5, 6}};
    q.set.entity_fillers = {"ann_lee", "blue_harbor"};
    q.logical_form = "( mso:film.film.directed_by ann_lee blue_harbor )";
    q.set.candidates.push_back(candidate(q.logical_form, 1, 1, 1));
    CHECK(assess(swapped, q, {swapped.sketch_class}).taxonomy == "wrong-order");

    const auto miss = assess(s, p, {"count ( lambda ?x ( P1 E1 ?x ) )", "( P1 E1 E2 )"});
    CHECK(miss.inventory_miss);
    CHECK(miss.gold_class == "count ( lambda ?x ( P1 E1 ?x ) )");
    CHECK_FALSE(miss.sketch_ok);
    CHECK(miss.taxonomy == "wrong-sketch");
  }

  TEST_CASE("trained system") {
    const auto& t = trained();
    std::size_t covered = 0;
    for (const auto& s : t.parts.dev.samples) {
      const auto gold = matchers::gold_pattern(s);
      const auto* entries = t.system.index.entries(s.sketch_class);
      if (!entries) continue;
      // Patterns match token by token; any two numeric literals are interchangeable.
      covered += std::any_of(entries->begin(), entries->end(), [&](const matchers::IndexEntry& e) {
        return std::equal(e.pattern.tokens.begin(), e.pattern.tokens.end(), gold.pattern.tokens.begin(),
                          gold.pattern.tokens.end(), [](const std::string& a, const std::string& b) {
                            return a == b || (is_numeric_literal(a) && is_numeric_literal(b));
                          });
      });
    }
    CHECK(t.summary.dev_pattern_coverage == doctest::Approx(static_cast<double>(covered) / t.parts.dev.size()));
    CHECK(t.summary.dev_pattern_coverage >= 0.9);
    CHECK(t.summary.dev_tuned_accuracy >= t.summary.dev_baseline_accuracy);

    const auto r = evaluate(t.parts.test, t.system);
    CHECK(r.overall.count == t.parts.test.size());
    CHECK(r.overall.err_m <= 0.05);
    CHECK(r.overall.err_l <= 0.10);
    CHECK(r.overall.err_l >= r.overall.err_m - 1e-12);
    CHECK(1.0 - r.overall.err_l <= r.gold_inclusion + 1e-12);

    // Independent recount of the form error.
    std::size_t wrong = 0;
    double weighted_s = 0.0;
    for (const auto& s : t.parts.test.samples) wrong += predict(s.question, t.system).logical_form != s.parsed_form().str();
    for (const auto& [cls, c] : r.per_class) weighted_s += c.err_s * c.count;
    CHECK(std::abs(r.overall.err_l - static_cast<double>(wrong) / t.parts.test.size()) <= 1e-12);
    CHECK(std::abs(r.overall.err_s - weighted_s / t.parts.test.size()) <= 1e-12);

    const auto& s = t.parts.test.samples.front();
    const auto p = predict(s.question, t.system);
    for (const auto& c : p.set.candidates) {
      CHECK(c.pattern_score >= 0.0);
      CHECK(c.pattern_score <= 1.0);
      CHECK(c.gen_score >= 0.0);
      CHECK(c.gen_score <= 1.0);
    }
  }

  TEST_CASE("no candidates yields a diagnostic") {
    const auto& t = trained();
    const auto p = predict("zzz", t.system);
    if (p.set.empty()) {
      CHECK(p.logical_form.empty());
      CHECK_FALSE(p.diagnostic.empty());
    }
  }

  TEST_CASE("save and load round trip") {
    const auto& t = trained();
    const auto dir = std::filesystem::temp_directory_path() / "sketchparse_pipeline_roundtrip";
    std::filesystem::remove_all(dir);
    save_system(t.system, dir);
    const auto loaded = load_system(dir);
    CHECK(loaded.weights == t.system.weights);
    CHECK(loaded.multitask.classes == t.system.multitask.classes);
    for (std::size_t i = 0; i < 20 && i < t.parts.test.size(); ++i) {
      const auto& q = t.parts.test.samples[i].question;
      const auto a = predict(q, t.system), b = predict(q, loaded);
      CHECK(a.logical_form == b.logical_form);
      REQUIRE(a.set.candidates.size() == b.set.candidates.size());
      for (std::size_t k = 0; k < a.set.candidates.size(); ++k) CHECK(a.set.candidates[k].fused == b.set.candidates[k].fused);
    }
    CHECK(to_json(evaluate(t.parts.test, loaded)).dump() == to_json(evaluate(t.parts.test, t.system)).dump());
    CHECK(error_code([&] { load_system(dir / "missing"); }) == ErrorCode::Io);
    std::filesystem::remove_all(dir);
  }
}
