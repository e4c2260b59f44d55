#include "testing.hpp"

#include <map>
#include <set>
#include <sstream>

#include "sketchparse/data.hpp"

using namespace sketchparse;
using sketchparse::testing::error_code;

namespace {

const char* kBirthDateLine =
    R"j({"question":"what is birth date for chris pine","logical_form":"( lambda ?x ( mso:people.person.date_of_birth chris_pine ?x ) )","parameters":[{"surface":"chris_pine","kind":"entity","span":[5,6]}],"question_type":"single-relation"})j";

const char* kBirthDateBlock =
    "<question id=1>\twhat is birth date for chris pine\n"
    "<logical form id=1>\t( lambda ?x ( mso:people.person.date_of_birth chris_pine ?x ) )\n"
    "<parameters id=1>\tchris_pine (entity) [5,6]\n"
    "<question type id=1>\tsingle-relation\n";

}  // namespace

TEST_SUITE("data") {
  TEST_CASE("jsonl sample") {
    std::istringstream in(std::string(kBirthDateLine) + "\n");
    const auto c = parse_jsonl(in);
    REQUIRE(c.size() == 1);
    const auto& s = c.samples[0];
    REQUIRE(s.params.size() == 1);
    CHECK(s.params[0].kind == ParamKind::Entity);
    CHECK(s.params[0].span == Span{5, 6});
    CHECK(s.sketch_class == "( lambda ?x ( P1 E1 ?x ) )");
    CHECK(s == sketchparse::testing::birth_date_sample());
    CHECK(sample_to_json_line(s) == kBirthDateLine);
  }

  TEST_CASE("jsonl errors and empty input") {
    std::istringstream empty("");
    CHECK(parse_jsonl(empty).empty());

    std::string bad_span = kBirthDateLine;
    bad_span.replace(bad_span.find("[5,6]"), 5, "[9,9]");
    CHECK(error_code([&] { sample_from_json_line(bad_span); }) == ErrorCode::SpanOutOfRange);

    std::istringstream broken(std::string(kBirthDateLine) + "\n{not json\n");
    try {
      parse_jsonl(broken);
      FAIL("expected ParseError");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::ParseError);
      CHECK(e.index() == std::optional<std::size_t>(2));
    }
  }

  TEST_CASE("jsonl round trip is exact") {
    const auto corpus = sketchparse::testing::small_corpus(20);
    std::ostringstream out;
    write_jsonl(out, corpus);
    std::istringstream in(out.str());
    const auto back = parse_jsonl(in);
    CHECK(back == corpus);
    std::ostringstream again;
    write_jsonl(again, back);
    CHECK(again.str() == out.str());
  }

  TEST_CASE("tagged text") {
    std::istringstream in(std::string(kBirthDateBlock) + "\n==========\n" + kBirthDateBlock);
    const auto c = parse_mspars_text(in);
    REQUIRE(c.size() == 2);
    CHECK(c.samples[0] == sketchparse::testing::birth_date_sample());
    CHECK(c.samples[1].params[0].span == Span{5, 6});

    std::istringstream two_params(
        "<question id=1>\tis a bigger than b\n"
        "<logical form id=1>\t( mso:x.y a b )\n"
        "<parameters id=1>\ta (entity) [1,1] ||| b (entity) [4,4]\n"
        "<question type id=1>\tyesno\n");
    const auto c2 = parse_mspars_text(two_params);
    REQUIRE(c2.samples[0].params.size() == 2);
    CHECK(c2.samples[0].params[1].surface == "b");

    std::istringstream missing(
        "<question id=1>\twhat is birth date for chris pine\n"
        "<logical form id=1>\t( lambda ?x ( mso:people.person.date_of_birth chris_pine ?x ) )\n"
        "<question type id=1>\tsingle-relation\n");
    try {
      parse_mspars_text(missing);
      FAIL("expected MalformedBlock");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::MalformedBlock);
      CHECK(e.index() == std::optional<std::size_t>(0));
    }
  }

  TEST_CASE("split sizes, stratification and determinism") {
    GenConfig cfg;
    cfg.classes = {"single-relation", "aggregation", "yesno", "cvt"};
    cfg.samples_per_class = 25;
    const auto corpus = generate_synthetic(cfg);
    REQUIRE(corpus.size() == 100);
    const auto s = split(corpus, {0.8, 0.1, 0.1}, 3);
    CHECK(s.train.size() == 80);
    CHECK(s.dev.size() == 10);
    CHECK(s.test.size() == 10);

    std::map<std::string, std::array<int, 3>> per_class;
    for (const auto& x : s.train.samples) ++per_class[x.sketch_class][0];
    for (const auto& x : s.dev.samples) ++per_class[x.sketch_class][1];
    for (const auto& x : s.test.samples) ++per_class[x.sketch_class][2];
    const std::array<double, 3> ratios{0.8, 0.1, 0.1};
    for (const auto& [cls, counts] : per_class) {
      const int n = counts[0] + counts[1] + counts[2];
      for (int k = 0; k < 3; ++k) CHECK(std::abs(counts[k] - ratios[k] * n) <= 1.0);
    }

    const auto again = split(corpus, {0.8, 0.1, 0.1}, 3);
    CHECK(again.train == s.train);
    CHECK(again.dev == s.dev);
    CHECK(error_code([&] { split(corpus, {0.8, 0.3, 0.1}, 3); }) == ErrorCode::BadRatios);
  }

  TEST_CASE("synthetic generator") {
    GenConfig cfg;
    cfg.classes = {"single-relation"};
    cfg.predicate_vocab = 10;
    cfg.samples_per_class = 100;
    cfg.seed = 7;
    const auto a = generate_synthetic(cfg);
    const auto b = generate_synthetic(cfg);
    std::ostringstream oa, ob;
    write_jsonl(oa, a);
    write_jsonl(ob, b);
    CHECK(oa.str() == ob.str());
    REQUIRE(a.size() == 100);
    for (const auto& s : a.samples) CHECK(s.sketch_class == "( lambda ?x ( P1 E1 ?x ) )");

    GenConfig all;
    all.classes = synthetic_class_names();
    all.samples_per_class = 40;
    const auto corpus = generate_synthetic(all);
    std::set<std::string> classes;
    for (const auto& s : corpus.samples) {
      classes.insert(s.sketch_class);
      const auto lf = s.parsed_form();
      CHECK(substitute_sketch(extract_sketch(lf, s.params)) == lf);
    }
    CHECK(classes.size() == synthetic_class_names().size());
    CHECK(default_synthetic_classes().size() == 8);
  }
}
