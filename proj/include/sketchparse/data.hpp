#pragma once

// Corpus I/O (JSONL and tagged MSParS-style text), the seeded synthetic
// corpus generator, and stratified splitting.

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "sketchparse/core_lf.hpp"

namespace sketchparse {

struct Sample {
  std::string question;
  std::string logical_form;
  std::vector<ParamAnnotation> params;
  std::string question_type;
  std::string sketch_class;  // derived from the logical form at load time

  TokenSeq question_tokens() const { return tokenize_question(question); }
  LogicalForm parsed_form() const { return parse_logical_form(logical_form); }

  bool operator==(const Sample&) const = default;
};

// Validates spans against the question and fills `sketch_class`.
// Throws SpanOutOfRange, MissingSurface, UnbalancedParens, EmptyInput.
Sample make_sample(std::string question, std::string logical_form,
                   std::vector<ParamAnnotation> params, std::string question_type);

enum class SplitTag { Train, Dev, Test, Hard };

struct Corpus {
  std::vector<Sample> samples;
  SplitTag split = SplitTag::Train;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
  bool operator==(const Corpus&) const = default;
};

// JSONL codec: one object per line with keys question, logical_form,
// parameters ([{surface, kind, span:[start,end]}]) and question_type.
// Errors carry the 1-based line number.
Corpus parse_jsonl(std::istream& in, SplitTag tag = SplitTag::Train);
Corpus load_jsonl(const std::filesystem::path& path, SplitTag tag = SplitTag::Train);
std::string sample_to_json_line(const Sample& sample);
Sample sample_from_json_line(const std::string& line);
void write_jsonl(std::ostream& out, const Corpus& corpus);
void save_jsonl(const std::filesystem::path& path, const Corpus& corpus);

// Tagged text: blocks of four lines
//   <question id=N>\t...
//   <logical form id=N>\t...
//   <parameters id=N>\tsurface (kind) [start,end] ||| ...
//   <question type id=N>\t...
// separated by blank lines or lines of '='. Throws MalformedBlock(block).
Corpus parse_mspars_text(std::istream& in, SplitTag tag = SplitTag::Train);
Corpus load_mspars_text(const std::filesystem::path& path, SplitTag tag = SplitTag::Train);

struct Splits {
  Corpus train;
  Corpus dev;
  Corpus test;
};

// Seeded shuffle, stratified by sketch class. Throws BadRatios.
Splits split(const Corpus& corpus, std::array<double, 3> ratios, std::uint64_t seed);

// Synthetic corpus generator.

struct GenConfig {
  std::vector<std::string> classes;  // see synthetic_class_names()
  int entity_vocab = 200;
  int predicate_vocab = 40;
  int samples_per_class = 100;
  std::uint64_t seed = 7;
};

const std::vector<std::string>& synthetic_class_names();
// The eight shapes used by default: six question types plus a
// comparative and a superlative.
std::vector<std::string> default_synthetic_classes();
int max_synthetic_predicates();

Corpus generate_synthetic(const GenConfig& cfg);

}  // namespace sketchparse
