#include "sketchparse/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <regex>
#include <sstream>

#include <json.hpp>

#include "sketchparse/error.hpp"

namespace sketchparse {

using json = nlohmann::ordered_json;

Sample make_sample(std::string question, std::string logical_form,
                   std::vector<ParamAnnotation> params, std::string question_type) {
  Sample s;
  s.question = std::move(question);
  s.logical_form = std::move(logical_form);
  s.params = std::move(params);
  s.question_type = std::move(question_type);
  const auto tokens = tokenize_question(s.question);
  for (const auto& p : s.params) {
    if (p.span.start < 0 || p.span.end < p.span.start ||
        p.span.end >= static_cast<int>(tokens.size())) {
      throw Error(ErrorCode::SpanOutOfRange, p.surface + " [" + std::to_string(p.span.start) +
                                                 "," + std::to_string(p.span.end) + "]");
    }
  }
  s.sketch_class = extract_sketch(parse_logical_form(s.logical_form), s.params).str();
  return s;
}

namespace {

[[noreturn]] void rethrow_at(const Error& e, std::size_t index) {
  std::string what = e.what();
  throw Error(e.code(), what, index);
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  return in;
}

}  // namespace

std::string sample_to_json_line(const Sample& sample) {
  json params = json::array();
  for (const auto& p : sample.params) {
    params.push_back({{"surface", p.surface},
                      {"kind", std::string(to_string(p.kind))},
                      {"span", {p.span.start, p.span.end}}});
  }
  json j = {{"question", sample.question},
            {"logical_form", sample.logical_form},
            {"parameters", params},
            {"question_type", sample.question_type}};
  return j.dump();
}

Sample sample_from_json_line(const std::string& line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, e.what());
  }
  try {
    std::vector<ParamAnnotation> params;
    if (j.contains("parameters")) {
      for (const auto& p : j.at("parameters")) {
        const auto& span = p.at("span");
        if (!span.is_array() || span.size() != 2) {
          throw Error(ErrorCode::ParseError, "span must be [start,end]");
        }
        params.push_back({p.at("surface").get<std::string>(),
                          parse_param_kind(p.at("kind").get<std::string>()),
                          {span[0].get<int>(), span[1].get<int>()}});
      }
    }
    return make_sample(j.at("question").get<std::string>(), j.at("logical_form").get<std::string>(),
                       std::move(params), j.value("question_type", std::string{}));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, e.what());
  }
}

Corpus parse_jsonl(std::istream& in, SplitTag tag) {
  Corpus corpus;
  corpus.split = tag;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    try {
      corpus.samples.push_back(sample_from_json_line(line));
    } catch (const Error& e) {
      rethrow_at(e, line_no);
    }
  }
  return corpus;
}

Corpus load_jsonl(const std::filesystem::path& path, SplitTag tag) {
  auto in = open_input(path);
  return parse_jsonl(in, tag);
}

void write_jsonl(std::ostream& out, const Corpus& corpus) {
  for (const auto& s : corpus.samples) out << sample_to_json_line(s) << '\n';
}

void save_jsonl(const std::filesystem::path& path, const Corpus& corpus) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  write_jsonl(out, corpus);
}

namespace {

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<ParamAnnotation> parse_param_line(const std::string& text) {
  static const std::regex param_re(R"(^(\S+)\s+\((entity|value|type)\)\s+\[\s*(-?\d+)\s*,\s*(-?\d+)\s*\]$)");
  std::vector<ParamAnnotation> params;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto next = text.find("|||", pos);
    auto piece = trim(std::string_view(text).substr(pos, next == std::string::npos ? std::string::npos
                                                                                    : next - pos));
    if (!piece.empty()) {
      std::smatch m;
      if (!std::regex_match(piece, m, param_re)) {
        throw Error(ErrorCode::ParseError, "bad parameter '" + piece + "'");
      }
      params.push_back({m[1].str(), parse_param_kind(m[2].str()),
                        {std::stoi(m[3].str()), std::stoi(m[4].str())}});
    }
    if (next == std::string::npos) break;
    pos = next + 3;
  }
  return params;
}

enum class Field { Question, LogicalForm, Parameters, QuestionType };

// "<logical form id=3>\tbody" -> (LogicalForm, body)
bool parse_tagged(const std::string& line, Field& field, std::string& body) {
  if (line.empty() || line.front() != '<') return false;
  auto close = line.find('>');
  if (close == std::string::npos) return false;
  std::string tag = line.substr(1, close - 1);
  if (auto sp = tag.find(" id="); sp != std::string::npos) tag = tag.substr(0, sp);
  if (tag == "question") field = Field::Question;
  else if (tag == "logical form") field = Field::LogicalForm;
  else if (tag == "parameters") field = Field::Parameters;
  else if (tag == "question type") field = Field::QuestionType;
  else return false;
  body = trim(std::string_view(line).substr(close + 1));
  return true;
}

}  // namespace

Corpus parse_mspars_text(std::istream& in, SplitTag tag) {
  Corpus corpus;
  corpus.split = tag;
  std::map<Field, std::string> block;
  std::size_t block_index = 0;
  auto flush = [&] {
    if (block.empty()) return;
    if (block.size() != 4) {
      throw Error(ErrorCode::MalformedBlock, "expected four tagged lines", block_index);
    }
    try {
      corpus.samples.push_back(make_sample(block[Field::Question], block[Field::LogicalForm],
                                           parse_param_line(block[Field::Parameters]),
                                           block[Field::QuestionType]));
    } catch (const Error& e) {
      throw Error(ErrorCode::MalformedBlock, e.what(), block_index);
    }
    block.clear();
    ++block_index;
  };
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto t = trim(line);
    if (t.empty() || t.find_first_not_of('=') == std::string::npos) {
      flush();
      continue;
    }
    Field field;
    std::string body;
    if (!parse_tagged(t, field, body)) {
      throw Error(ErrorCode::MalformedBlock, "untagged line '" + t + "'", block_index);
    }
    if (block.contains(field)) flush();
    block[field] = body;
  }
  flush();
  return corpus;
}

Corpus load_mspars_text(const std::filesystem::path& path, SplitTag tag) {
  auto in = open_input(path);
  return parse_mspars_text(in, tag);
}

Splits split(const Corpus& corpus, std::array<double, 3> ratios, std::uint64_t seed) {
  double total = 0.0;
  for (double r : ratios) {
    if (!(r >= 0.0) || !std::isfinite(r)) throw Error(ErrorCode::BadRatios, "negative ratio");
    total += r;
  }
  if (std::abs(total - 1.0) > 1e-9) throw Error(ErrorCode::BadRatios, "ratios must sum to 1");

  const std::size_t n = corpus.size();
  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < n; ++i) groups[corpus.samples[i].sketch_class].push_back(i);

  std::mt19937_64 rng(seed);
  for (auto& [_, members] : groups) std::shuffle(members.begin(), members.end(), rng);

  // Global split sizes by largest remainder.
  std::array<long, 3> global{};
  {
    std::array<double, 3> rem{};
    long assigned = 0;
    for (int s = 0; s < 3; ++s) {
      double exact = ratios[s] * static_cast<double>(n);
      global[s] = static_cast<long>(std::floor(exact + 1e-9));
      rem[s] = exact - static_cast<double>(global[s]);
      assigned += global[s];
    }
    std::array<int, 3> order{0, 1, 2};
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return rem[a] > rem[b]; });
    for (long k = 0; k < static_cast<long>(n) - assigned; ++k) ++global[order[k % 3]];
  }

  // Per-class floors, then hand out each class's leftover units to distinct
  // splits so every class stays within one sample of its exact share.
  struct ClassAlloc {
    const std::vector<std::size_t>* members;
    std::array<long, 3> count{};
    std::array<double, 3> frac{};
    long leftover = 0;
  };
  std::vector<ClassAlloc> allocs;
  std::array<long, 3> deficit = global;
  for (const auto& [_, members] : groups) {
    ClassAlloc a{&members};
    long sum = 0;
    for (int s = 0; s < 3; ++s) {
      double exact = ratios[s] * static_cast<double>(members.size());
      a.count[s] = static_cast<long>(std::floor(exact + 1e-9));
      a.frac[s] = exact - static_cast<double>(a.count[s]);
      sum += a.count[s];
      deficit[s] -= a.count[s];
    }
    a.leftover = static_cast<long>(members.size()) - sum;
    allocs.push_back(a);
  }
  std::vector<std::size_t> by_leftover(allocs.size());
  std::iota(by_leftover.begin(), by_leftover.end(), 0);
  std::stable_sort(by_leftover.begin(), by_leftover.end(),
                   [&](auto a, auto b) { return allocs[a].leftover > allocs[b].leftover; });
  for (auto ci : by_leftover) {
    auto& a = allocs[ci];
    std::array<int, 3> order{0, 1, 2};
    std::stable_sort(order.begin(), order.end(), [&](int x, int y) {
      if (deficit[x] != deficit[y]) return deficit[x] > deficit[y];
      return a.frac[x] > a.frac[y];
    });
    for (long k = 0; k < a.leftover; ++k) {
      ++a.count[order[k % 3]];
      --deficit[order[k % 3]];
    }
  }

  std::vector<int> assignment(n, 0);
  for (const auto& a : allocs) {
    std::size_t pos = 0;
    for (int s = 0; s < 3; ++s)
      for (long k = 0; k < a.count[s]; ++k) assignment[(*a.members)[pos++]] = s;
  }
  Splits out;
  out.train.split = SplitTag::Train;
  out.dev.split = SplitTag::Dev;
  out.test.split = SplitTag::Test;
  for (std::size_t i = 0; i < n; ++i) {
    Corpus& target = assignment[i] == 0 ? out.train : assignment[i] == 1 ? out.dev : out.test;
    target.samples.push_back(corpus.samples[i]);
  }
  return out;
}

}  // namespace sketchparse
