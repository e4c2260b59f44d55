#include "sketchparse/core_lf.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <unordered_map>

#include "sketchparse/error.hpp"

namespace sketchparse {

std::string_view to_string(ParamKind kind) {
  switch (kind) {
    case ParamKind::Entity: return "entity";
    case ParamKind::Value: return "value";
    case ParamKind::Type: return "type";
  }
  return "entity";
}

ParamKind parse_param_kind(std::string_view text) {
  if (text == "entity") return ParamKind::Entity;
  if (text == "value") return ParamKind::Value;
  if (text == "type") return ParamKind::Type;
  throw Error(ErrorCode::ParseError, "unknown parameter kind '" + std::string(text) + "'");
}

std::string join(std::span<const std::string> tokens, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += sep;
    out += tokens[i];
  }
  return out;
}

TokenSeq tokenize(std::string_view text, bool lowercase) {
  TokenSeq tokens;
  std::string current;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!current.empty()) tokens.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(lowercase ? static_cast<char>(std::tolower(static_cast<unsigned char>(c)))
                                  : c);
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  if (tokens.empty()) throw Error(ErrorCode::EmptyInput, "no tokens in input");
  return tokens;
}

std::string span_surface(std::span<const std::string> tokens, Span span) {
  if (span.start < 0 || span.end < span.start || span.end >= static_cast<int>(tokens.size())) {
    throw Error(ErrorCode::SpanOutOfRange,
                "[" + std::to_string(span.start) + "," + std::to_string(span.end) + "]");
  }
  return join(tokens.subspan(span.start, span.length()), "_");
}

bool is_numeric_literal(std::string_view token) {
  std::size_t i = 0;
  if (i < token.size() && (token[i] == '+' || token[i] == '-')) ++i;
  std::size_t int_digits = 0;
  while (i < token.size() && std::isdigit(static_cast<unsigned char>(token[i]))) ++i, ++int_digits;
  std::size_t frac_digits = 0;
  if (i < token.size() && token[i] == '.') {
    ++i;
    while (i < token.size() && std::isdigit(static_cast<unsigned char>(token[i]))) ++i, ++frac_digits;
  }
  if (int_digits + frac_digits == 0) return false;
  if (i < token.size() && (token[i] == 'e' || token[i] == 'E')) {
    ++i;
    if (i < token.size() && (token[i] == '+' || token[i] == '-')) ++i;
    std::size_t exp_digits = 0;
    while (i < token.size() && std::isdigit(static_cast<unsigned char>(token[i]))) ++i, ++exp_digits;
    if (exp_digits == 0) return false;
  }
  return i == token.size();
}

bool is_predicate(std::string_view token) { return token.starts_with("mso:"); }

bool is_variable(std::string_view token) { return token.size() > 1 && token.front() == '?'; }

LogicalForm make_logical_form(TokenSeq tokens) {
  if (tokens.empty()) throw Error(ErrorCode::EmptyForm, "logical form has no tokens");
  LogicalForm lf;
  lf.tokens = std::move(tokens);
  std::size_t begin = 0;
  int depth = 0;
  bool broken = false;
  auto close_turn = [&](std::size_t end) {
    if (broken || depth != 0) {
      throw Error(ErrorCode::UnbalancedParens, "turn " + std::to_string(lf.turns.size()),
                  lf.turns.size());
    }
    lf.turns.emplace_back(begin, end);
  };
  for (std::size_t i = 0; i < lf.tokens.size(); ++i) {
    const auto& tok = lf.tokens[i];
    if (tok == kTurnSeparator) {
      close_turn(i);
      begin = i + 1;
      depth = 0;
    } else if (tok == "(") {
      ++depth;
    } else if (tok == ")") {
      if (--depth < 0) broken = true;
    }
  }
  close_turn(lf.tokens.size());
  return lf;
}

LogicalForm parse_logical_form(std::string_view text) {
  TokenSeq tokens;
  try {
    tokens = tokenize(text, false);
  } catch (const Error&) {
    throw Error(ErrorCode::EmptyForm, "logical form has no tokens");
  }
  return make_logical_form(std::move(tokens));
}

namespace {

// Positions holding the type argument of an "isa" group: the first
// non-variable token after "isa" before the group closes.
std::vector<bool> isa_type_positions(const TokenSeq& tokens) {
  std::vector<bool> marks(tokens.size(), false);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i] != "isa") continue;
    for (std::size_t j = i + 1; j < tokens.size(); ++j) {
      const auto& t = tokens[j];
      if (t == ")" || t == "(" || t == kTurnSeparator) break;
      if (is_variable(t)) continue;
      marks[j] = true;
      break;
    }
  }
  return marks;
}

std::set<std::string> surfaces_of(std::span<const ParamAnnotation> params, ParamKind kind) {
  std::set<std::string> out;
  for (const auto& p : params)
    if (p.kind == kind) out.insert(p.surface);
  return out;
}

// Distinct surfaces of one kind in question order.
std::vector<std::string> ordered_surfaces(std::span<const ParamAnnotation> params, ParamKind kind) {
  std::vector<const ParamAnnotation*> sel;
  for (const auto& p : params)
    if (p.kind == kind) sel.push_back(&p);
  std::stable_sort(sel.begin(), sel.end(),
                   [](const auto* a, const auto* b) { return a->span.start < b->span.start; });
  std::vector<std::string> out;
  for (const auto* p : sel)
    if (std::find(out.begin(), out.end(), p->surface) == out.end()) out.push_back(p->surface);
  return out;
}

}  // namespace

Sketch extract_sketch(const LogicalForm& lf, std::span<const ParamAnnotation> params) {
  for (const auto& p : params) {
    if (std::find(lf.tokens.begin(), lf.tokens.end(), p.surface) == lf.tokens.end()) {
      throw Error(ErrorCode::MissingSurface, p.surface);
    }
  }
  const auto entities = surfaces_of(params, ParamKind::Entity);
  const auto values = surfaces_of(params, ParamKind::Value);
  const auto types = surfaces_of(params, ParamKind::Type);
  const auto isa_types = isa_type_positions(lf.tokens);

  Sketch sketch;
  sketch.tokens.reserve(lf.tokens.size());
  std::unordered_map<std::string, std::string> assigned;
  int next_pred = 1;
  int next_entity = 1;
  auto indexed = [&](const std::string& tok, char prefix, int& counter) {
    auto it = assigned.find(tok);
    if (it != assigned.end()) return it->second;
    std::string ph = std::string(1, prefix) + std::to_string(counter++);
    assigned.emplace(tok, ph);
    sketch.bindings.push_back({ph, tok});
    return ph;
  };
  for (std::size_t i = 0; i < lf.tokens.size(); ++i) {
    const auto& tok = lf.tokens[i];
    if (isa_types[i] || types.contains(tok)) {
      sketch.tokens.push_back("T");
      sketch.bindings.push_back({"T", tok});
    } else if (entities.contains(tok)) {
      sketch.tokens.push_back(indexed(tok, 'E', next_entity));
    } else if (values.contains(tok) || is_numeric_literal(tok)) {
      sketch.tokens.push_back("V");
      sketch.bindings.push_back({"V", tok});
    } else if (is_predicate(tok)) {
      sketch.tokens.push_back(indexed(tok, 'P', next_pred));
    } else {
      sketch.tokens.push_back(tok);
    }
  }
  return sketch;
}

LogicalForm substitute_sketch(const Sketch& sketch) {
  std::unordered_map<std::string, std::string> indexed;
  std::vector<std::string> values, types;
  for (const auto& b : sketch.bindings) {
    if (b.placeholder == "V") values.push_back(b.value);
    else if (b.placeholder == "T") types.push_back(b.value);
    else indexed.emplace(b.placeholder, b.value);
  }
  std::size_t vi = 0, ti = 0;
  TokenSeq out;
  out.reserve(sketch.tokens.size());
  for (const auto& tok : sketch.tokens) {
    if (tok == "V" && vi < values.size()) {
      out.push_back(values[vi++]);
    } else if (tok == "T" && ti < types.size()) {
      out.push_back(types[ti++]);
    } else if (auto it = indexed.find(tok); it != indexed.end()) {
      out.push_back(it->second);
    } else {
      out.push_back(tok);
    }
  }
  return make_logical_form(std::move(out));
}

QuestionOrder question_order(std::span<const ParamAnnotation> params) {
  QuestionOrder order;
  int k = 1;
  for (const auto& s : ordered_surfaces(params, ParamKind::Entity)) order.emplace(s, k++);
  return order;
}

std::string entity_placeholder(int k) { return "entity" + std::to_string(k); }

int entity_placeholder_index(std::string_view token) {
  constexpr std::string_view prefix = "entity";
  if (!token.starts_with(prefix) || token.size() == prefix.size()) return 0;
  int k = 0;
  for (char c : token.substr(prefix.size())) {
    if (!std::isdigit(static_cast<unsigned char>(c))) return 0;
    k = k * 10 + (c - '0');
  }
  return k;
}

QuestionPattern question_pattern_from_spans(std::span<const std::string> question,
                                            std::vector<Span> spans) {
  std::sort(spans.begin(), spans.end());
  for (std::size_t i = 0; i < spans.size(); ++i) {
    const auto& s = spans[i];
    if (s.start < 0 || s.end < s.start || s.end >= static_cast<int>(question.size())) {
      throw Error(ErrorCode::SpanOutOfRange,
                  "[" + std::to_string(s.start) + "," + std::to_string(s.end) + "]");
    }
    if (i > 0 && s.start <= spans[i - 1].end) {
      throw Error(ErrorCode::OverlappingSpans, "spans overlap at token " + std::to_string(s.start));
    }
  }
  QuestionPattern qp;
  std::size_t next = 0;
  int k = 1;
  for (int i = 0; i < static_cast<int>(question.size());) {
    if (next < spans.size() && spans[next].start == i) {
      qp.tokens.push_back(entity_placeholder(k++));
      i = spans[next++].end + 1;
    } else {
      qp.tokens.push_back(question[i++]);
    }
  }
  return qp;
}

QuestionPattern derive_question_pattern(std::span<const std::string> question,
                                        std::span<const ParamAnnotation> params) {
  std::vector<Span> spans;
  for (const auto& p : params)
    if (p.kind == ParamKind::Entity) spans.push_back(p.span);
  return question_pattern_from_spans(question, std::move(spans));
}

TokenSeq split_compound(std::string_view token) {
  TokenSeq words;
  std::string cur;
  bool namespaced = token.find(':') != std::string_view::npos;
  auto flush = [&] {
    if (!cur.empty()) words.push_back(std::move(cur));
    cur.clear();
  };
  for (char c : token) {
    if (c == ':' || c == '.' || c == '_') flush();
    else cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  flush();
  if (namespaced && !words.empty() && words.front() == "mso") words.erase(words.begin());
  return words;
}

namespace {

int lookup_order(const QuestionOrder& order, const std::string& surface) {
  auto it = order.find(surface);
  if (it == order.end()) throw Error(ErrorCode::UnknownEntity, surface);
  return it->second;
}

}  // namespace

LfPattern derive_lf_pattern(const LogicalForm& lf, std::span<const ParamAnnotation> params,
                            const QuestionOrder& order) {
  const auto entities = surfaces_of(params, ParamKind::Entity);
  for (const auto& e : entities) lookup_order(order, e);
  LfPattern pattern;
  const auto& toks = lf.tokens;
  for (std::size_t i = 0; i < toks.size(); ++i) {
    const auto& tok = toks[i];
    if (tok == "(" || tok == ")") continue;
    if (tok == "lambda") {
      if (i + 1 < toks.size() && is_variable(toks[i + 1])) ++i;
      continue;
    }
    if (entities.contains(tok)) {
      pattern.tokens.push_back(entity_placeholder(lookup_order(order, tok)));
    } else if (is_predicate(tok)) {
      for (auto& w : split_compound(tok)) pattern.tokens.push_back(std::move(w));
    } else {
      pattern.tokens.push_back(tok);
    }
  }
  return pattern;
}

LfTemplate derive_template(const LogicalForm& lf, std::span<const ParamAnnotation> params,
                           const QuestionOrder& order) {
  const auto entities = surfaces_of(params, ParamKind::Entity);
  for (const auto& e : entities) lookup_order(order, e);
  LfTemplate t;
  t.tokens = lf.tokens;
  std::set<int> used;
  for (auto& tok : t.tokens) {
    if (entities.contains(tok)) {
      int k = lookup_order(order, tok);
      used.insert(k);
      tok = entity_placeholder(k);
    }
  }
  t.entity_arity = static_cast<int>(used.size());
  auto collect = [&](ParamKind kind) {
    std::vector<std::vector<std::size_t>> slots;
    for (const auto& surface : ordered_surfaces(params, kind)) {
      std::vector<std::size_t> positions;
      for (std::size_t i = 0; i < lf.tokens.size(); ++i)
        if (lf.tokens[i] == surface && !entities.contains(surface)) positions.push_back(i);
      if (!positions.empty()) slots.push_back(std::move(positions));
    }
    return slots;
  };
  t.value_slots = collect(ParamKind::Value);
  t.type_slots = collect(ParamKind::Type);
  return t;
}

LogicalForm substitute_template(const LfTemplate& tmpl, std::span<const std::string> fillers) {
  if (static_cast<int>(fillers.size()) != tmpl.entity_arity) {
    throw Error(ErrorCode::ArityMismatch, "template needs " + std::to_string(tmpl.entity_arity) +
                                              " fillers, got " + std::to_string(fillers.size()));
  }
  TokenSeq out = tmpl.tokens;
  for (auto& tok : out) {
    int k = entity_placeholder_index(tok);
    if (k >= 1 && k <= static_cast<int>(fillers.size())) tok = fillers[k - 1];
  }
  return make_logical_form(std::move(out));
}

}  // namespace sketchparse
