#pragma once

// Text algebra over questions and logical forms: tokenization, parsing,
// sketch extraction, pattern/template derivation and re-substitution.
// Every function here is pure.

#include <compare>
#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace sketchparse {

using TokenSeq = std::vector<std::string>;

enum class ParamKind { Entity, Value, Type };

std::string_view to_string(ParamKind kind);
ParamKind parse_param_kind(std::string_view text);

// Inclusive token span [start, end].
struct Span {
  int start = 0;
  int end = 0;

  int length() const { return end - start + 1; }
  auto operator<=>(const Span&) const = default;
};

struct ParamAnnotation {
  std::string surface;  // underscore-joined, as it appears in the logical form
  ParamKind kind = ParamKind::Entity;
  Span span;

  bool operator==(const ParamAnnotation&) const = default;
};

std::string join(std::span<const std::string> tokens, std::string_view sep = " ");

// Whitespace tokenization. Throws EmptyInput when no token remains.
TokenSeq tokenize(std::string_view text, bool lowercase);
inline TokenSeq tokenize_question(std::string_view text) { return tokenize(text, true); }

// Underscore-joined surface of question tokens [span.start, span.end].
std::string span_surface(std::span<const std::string> tokens, Span span);

bool is_numeric_literal(std::string_view token);
bool is_predicate(std::string_view token);
bool is_variable(std::string_view token);

inline constexpr std::string_view kTurnSeparator = "|||";

struct LogicalForm {
  TokenSeq tokens;
  // Half-open token ranges of each "|||"-separated turn.
  std::vector<std::pair<std::size_t, std::size_t>> turns;

  std::string str() const { return join(tokens); }
  bool operator==(const LogicalForm& other) const { return tokens == other.tokens; }
};

// Throws EmptyForm, or UnbalancedParens(turn) on the first bad turn.
LogicalForm parse_logical_form(std::string_view text);
LogicalForm make_logical_form(TokenSeq tokens);

struct Binding {
  std::string placeholder;  // P<i>, E<i>, V or T
  std::string value;

  bool operator==(const Binding&) const = default;
};

// P and E bindings appear once per distinct concrete token, in first-occurrence
// order. V and T are unindexed, so they carry one binding per occurrence.
struct Sketch {
  TokenSeq tokens;
  std::vector<Binding> bindings;

  std::string str() const { return join(tokens); }
};

Sketch extract_sketch(const LogicalForm& lf, std::span<const ParamAnnotation> params);
LogicalForm substitute_sketch(const Sketch& sketch);

// Entity surface -> 1-based order of first appearance in the question.
using QuestionOrder = std::map<std::string, int>;
QuestionOrder question_order(std::span<const ParamAnnotation> params);

struct QuestionPattern {
  TokenSeq tokens;
  std::string str() const { return join(tokens); }
  bool operator==(const QuestionPattern&) const = default;
};

struct LfPattern {
  TokenSeq tokens;
  std::string str() const { return join(tokens); }
  bool operator==(const LfPattern&) const = default;
};

std::string entity_placeholder(int k);
// Returns K for "entityK", 0 otherwise.
int entity_placeholder_index(std::string_view token);

// Replaces each span with entity1..entityM, numbered left to right.
QuestionPattern question_pattern_from_spans(std::span<const std::string> question,
                                            std::vector<Span> spans);
QuestionPattern derive_question_pattern(std::span<const std::string> question,
                                        std::span<const ParamAnnotation> params);

// Splits a predicate or entity on ':', '.', '_' and drops the "mso" namespace.
TokenSeq split_compound(std::string_view token);

LfPattern derive_lf_pattern(const LogicalForm& lf, std::span<const ParamAnnotation> params,
                            const QuestionOrder& order);

struct LfTemplate {
  TokenSeq tokens;
  int entity_arity = 0;
  // Token positions holding a value (resp. type) parameter, grouped per
  // distinct surface in question order. Tokens stay concrete.
  std::vector<std::vector<std::size_t>> value_slots;
  std::vector<std::vector<std::size_t>> type_slots;

  std::string str() const { return join(tokens); }
  bool operator==(const LfTemplate&) const = default;
};

LfTemplate derive_template(const LogicalForm& lf, std::span<const ParamAnnotation> params,
                           const QuestionOrder& order);

// entityK -> fillers[K-1]. Throws ArityMismatch.
LogicalForm substitute_template(const LfTemplate& tmpl, std::span<const std::string> fillers);

}  // namespace sketchparse
