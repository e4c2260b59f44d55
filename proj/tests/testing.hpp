#pragma once

#include <doctest.h>

#include <cmath>
#include <functional>

#include "oracles.hpp"
#include "sketchparse/data.hpp"
#include "sketchparse/error.hpp"

namespace sketchparse::testing {

// Runs `fn` and returns the code of the sketchparse::Error it throws.
template <typename Fn>
ErrorCode error_code(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected sketchparse::Error");
  return ErrorCode::Io;
}

inline Sample birth_date_sample() {
  return make_sample("what is birth date for chris pine",
                     "( lambda ?x ( mso:people.person.date_of_birth chris_pine ?x ) )",
                     {{"chris_pine", ParamKind::Entity, {5, 6}}}, "single-relation");
}

inline Sample multi_turn_sample() {
  return make_sample(
      "travels in the interior districts of africa has how many pages? ||| when is the date of "
      "publication of the book edition?",
      "( lambda ?x ( mso:book.edition.number_of_pages travels_in_the_interior_districts_of_africa ?x ) ) "
      "||| ( lambda ?x ( mso:book.edition.publication_date travels_in_the_interior_districts_of_africa ?x ) )",
      {{"travels_in_the_interior_districts_of_africa", ParamKind::Entity, {0, 6}}}, "multi-turn-entity");
}

// Small default synthetic corpus shared by the model tests.
inline Corpus small_corpus(int per_class = 80, std::uint64_t seed = 11) {
  GenConfig cfg;
  cfg.classes = default_synthetic_classes();
  cfg.samples_per_class = per_class;
  cfg.entity_vocab = 120;
  cfg.predicate_vocab = 24;
  cfg.seed = seed;
  return generate_synthetic(cfg);
}

}  // namespace sketchparse::testing
