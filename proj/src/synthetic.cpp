// Seeded generator for MSParS-shaped question / logical-form pairs.
//
// Each class pairs a fixed logical-form shape with a few question templates.
// Predicates carry a unique relation phrase and entities come from disjoint
// per-domain word pools, so every question pattern determines exactly one
// logical-form pattern.

#include <algorithm>
#include <map>
#include <random>
#include <set>

#include "sketchparse/data.hpp"
#include "sketchparse/error.hpp"

namespace sketchparse {

namespace {

enum Domain { kPerson, kFilm, kBook, kLocation, kOrganization, kDomainCount };

struct PredicateDef {
  const char* name;
  const char* phrase;
  Domain domain;
};

// Listed round-robin across domains so any prefix covers every domain.
constexpr PredicateDef kPredicates[] = {
    {"mso:people.person.date_of_birth", "birth date", kPerson},
    {"mso:film.film.directed_by", "director", kFilm},
    {"mso:book.written_work.author", "author", kBook},
    {"mso:location.location.population", "population", kLocation},
    {"mso:organization.organization.founders", "founder", kOrganization},
    {"mso:people.person.place_of_birth", "birth place", kPerson},
    {"mso:film.film.initial_release_date", "release date", kFilm},
    {"mso:book.edition.publication_date", "publication date", kBook},
    {"mso:location.location.area", "total area", kLocation},
    {"mso:organization.organization.headquarters", "headquarters", kOrganization},
    {"mso:people.person.nationality", "nationality", kPerson},
    {"mso:film.film.genre", "genre", kFilm},
    {"mso:book.edition.number_of_pages", "page length", kBook},
    {"mso:location.location.time_zones", "time zone", kLocation},
    {"mso:organization.organization.ceo", "chief executive", kOrganization},
    {"mso:people.person.profession", "profession", kPerson},
    {"mso:film.film.runtime", "running time", kFilm},
    {"mso:book.edition.publisher", "publisher", kBook},
    {"mso:location.citytown.mayor", "mayor", kLocation},
    {"mso:organization.organization.industry", "industry", kOrganization},
    {"mso:people.person.spouse_s", "spouse", kPerson},
    {"mso:film.film.language", "spoken language", kFilm},
    {"mso:book.written_work.subjects", "subject", kBook},
    {"mso:location.location.elevation", "elevation", kLocation},
    {"mso:organization.organization.revenue", "annual revenue", kOrganization},
    {"mso:people.person.height_meters", "height", kPerson},
    {"mso:film.film.starring", "cast member", kFilm},
    {"mso:book.edition.isbn", "isbn", kBook},
    {"mso:location.location.date_founded", "founding date", kLocation},
    {"mso:organization.organization.number_of_employees", "workforce size", kOrganization},
    {"mso:people.person.religion", "religion", kPerson},
    {"mso:film.film.produced_by", "producer", kFilm},
    {"mso:book.written_work.original_language", "original language", kBook},
    {"mso:location.citytown.postal_codes", "postal code", kLocation},
    {"mso:organization.organization.parent", "parent company", kOrganization},
    {"mso:people.person.education", "alma mater", kPerson},
    {"mso:film.film.estimated_budget", "budget", kFilm},
    {"mso:book.edition.translated_by", "translator", kBook},
    {"mso:location.location.containedby", "containing region", kLocation},
    {"mso:organization.organization.slogan", "slogan", kOrganization},
    {"mso:people.person.employment_history", "employer", kPerson},
    {"mso:film.film.country", "production country", kFilm},
    {"mso:book.written_work.characters", "main character", kBook},
    {"mso:location.location.nearby_airports", "nearest airport", kLocation},
    {"mso:organization.organization.website", "official website", kOrganization},
    {"mso:people.person.children", "children", kPerson},
    {"mso:film.film.cinematographer", "cinematographer", kFilm},
    {"mso:book.written_work.genre", "literary genre", kBook},
};

const std::vector<std::vector<std::string>>& entity_pools() {
  static const auto pools = [] {
    std::vector<std::vector<std::string>> out(kDomainCount);
    auto cross = [](std::initializer_list<const char*> a, std::initializer_list<const char*> b) {
      std::vector<std::string> r;
      for (const char* x : a)
        for (const char* y : b) r.push_back(std::string(x) + " " + y);
      return r;
    };
    out[kPerson] = cross({"chris", "anna", "marco", "lena", "omar", "yuki", "david", "sofia",
                          "ravi", "elena", "jonas", "mira", "tomas", "nadia", "felix", "iris"},
                         {"pine", "holt", "varga", "okafor", "lindqvist", "moreau", "tanaka",
                          "brennan", "castillo", "novak", "haddad", "keller", "rossi", "sato",
                          "oduya", "fischer"});
    out[kFilm] = cross({"silent", "crimson", "broken", "golden", "hidden", "frozen", "wild",
                        "electric", "paper", "iron", "velvet", "hollow"},
                       {"harbor", "empire", "garden", "horizon", "mirror", "river", "signal",
                        "kingdom", "lantern", "orchard", "voyage", "circus"});
    for (const auto& ab : cross({"northern", "distant", "quiet", "burning", "endless", "winter",
                                 "ancient", "scarlet"},
                                {"tide", "ember", "atlas", "compass", "meadow", "canyon",
                                 "glacier", "lagoon"})) {
      for (const char* c : {"diaries", "sagas", "journals", "letters"})
        out[kBook].push_back(ab + " " + c);
    }
    const std::initializer_list<const char*> towns = {
        "arlen", "brisa", "corvo", "dunmore", "elstow", "farhaven", "galdor", "hollin", "ismere",
        "jorvik", "kestrel", "lumen", "marrow", "norvik", "ostrava", "pelham", "rovan", "sundal",
        "tiber", "ulmar", "vesper", "wexley", "yarrow", "zennor"};
    for (const char* t : towns) out[kLocation].push_back(t);
    for (const auto& s : cross({"port", "saint"}, towns)) out[kLocation].push_back(s);
    out[kOrganization] =
        cross({"acme", "zenith", "nimbus", "quanta", "helix", "orbit", "vertex", "cobalt",
               "summit", "aurora", "pinnacle", "stratus"},
              {"labs", "systems", "holdings", "group", "industries", "motors", "foods", "media"});
    return out;
  }();
  return pools;
}

struct ClassDef {
  const char* name;
  int predicates;
  int entities;
  bool value;
  const char* logical_form;  // P1.. / E1.. / V placeholders
  std::vector<const char*> questions;
};

const std::vector<ClassDef>& class_defs() {
  static const std::vector<ClassDef> defs = {
      {"single-relation", 1, 1, false, "( lambda ?x ( P1 E1 ?x ) )",
       {"what is the {r1} of {e1}", "what is {r1} for {e1}", "tell me the {r1} of {e1}",
        "{e1} has what {r1}"}},
      {"aggregation", 1, 1, false, "count ( lambda ?x ( P1 E1 ?x ) )",
       {"how many {r1} does {e1} have", "count the {r1} of {e1}",
        "what is the number of {r1} for {e1}"}},
      {"yesno", 1, 2, false, "( P1 E1 E2 )",
       {"is {e2} the {r1} of {e1}", "does {e1} have {e2} as its {r1}",
        "is the {r1} of {e1} equal to {e2}"}},
      {"multi-turn-entity", 2, 1, false,
       "( lambda ?x ( P1 E1 ?x ) ) ||| ( lambda ?x ( P2 E1 ?x ) )",
       {"what is the {r1} of {e1} ||| what about its {r2}",
        "tell me the {r1} of {e1} ||| and its {r2}"}},
      {"multi-turn-answer", 2, 1, false,
       "( lambda ?x ( P1 E1 ?x ) ) ||| ( lambda ?x exist ?y ( and ( P1 E1 ?y ) ( P2 ?y ?x ) ) )",
       {"what is the {r1} of {e1} ||| what is the {r2} of that",
        "tell me the {r1} of {e1} ||| and the {r2} of that one"}},
      {"cvt", 3, 2, false,
       "( lambda ?x exist ?y ( and ( P1 E1 ?y ) ( P2 ?y E2 ) ( P3 ?y ?x ) ) )",
       {"for the {r1} of {e1} with {r2} {e2} what is the {r3}",
        "what {r3} does the {r1} of {e1} have when its {r2} is {e2}"}},
      {"comparative", 2, 1, true, "argmore ( lambda ?x ( P1 E1 ?x ) ) P2 V",
       {"which {r1} of {e1} has a {r2} more than {v}",
        "find the {r1} of {e1} whose {r2} is greater than {v}"}},
      {"superlative", 2, 1, false, "argmax ( lambda ?x ( P1 E1 ?x ) ) P2",
       {"which {r1} of {e1} has the largest {r2}", "find the {r1} of {e1} with the highest {r2}"}},
      {"multi-turn-predicate", 2, 2, false,
       "( lambda ?x ( P1 E1 ?x ) ) ||| ( lambda ?x ( P2 E2 ?x ) )",
       {"what is the {r1} of {e1} ||| what is the {r2} of {e2}",
        "tell me the {r1} of {e1} ||| and the {r2} of {e2}"}},
      {"multi-choice", 1, 3, false,
       "( lambda ?x ( and ( P1 E1 ?x ) ( or ( equal ?x E2 ) ( equal ?x E3 ) ) ) )",
       {"which is the {r1} of {e1} , {e2} or {e3}", "among {e2} and {e3} which is the {r1} of {e1}"}},
  };
  return defs;
}

const ClassDef& find_class(const std::string& name) {
  for (const auto& d : class_defs())
    if (name == d.name) return d;
  throw Error(ErrorCode::ParseError, "unknown synthetic class '" + name + "'");
}

std::vector<std::string> split_words(const std::string& s) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos < s.size()) {
    auto next = s.find(' ', pos);
    if (next == std::string::npos) next = s.size();
    if (next > pos) out.push_back(s.substr(pos, next - pos));
    pos = next + 1;
  }
  return out;
}

std::string underscore(const std::string& words) {
  std::string out = words;
  std::replace(out.begin(), out.end(), ' ', '_');
  return out;
}

}  // namespace

const std::vector<std::string>& synthetic_class_names() {
  static const auto names = [] {
    std::vector<std::string> out;
    for (const auto& d : class_defs()) out.emplace_back(d.name);
    return out;
  }();
  return names;
}

std::vector<std::string> default_synthetic_classes() {
  return {"single-relation", "aggregation", "yesno", "multi-turn-entity",
          "multi-turn-answer", "cvt", "comparative", "superlative"};
}

int max_synthetic_predicates() { return static_cast<int>(std::size(kPredicates)); }

Corpus generate_synthetic(const GenConfig& cfg) {
  if (cfg.entity_vocab < 1 || cfg.predicate_vocab < 1 || cfg.samples_per_class < 1 ||
      cfg.classes.empty()) {
    throw Error(ErrorCode::EmptyCorpus, "generator sizes must be >= 1");
  }
  const int n_pred = std::min(cfg.predicate_vocab, max_synthetic_predicates());
  std::mt19937_64 rng(cfg.seed);

  // Entity inventory: an even share of each domain pool, seeded.
  std::vector<std::vector<std::string>> entities(kDomainCount);
  {
    const auto& pools = entity_pools();
    int remaining = cfg.entity_vocab;
    for (int d = 0; d < kDomainCount; ++d) {
      int want = remaining / (kDomainCount - d);
      auto pool = pools[d];
      std::shuffle(pool.begin(), pool.end(), rng);
      want = std::min<int>(std::max(want, 1), static_cast<int>(pool.size()));
      entities[d].assign(pool.begin(), pool.begin() + want);
      remaining -= want;
    }
  }
  std::vector<std::string> all_entities;
  for (const auto& d : entities) all_entities.insert(all_entities.end(), d.begin(), d.end());

  const int step1 = std::max(1, n_pred / 3);
  const int step2 = std::max(1, (2 * n_pred) / 3);

  Corpus corpus;
  for (const auto& class_name : cfg.classes) {
    const ClassDef& def = find_class(class_name);
    for (int j = 0; j < cfg.samples_per_class; ++j) {
      const int base = j % n_pred;
      const int preds[3] = {base, (base + step1) % n_pred, (base + step2) % n_pred};
      const PredicateDef* p[3] = {&kPredicates[preds[0]], &kPredicates[preds[1]],
                                  &kPredicates[preds[2]]};

      const char* qtemplate =
          def.questions[std::uniform_int_distribution<std::size_t>(0, def.questions.size() - 1)(rng)];

      std::vector<std::string> chosen;
      const auto& subject_pool = entities[p[0]->domain];
      chosen.push_back(
          subject_pool[std::uniform_int_distribution<std::size_t>(0, subject_pool.size() - 1)(rng)]);
      while (static_cast<int>(chosen.size()) < def.entities) {
        const auto& e = all_entities[std::uniform_int_distribution<std::size_t>(
            0, all_entities.size() - 1)(rng)];
        if (std::find(chosen.begin(), chosen.end(), e) == chosen.end() || all_entities.size() < 3) {
          chosen.push_back(e);
        }
      }
      const std::string value =
          std::to_string(std::uniform_int_distribution<int>(1, 999)(rng));

      // Render the question and record parameter spans as we go.
      std::vector<std::string> q_tokens;
      std::vector<ParamAnnotation> params;
      for (const auto& word : split_words(qtemplate)) {
        if (word.size() == 4 && word.front() == '{' && word.back() == '}') {
          const char kind = word[1];
          const int idx = word[2] - '1';
          if (kind == 'r') {
            for (auto& w : split_words(p[idx]->phrase)) q_tokens.push_back(w);
          } else if (kind == 'e') {
            const int start = static_cast<int>(q_tokens.size());
            for (auto& w : split_words(chosen[idx])) q_tokens.push_back(w);
            params.push_back({underscore(chosen[idx]), ParamKind::Entity,
                              {start, static_cast<int>(q_tokens.size()) - 1}});
          }
        } else if (word == "{v}") {
          const int start = static_cast<int>(q_tokens.size());
          q_tokens.push_back(value);
          params.push_back({value, ParamKind::Value, {start, start}});
        } else {
          q_tokens.push_back(word);
        }
      }

      std::vector<std::string> lf_tokens;
      for (const auto& tok : split_words(def.logical_form)) {
        if (tok.size() == 2 && tok[0] == 'P') lf_tokens.push_back(p[tok[1] - '1']->name);
        else if (tok.size() == 2 && tok[0] == 'E') lf_tokens.push_back(underscore(chosen[tok[1] - '1']));
        else if (tok == "V") lf_tokens.push_back(value);
        else lf_tokens.push_back(tok);
      }
      corpus.samples.push_back(
          make_sample(join(q_tokens), join(lf_tokens), std::move(params), def.name));
    }
  }
  return corpus;
}

}  // namespace sketchparse
