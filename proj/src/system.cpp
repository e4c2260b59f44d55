#include <fstream>

#include "sketchparse/error.hpp"
#include "sketchparse/pipeline.hpp"

namespace sketchparse::pipeline {

namespace {

using nlohmann::ordered_json;

constexpr int kFormatVersion = 1;
constexpr const char* kFormatName = "sketchparse-model";

ordered_json vocab_json(const learn::Vocab& v) { return v.tokens(); }

learn::Vocab vocab_from(const ordered_json& j) {
  return learn::Vocab::from_tokens(j.get<std::vector<std::string>>());
}

ordered_json index_json(const matchers::PatternIndex& index) {
  ordered_json out = ordered_json::object();
  for (const auto& [cls, entries] : index.classes) {
    auto& list = out[cls] = ordered_json::array();
    for (const auto& e : entries) {
      ordered_json j;
      j["pattern"] = e.pattern.tokens;
      j["template"] = e.tmpl.tokens;
      j["entity_arity"] = e.tmpl.entity_arity;
      j["value_slots"] = e.tmpl.value_slots;
      j["type_slots"] = e.tmpl.type_slots;
      j["key"] = e.key;
      j["frequency"] = e.frequency;
      list.push_back(std::move(j));
    }
  }
  return out;
}

matchers::PatternIndex index_from(const ordered_json& j) {
  matchers::PatternIndex index;
  for (const auto& [cls, list] : j.items()) {
    auto& entries = index.classes[cls];
    for (const auto& e : list) {
      matchers::IndexEntry entry;
      entry.pattern.tokens = e.at("pattern").get<TokenSeq>();
      entry.tmpl.tokens = e.at("template").get<TokenSeq>();
      entry.tmpl.entity_arity = e.at("entity_arity").get<int>();
      entry.tmpl.value_slots = e.at("value_slots").get<std::vector<std::vector<std::size_t>>>();
      entry.tmpl.type_slots = e.at("type_slots").get<std::vector<std::vector<std::size_t>>>();
      entry.key = e.at("key").get<std::string>();
      entry.frequency = e.at("frequency").get<int>();
      entries.push_back(std::move(entry));
    }
  }
  return index;
}

ordered_json counts_json(const genscore::BigramCounts& c) {
  auto j = ordered_json::object();
  for (const auto& [prev, next] : c.next) {
    auto& row = j[prev] = ordered_json::object();
    for (const auto& [w, n] : next) row[w] = n;
  }
  return j;
}

genscore::BigramCounts counts_from(const ordered_json& j) {
  genscore::BigramCounts c;
  for (const auto& [prev, row] : j.items()) {
    for (const auto& [w, n] : row.items()) {
      const double v = n.get<double>();
      c.next[prev][w] = v;
      c.total[prev] += v;
    }
  }
  return c;
}

// The question lexicon is shared by all members and stored once.
ordered_json gen_json(const genscore::GenModel& m) {
  ordered_json j;
  j["copy_weight"] = m.copy_weight;
  j["smoothing"] = m.smoothing;
  j["lexical_weight"] = m.lexical_weight;
  j["vocabulary"] = m.vocabulary;
  auto& counts = j["counts"] = ordered_json::object();
  for (const auto& [cls, c] : m.counts) counts[cls] = counts_json(c);
  return j;
}

genscore::GenModel gen_from(const ordered_json& j) {
  genscore::GenModel m;
  m.copy_weight = j.at("copy_weight").get<double>();
  m.smoothing = j.at("smoothing").get<double>();
  m.lexical_weight = j.at("lexical_weight").get<double>();
  m.vocabulary = j.at("vocabulary").get<std::vector<std::string>>();
  for (const auto& [cls, by_prev] : j.at("counts").items()) m.counts[cls] = counts_from(by_prev);
  return m;
}

}  // namespace

void save_system(const System& system, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot create " + dir.string() + ": " + ec.message());

  const auto& mt = system.multitask;
  ordered_json j;
  j["format"] = kFormatName;
  j["version"] = kFormatVersion;
  auto& jm = j["multitask"];
  jm["classes"] = mt.classes;
  jm["hidden"] = mt.encoder.hidden();
  jm["window"] = mt.encoder.window;
  jm["max_length"] = mt.max_length;
  jm["vocab"] = vocab_json(mt.vocab);
  j["index"] = index_json(system.index);
  auto& members = j["matchers"] = ordered_json::array();
  for (const auto& m : system.matchers.members) members.push_back({{"vocab", vocab_json(m.vocab)}});
  auto& co = j["cooccurrence"];
  co["predicates"] = system.cooccurrence.predicates;
  auto& pairs = co["pairs"] = ordered_json::array();
  for (const auto& [p, e] : system.cooccurrence.pairs) pairs.push_back({p, e});
  co["vocab"] = vocab_json(system.cooccurrence.scorer.vocab);
  auto& gen = j["gen"] = ordered_json::array();
  for (const auto& m : system.gen.members) gen.push_back(gen_json(m));
  j["gen_lexicon"] = system.gen.members.empty() ? ordered_json::object() : counts_json(system.gen.members.front().lexicon);
  j["weights"] = {{"pattern", system.weights.pattern}, {"pe", system.weights.pe}, {"gen", system.weights.gen}};

  std::ofstream out(dir / "model.json", std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + (dir / "model.json").string());
  out << j.dump(1) << '\n';
  if (!out) throw Error(ErrorCode::Io, "write failed: " + (dir / "model.json").string());

  auto arrays = multitask::to_arrays(mt, "multitask/");
  for (std::size_t i = 0; i < system.matchers.members.size(); ++i)
    arrays.merge(matchers::to_arrays(system.matchers.members[i], "matcher" + std::to_string(i) + "/"));
  arrays.merge(matchers::to_arrays(system.cooccurrence.scorer, "cooccurrence/"));
  learn::save_arrays(dir / "arrays.bin", arrays);
}

System load_system(const std::filesystem::path& dir) {
  std::ifstream in(dir / "model.json", std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + (dir / "model.json").string());
  ordered_json j;
  try {
    j = ordered_json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("model.json: ") + e.what());
  }
  const auto arrays = learn::load_arrays(dir / "arrays.bin");
  try {
    if (j.at("format").get<std::string>() != kFormatName || j.at("version").get<int>() != kFormatVersion)
      throw Error(ErrorCode::ParseError, "unsupported model format");
    System sys;
    const auto& jm = j.at("multitask");
    sys.multitask = multitask::MultiTaskModel::zeros(vocab_from(jm.at("vocab")),
                                                     jm.at("classes").get<std::vector<std::string>>(),
                                                     jm.at("hidden").get<int>(), jm.at("window").get<int>());
    sys.multitask.max_length = jm.at("max_length").get<int>();
    multitask::from_arrays(sys.multitask, arrays, "multitask/");
    sys.index = index_from(j.at("index"));
    const auto& members = j.at("matchers");
    for (std::size_t i = 0; i < members.size(); ++i) {
      matchers::MatcherModel m;
      m.vocab = vocab_from(members[i].at("vocab"));
      matchers::from_arrays(m, arrays, "matcher" + std::to_string(i) + "/");
      sys.matchers.members.push_back(std::move(m));
    }
    const auto& co = j.at("cooccurrence");
    sys.cooccurrence.predicates = co.at("predicates").get<std::vector<std::string>>();
    for (const auto& p : co.at("pairs"))
      sys.cooccurrence.pairs.emplace(p.at(0).get<std::string>(), p.at(1).get<std::string>());
    sys.cooccurrence.scorer.vocab = vocab_from(co.at("vocab"));
    matchers::from_arrays(sys.cooccurrence.scorer, arrays, "cooccurrence/");
    for (const auto& g : j.at("gen")) sys.gen.members.push_back(gen_from(g));
    const auto lexicon = counts_from(j.at("gen_lexicon"));
    for (auto& m : sys.gen.members) m.lexicon = lexicon;
    const auto& w = j.at("weights");
    sys.weights = {w.at("pattern").get<double>(), w.at("pe").get<double>(), w.at("gen").get<double>()};
    return sys;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("model.json: ") + e.what());
  }
}

}  // namespace sketchparse::pipeline
