#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "sketchparse/crf.hpp"
#include "sketchparse/error.hpp"
#include "sketchparse/pipeline.hpp"

namespace py = pybind11;
namespace sp = sketchparse;

namespace {

py::object loads(const std::string& text) { return py::module_::import("json").attr("loads")(text); }

std::string dumps(const py::handle& obj) {
  return py::module_::import("json").attr("dumps")(obj).cast<std::string>();
}

sp::Corpus to_corpus(const py::iterable& samples) {
  sp::Corpus c;
  for (const auto& s : samples) c.samples.push_back(sp::sample_from_json_line(dumps(s)));
  return c;
}

py::list to_list(const sp::Corpus& c) {
  py::list out;
  for (const auto& s : c.samples) out.append(loads(sp::sample_to_json_line(s)));
  return out;
}

py::dict inspect(const py::handle& sample) {
  const auto s = sp::sample_from_json_line(dumps(sample));
  const auto lf = s.parsed_form();
  const auto sketch = sp::extract_sketch(lf, s.params);
  const auto order = sp::question_order(s.params);
  py::list bindings;
  for (const auto& b : sketch.bindings) bindings.append(py::make_tuple(b.placeholder, b.value));
  py::dict d;
  d["sketch"] = sketch.str();
  d["bindings"] = bindings;
  d["question_pattern"] = sp::derive_question_pattern(s.question_tokens(), s.params).str();
  d["lf_pattern"] = sp::derive_lf_pattern(lf, s.params, order).str();
  d["template"] = sp::derive_template(lf, s.params, order).str();
  d["restored"] = sp::substitute_sketch(sketch).str();
  return d;
}

py::dict prediction_dict(const sp::pipeline::PredictionResult& r) {
  py::list cands;
  for (const auto& c : r.set.candidates) {
    py::dict d;
    d["logical_form"] = c.logical_form;
    d["pattern_score"] = c.pattern_score;
    d["pe_score"] = c.pe_score;
    d["gen_score"] = c.gen_score;
    d["fused"] = c.fused;
    cands.append(d);
  }
  py::dict d;
  d["logical_form"] = r.logical_form;
  d["sketch_class"] = r.set.sketch_class;
  d["candidates"] = cands;
  d["diagnostic"] = r.diagnostic;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Sketch-based semantic parsing";

  py::register_exception<sp::Error>(m, "Error", PyExc_ValueError);

  m.def("tokenize", &sp::tokenize_question, py::arg("text"));
  m.def(
      "parse_logical_form", [](const std::string& text) { return sp::parse_logical_form(text).tokens; },
      py::arg("text"));
  m.def("inspect", &inspect, py::arg("sample"), "Sketch, bindings, patterns and template of one sample.");

  m.def("synthetic_classes", &sp::synthetic_class_names);
  m.def(
      "generate",
      [](std::optional<std::vector<std::string>> classes, int per_class, std::uint64_t seed, int entities,
         int predicates) {
        sp::GenConfig cfg;
        cfg.classes = classes ? *classes : sp::default_synthetic_classes();
        cfg.samples_per_class = per_class;
        cfg.seed = seed;
        cfg.entity_vocab = entities;
        cfg.predicate_vocab = predicates;
        return to_list(sp::generate_synthetic(cfg));
      },
      py::arg("classes") = py::none(), py::arg("per_class") = 100, py::arg("seed") = 7,
      py::arg("entities") = 200, py::arg("predicates") = 40);
  m.def(
      "split",
      [](const py::iterable& samples, std::array<double, 3> ratios, std::uint64_t seed) {
        const auto parts = sp::split(to_corpus(samples), ratios, seed);
        return py::make_tuple(to_list(parts.train), to_list(parts.dev), to_list(parts.test));
      },
      py::arg("samples"), py::arg("ratios") = std::array<double, 3>{0.8, 0.1, 0.1}, py::arg("seed") = 7);
  m.def(
      "load_jsonl", [](const std::filesystem::path& path) { return to_list(sp::load_jsonl(path)); },
      py::arg("path"));
  m.def(
      "save_jsonl",
      [](const std::filesystem::path& path, const py::iterable& samples) { sp::save_jsonl(path, to_corpus(samples)); },
      py::arg("path"), py::arg("samples"));

  m.def(
      "crf_log_partition",
      [](const sp::learn::Matrix& emissions, const sp::learn::Matrix& transitions) {
        return sp::multitask::crf_log_partition(emissions, transitions);
      },
      py::arg("emissions"), py::arg("transitions"), "Emissions are labels x positions.");
  m.def(
      "viterbi",
      [](const sp::learn::Matrix& emissions, const sp::learn::Matrix& transitions) {
        return sp::multitask::viterbi(emissions, transitions);
      },
      py::arg("emissions"), py::arg("transitions"));
  m.def(
      "normalize_losses", [](const std::vector<double>& losses) { return sp::genscore::normalize_losses(losses).scores; },
      py::arg("losses"));

  py::class_<sp::pipeline::System>(m, "System")
      .def_static(
          "train",
          [](const py::iterable& train, const py::iterable& dev, std::uint64_t seed, int epochs, int hidden) {
            sp::pipeline::SystemConfig cfg;
            cfg.seed = seed;
            cfg.multitask.epochs = epochs;
            cfg.multitask.hidden = hidden;
            const auto tr = to_corpus(train);
            const auto dv = to_corpus(dev);
            py::gil_scoped_release release;
            return sp::pipeline::train_system(tr, dv, cfg);
          },
          py::arg("train"), py::arg("dev"), py::arg("seed") = 1, py::arg("epochs") = 10, py::arg("hidden") = 64)
      .def_static("load", &sp::pipeline::load_system, py::arg("model_dir"))
      .def(
          "save", [](const sp::pipeline::System& s, const std::filesystem::path& dir) { sp::pipeline::save_system(s, dir); },
          py::arg("model_dir"))
      .def(
          "predict",
          [](const sp::pipeline::System& s, const std::string& question) {
            return prediction_dict(sp::pipeline::predict(question, s));
          },
          py::arg("question"))
      .def(
          "evaluate",
          [](const sp::pipeline::System& s, const py::iterable& samples) {
            return loads(sp::pipeline::to_json(sp::pipeline::evaluate(to_corpus(samples), s)).dump());
          },
          py::arg("samples"))
      .def_property_readonly("weights",
                             [](const sp::pipeline::System& s) {
                               return py::make_tuple(s.weights.pattern, s.weights.pe, s.weights.gen);
                             })
      .def_property_readonly("sketch_classes", [](const sp::pipeline::System& s) { return s.multitask.classes; });
}
