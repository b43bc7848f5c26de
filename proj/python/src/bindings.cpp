#include <algorithm>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "lyre/corpus.hpp"
#include "lyre/error.hpp"
#include "lyre/heatmap.hpp"
#include "lyre/lyrics.hpp"
#include "lyre/recommend.hpp"
#include "lyre/score.hpp"
#include "lyre/trainer.hpp"

namespace py = pybind11;
using namespace lyre;

namespace {

py::bytes to_bytes(const std::vector<std::uint8_t>& b) {
  return py::bytes(reinterpret_cast<const char*>(b.data()), b.size());
}

std::vector<std::uint8_t> from_bytes(const py::bytes& b) {
  const std::string s = b;
  return {s.begin(), s.end()};
}

std::vector<Override> parse_overrides(const std::vector<py::tuple>& items) {
  std::vector<Override> out;
  for (const auto& t : items) {
    if (t.size() != 3) throw ContractError("override must be (step, attribute, value)");
    out.push_back({t[0].cast<std::size_t>(), parse_attribute(t[1].cast<std::string>()), t[2].cast<double>()});
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_lyre, m) {
  m.doc() = "Lyrics-conditioned melody generation";

  auto error = py::register_exception<Error>(m, "LyreError", PyExc_RuntimeError);
  py::register_exception<ContractError>(m, "ContractError", error.ptr());
  py::register_exception<TokenizationError>(m, "TokenizationError", error.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", error.ptr());
  py::register_exception<CorpusError>(m, "CorpusError", error.ptr());
  py::register_exception<LookupError>(m, "LookupError", error.ptr());
  py::register_exception<FormatError>(m, "FormatError", error.ptr());
  py::register_exception<MidiError>(m, "MidiError", error.ptr());
  py::register_exception<NotFoundError>(m, "NotFoundError", error.ptr());
  py::register_exception<NonFiniteError>(m, "NonFiniteError", error.ptr());

  m.def("syllabify", [](const std::string& word) { return syllabify(word); });
  m.def("tokenize", [](const std::string& text) {
    const LyricsSequence s = tokenize_lyrics(text);
    py::dict d;
    d["syllables"] = s.syllables;
    d["words"] = s.words;
    d["word_index_of_syllable"] = s.word_index_of_syllable;
    return d;
  });
  m.def("default_corpus_path", &default_corpus_path);
  m.def("corpus_size", [](const std::string& path) { return load_corpus(path).size(); });

  m.def(
      "train",
      [](const std::string& corpus_path, const std::string& out, std::size_t hidden, std::size_t steps,
         std::size_t pretrain_steps, double lambda_mi, std::uint64_t seed, std::size_t epochs) {
        const Corpus corpus = load_corpus(corpus_path);
        ModelConfig model;
        model.hidden = hidden;
        model.disc_hidden = hidden;
        model.q_hidden = std::min<std::size_t>(hidden, 32);
        TrainConfig cfg;
        cfg.steps = steps;
        cfg.pretrain_steps = pretrain_steps;
        cfg.lambda_mi = lambda_mi;
        cfg.seed = seed;
        cfg.checkpoint_interval = std::max<std::size_t>(1, steps);
        cfg.validate();
        model.validate();
        SkipGramConfig sg;
        sg.epochs = epochs;
        sg.seed = seed;
        Checkpoint ckpt;
        {
          py::gil_scoped_release release;
          ckpt = train(corpus, model, cfg, sg);
        }
        save_checkpoint(ckpt, out);
        return fingerprint(ckpt);
      },
      py::arg("corpus"), py::arg("out"), py::arg("hidden") = 32, py::arg("steps") = 100,
      py::arg("pretrain_steps") = 100, py::arg("lambda_mi") = 0.5, py::arg("seed") = 1, py::arg("epochs") = 10,
      "Trains a checkpoint and returns its fingerprint.");

  m.def(
      "evaluate",
      [](const std::string& checkpoint, const std::string& corpus_path, std::uint64_t seed) {
        const EvalMetrics e = evaluate(load_checkpoint(checkpoint), load_corpus(corpus_path), seed);
        py::dict d;
        d["tv_distance"] = std::vector<double>(e.tv_distance.begin(), e.tv_distance.end());
        d["mean_d_real"] = e.mean_d_real;
        d["mean_d_fake"] = e.mean_d_fake;
        d["mi_mse"] = e.mi_mse;
        d["samples"] = e.samples;
        return d;
      },
      py::arg("checkpoint"), py::arg("corpus"), py::arg("seed") = 7);

  py::class_<Model>(m, "Model")
      .def_static("load", &Model::load)
      .def_property_readonly("fingerprint", [](const Model& self) { return self.fingerprint; })
      .def(
          "generate_json",
          [](const Model& self, const std::string& lyrics, std::uint64_t seed, std::size_t k) {
            return result_to_json(generate(self, lyrics, seed, k));
          },
          py::arg("lyrics"), py::arg("seed") = 0, py::arg("k") = kDefaultCandidates)
      .def(
          "recompose_json",
          [](const Model& self, const std::string& lyrics, std::uint64_t seed, std::size_t k,
             const std::vector<py::tuple>& overrides) {
            const GenerationResult parent = generate(self, lyrics, seed, k);
            return result_to_json(recompose(parent, parse_overrides(overrides), self.checkpoint.attributes));
          },
          py::arg("lyrics"), py::arg("seed"), py::arg("k"), py::arg("overrides"),
          "Generates and applies (step, attribute, value) overrides.")
      .def(
          "heatmap_csv",
          [](const Model& self, const std::vector<std::string>& syllables, const std::string& source) {
            const std::vector<LyricsSequence> probe = load_corpus(default_corpus_path()).lyrics();
            return similarity_csv(syllable_heatmap(self.checkpoint, syllables, parse_heatmap_source(source), probe));
          },
          py::arg("syllables"), py::arg("source") = "embedding");

  m.def("score_to_midi", [](const std::string& score_json) { return to_bytes(write_midi(score_from_json(score_json))); });
  m.def("midi_to_score", [](const py::bytes& midi) { return score_to_json(rebuild_score(read_midi(from_bytes(midi)))); });
  m.def("midi_events", [](const py::bytes& midi) {
    py::list out;
    for (const MidiEvent& e : read_midi(from_bytes(midi)).events) {
      static const char* kinds[] = {"note_off", "note_on", "channel", "meta", "sysex"};
      out.append(py::make_tuple(e.time, kinds[static_cast<int>(e.kind)], e.status, e.meta_type,
                                py::bytes(reinterpret_cast<const char*>(e.data.data()), e.data.size())));
    }
    return out;
  });
  m.def("top_k", [](const std::vector<double>& probs, const std::vector<double>& values, std::size_t k) {
    std::vector<std::pair<double, double>> out;
    for (const Candidate& c : top_k(probs, values, k)) out.emplace_back(c.value, c.probability);
    return out;
  });
}
