// Command-line front end: embeddings, training, generation, serving,
// heatmap export and evaluation.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <nlohmann/json.hpp>

#include "lyre/binary_io.hpp"
#include "lyre/corpus.hpp"
#include "lyre/error.hpp"
#include "lyre/heatmap.hpp"
#include "lyre/recommend.hpp"
#include "lyre/server.hpp"
#include "lyre/trainer.hpp"

namespace {

using namespace lyre;
namespace fs = std::filesystem;

void write_text(const std::string& path, const std::string& text) {
  write_file(path, std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (c == ',' || c == ' ') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

struct EmbeddingArgs {
  std::string corpus;
  std::string out;
  std::string csv_dir;
  SkipGramConfig sg;
};

struct TrainArgs {
  std::string corpus;
  std::string out;
  std::string embeddings;
  std::string metrics;
  std::string checkpoint_dir;
  std::string resume;
  ModelConfig model;
  TrainConfig train;
  SkipGramConfig sg;
};

struct GenerateArgs {
  std::string checkpoint;
  std::string lyrics;
  std::uint64_t seed = 0;
  std::size_t k = kDefaultCandidates;
  std::string out;
  std::string json;
};

struct ServeArgs {
  std::string checkpoint;
  std::string host = "127.0.0.1";
  int port = 8080;
};

struct HeatmapArgs {
  std::string checkpoint;
  std::string source = "embedding";
  std::string syllables;
  std::string probe;
  std::string out = "heatmap";
  ProbeOptions probe_options;
  std::size_t cell = 16;
};

struct EvalArgs {
  std::string checkpoint;
  std::string corpus;
  std::uint64_t seed = 7;
  std::size_t samples_per_entry = 0;
};

std::string corpus_or_default(const std::string& path) { return path.empty() ? default_corpus_path() : path; }

int run_train_embeddings(const EmbeddingArgs& a) {
  const Corpus corpus = load_corpus(corpus_or_default(a.corpus));
  const auto lyrics = corpus.lyrics();
  const EmbeddingTable syl = train_skipgram(lyrics, EmbeddingLevel::syllable, a.sg);
  const EmbeddingTable word = train_skipgram(lyrics, EmbeddingLevel::word, a.sg);
  write_file(a.out, save_embeddings(syl, word));
  if (!a.csv_dir.empty()) {
    fs::create_directories(a.csv_dir);
    write_text((fs::path(a.csv_dir) / "syllables.csv").string(), embedding_csv(syl));
    write_text((fs::path(a.csv_dir) / "words.csv").string(), embedding_csv(word));
  }
  std::printf("%zu syllables, %zu words -> %s\n", syl.vocab.size(), word.vocab.size(), a.out.c_str());
  return 0;
}

int run_train(TrainArgs a) {
  const Corpus corpus = load_corpus(corpus_or_default(a.corpus));
  Checkpoint start;
  if (!a.resume.empty()) {
    start = load_checkpoint(a.resume);
    start.train.steps = a.train.steps;
  } else if (!a.embeddings.empty()) {
    auto [syl, word] = load_embeddings(read_file(a.embeddings));
    start = initial_checkpoint(corpus.vocab, std::move(syl), std::move(word), a.model, a.train);
  } else {
    a.sg.dim = a.model.embed_dim;
    a.sg.seed = a.train.seed;
    const auto lyrics = corpus.lyrics();
    start = initial_checkpoint(corpus.vocab, train_skipgram(lyrics, EmbeddingLevel::syllable, a.sg),
                               train_skipgram(lyrics, EmbeddingLevel::word, a.sg), a.model, a.train);
  }
  std::ofstream metrics;
  if (!a.metrics.empty()) {
    metrics.open(a.metrics);
    if (!metrics) throw ContractError("cannot write " + a.metrics);
    metrics << metrics_csv_header() << '\n';
  }
  if (!a.checkpoint_dir.empty()) fs::create_directories(a.checkpoint_dir);
  TrainHooks hooks;
  hooks.on_metrics = [&](const MetricsRow& row) {
    const std::string line = metrics_csv_row(row);
    if (metrics.is_open()) metrics << line << '\n' << std::flush;
    std::fprintf(stderr, "%s\n", line.c_str());
  };
  if (!a.checkpoint_dir.empty())
    hooks.on_checkpoint = [&](const Checkpoint& c) {
      char name[40];
      std::snprintf(name, sizeof name, "step-%06llu.ckpt", static_cast<unsigned long long>(c.step));
      save_checkpoint(c, (fs::path(a.checkpoint_dir) / name).string());
    };
  const Checkpoint done = train(corpus, std::move(start), hooks);
  const auto bytes = serialize_checkpoint(done);
  write_file(a.out, bytes);
  std::printf("step %llu, model %s -> %s\n", static_cast<unsigned long long>(done.step), fingerprint(bytes).c_str(),
              a.out.c_str());
  return 0;
}

int run_generate(const GenerateArgs& a) {
  const Model model = Model::load(a.checkpoint);
  const GenerationResult r = generate(model, a.lyrics, a.seed, a.k);
  write_file(a.out, write_midi(r.score));
  if (!a.json.empty()) write_text(a.json, result_to_json(r));
  for (std::size_t t = 0; t < r.score.notes.size(); ++t) {
    const Note& n = r.score.notes[t];
    std::printf("%-10s pitch %3d  duration %.2f  rest %.2f\n", r.score.syllables[t].c_str(), n.pitch, n.duration,
                n.rest_before);
  }
  return 0;
}

int run_serve(const ServeArgs& a) {
  RecommendService service(Model::load(a.checkpoint));
  std::fprintf(stderr, "serving model %s on http://%s:%d\n", service.model().fingerprint.c_str(), a.host.c_str(),
               a.port);
  serve(service, a.host, a.port);
  return 0;
}

int run_export_heatmap(const HeatmapArgs& a) {
  const Checkpoint ckpt = load_checkpoint(a.checkpoint);
  const HeatmapSource source = parse_heatmap_source(a.source);
  std::vector<LyricsSequence> probe;
  const bool need_probe = source == HeatmapSource::interpretable || a.syllables.empty();
  if (need_probe) probe = load_corpus(corpus_or_default(a.probe)).lyrics();
  std::vector<std::string> syllables = split_list(a.syllables);
  if (syllables.empty()) {
    // Every syllable of the first probe sentence, in order of appearance.
    for (const auto& s : probe.at(0).syllables)
      if (std::find(syllables.begin(), syllables.end(), s) == syllables.end()) syllables.push_back(s);
  }
  const SimilarityMatrix m = syllable_heatmap(ckpt, syllables, source, probe, a.probe_options);
  write_text(a.out + ".csv", similarity_csv(m));
  write_file(a.out + ".ppm", similarity_ppm(m, a.cell));
  std::printf("%zu x %zu heatmap -> %s.csv, %s.ppm\n", syllables.size(), syllables.size(), a.out.c_str(),
              a.out.c_str());
  return 0;
}

int run_eval(const EvalArgs& a) {
  const Checkpoint ckpt = load_checkpoint(a.checkpoint);
  const Corpus corpus = load_corpus(corpus_or_default(a.corpus));
  const EvalMetrics m = evaluate(ckpt, corpus, a.seed, a.samples_per_entry);
  const nlohmann::json j{{"tv_pitch", m.tv_distance[0]},
                         {"tv_duration", m.tv_distance[1]},
                         {"tv_rest", m.tv_distance[2]},
                         {"mean_d_real", m.mean_d_real},
                         {"mean_d_fake", m.mean_d_fake},
                         {"mi_mse", m.mi_mse},
                         {"samples", m.samples},
                         {"model", fingerprint(ckpt)}};
  std::printf("%s\n", j.dump(2).c_str());
  return 0;
}

void add_model_options(CLI::App* cmd, ModelConfig& m) {
  cmd->add_option("--embed-dim", m.embed_dim, "Embedding size per level")->capture_default_str();
  cmd->add_option("--hidden", m.hidden, "Generator LSTM width")->capture_default_str();
  cmd->add_option("--noise-dim", m.noise_dim, "Noise size per step")->capture_default_str();
  cmd->add_option("--layers", m.layers, "Generator LSTM layers")->capture_default_str();
  cmd->add_option("--disc-hidden", m.disc_hidden, "Discriminator LSTM width")->capture_default_str();
  cmd->add_option("--q-hidden", m.q_hidden, "Posterior hidden width")->capture_default_str();
}

void add_train_options(CLI::App* cmd, TrainConfig& t) {
  cmd->add_option("--seed", t.seed, "Training seed")->capture_default_str();
  cmd->add_option("--batch-size", t.batch_size)->capture_default_str();
  cmd->add_option("--steps", t.steps, "Adversarial steps")->capture_default_str();
  cmd->add_option("--pretrain-steps", t.pretrain_steps, "Maximum-likelihood warm start steps")->capture_default_str();
  cmd->add_option("--lr-pretrain", t.lr_pretrain)->capture_default_str();
  cmd->add_option("--lr-g", t.lr_g)->capture_default_str();
  cmd->add_option("--lr-d", t.lr_d)->capture_default_str();
  cmd->add_option("--lr-q", t.lr_q)->capture_default_str();
  cmd->add_option("--lambda-mi", t.lambda_mi, "Weight of the MI term")->capture_default_str();
  cmd->add_option("--tau-start", t.tau_start)->capture_default_str();
  cmd->add_option("--tau-end", t.tau_end)->capture_default_str();
  cmd->add_option("--d-steps", t.d_steps_per_g_step, "Critic updates per generator update")->capture_default_str();
  cmd->add_option("--interval", t.checkpoint_interval, "Steps between metrics rows")->capture_default_str();
  cmd->add_option("--clip-norm", t.clip_norm)->capture_default_str();
}

void add_skipgram_options(CLI::App* cmd, SkipGramConfig& sg, bool with_dim) {
  if (with_dim) cmd->add_option("--dim", sg.dim, "Vector size")->capture_default_str();
  cmd->add_option("--window", sg.window)->capture_default_str();
  cmd->add_option("--negatives", sg.negatives)->capture_default_str();
  cmd->add_option("--epochs", sg.epochs)->capture_default_str();
  cmd->add_option("--sg-lr", sg.learning_rate, "Skip-gram learning rate")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lyrics-conditioned melody generation"};
  app.require_subcommand(1);

  EmbeddingArgs emb;
  auto* c_emb = app.add_subcommand("train-embeddings", "Train syllable and word skip-gram tables");
  c_emb->add_option("--corpus", emb.corpus, "JSON-lines corpus (default: bundled toy corpus)");
  c_emb->add_option("--out", emb.out, "Embedding blob to write")->required();
  c_emb->add_option("--csv-dir", emb.csv_dir, "Also write syllables.csv and words.csv here");
  c_emb->add_option("--seed", emb.sg.seed)->capture_default_str();
  add_skipgram_options(c_emb, emb.sg, true);

  TrainArgs tr;
  auto* c_train = app.add_subcommand("train", "Train the generator, critic and posterior");
  c_train->add_option("--corpus", tr.corpus, "JSON-lines corpus (default: bundled toy corpus)");
  c_train->add_option("--out", tr.out, "Checkpoint to write")->required();
  c_train->add_option("--embeddings", tr.embeddings, "Embedding blob from train-embeddings");
  c_train->add_option("--resume", tr.resume, "Continue from this checkpoint up to --steps");
  c_train->add_option("--metrics", tr.metrics, "Metrics CSV to write");
  c_train->add_option("--checkpoint-dir", tr.checkpoint_dir, "Write a checkpoint every interval here");
  add_model_options(c_train, tr.model);
  add_train_options(c_train, tr.train);
  add_skipgram_options(c_train, tr.sg, false);

  GenerateArgs gen;
  auto* c_gen = app.add_subcommand("generate", "Generate a melody for a lyric");
  c_gen->add_option("--checkpoint", gen.checkpoint)->required();
  c_gen->add_option("--lyrics", gen.lyrics)->required();
  c_gen->add_option("--seed", gen.seed)->capture_default_str();
  c_gen->add_option("--k", gen.k, "Candidates per attribute")->capture_default_str();
  c_gen->add_option("--out", gen.out, "MIDI file to write")->required();
  c_gen->add_option("--json", gen.json, "Also write the generation result as JSON");

  ServeArgs srv;
  auto* c_srv = app.add_subcommand("serve", "Serve the HTTP API");
  c_srv->add_option("--checkpoint", srv.checkpoint)->required();
  c_srv->add_option("--port", srv.port)->capture_default_str();
  c_srv->add_option("--host", srv.host)->capture_default_str();

  HeatmapArgs hm;
  auto* c_hm = app.add_subcommand("export-heatmap", "Write a syllable similarity heatmap as CSV and PPM");
  c_hm->add_option("--checkpoint", hm.checkpoint)->required();
  c_hm->add_option("--source", hm.source)->check(CLI::IsMember({"embedding", "interpretable"}))->capture_default_str();
  c_hm->add_option("--syllables", hm.syllables, "Comma-separated syllables (default: first probe sentence)");
  c_hm->add_option("--probe", hm.probe, "Corpus whose lyrics are run through the generator");
  c_hm->add_option("--out", hm.out, "Output prefix")->capture_default_str();
  c_hm->add_option("--noise-draws", hm.probe_options.noise_draws)->capture_default_str();
  c_hm->add_option("--cell", hm.cell, "Pixels per cell")->capture_default_str();

  EvalArgs ev;
  auto* c_eval = app.add_subcommand("eval", "Attribute marginals, critic scores and MI reconstruction");
  c_eval->add_option("--checkpoint", ev.checkpoint)->required();
  c_eval->add_option("--corpus", ev.corpus, "JSON-lines corpus (default: bundled toy corpus)");
  c_eval->add_option("--seed", ev.seed)->capture_default_str();
  c_eval->add_option("--samples-per-entry", ev.samples_per_entry, "0 draws about 1000 samples in total");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*c_emb) return run_train_embeddings(emb);
    if (*c_train) return run_train(tr);
    if (*c_gen) return run_generate(gen);
    if (*c_srv) return run_serve(srv);
    if (*c_hm) return run_export_heatmap(hm);
    if (*c_eval) return run_eval(ev);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
