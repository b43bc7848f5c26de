#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <set>

#include "lyre/error.hpp"
#include "lyre/heatmap.hpp"
#include "test_util.hpp"

namespace lyre {
namespace {

using testing::tiny_checkpoint;

std::string note_json(int pitch, double duration = 1.0, double rest = 0.0) {
  return "{\"pitch\": " + std::to_string(pitch) + ", \"duration\": " + std::to_string(duration) +
         ", \"rest\": " + std::to_string(rest) + "}";
}

std::string line(const std::string& lyrics, std::size_t notes, int pitch = 60) {
  std::string out = "{\"lyrics\": \"" + lyrics + "\", \"notes\": [";
  for (std::size_t i = 0; i < notes; ++i) out += (i ? ", " : "") + note_json(pitch);
  return out + "]}";
}

/// Every note is pitch 60, duration 1, rest 0.
Corpus one_class_corpus() { return parse_corpus(line("la la la", 3) + "\n" + line("la la", 2) + "\n"); }

TrainConfig quick_config() {
  TrainConfig c;
  c.batch_size = 4;
  c.steps = 6;
  c.pretrain_steps = 3;
  c.checkpoint_interval = 2;
  return c;
}

// ---------------------------------------------------------------------------
// Corpus

TEST(Corpus, BundledToyCorpusLoadsAligned) {
  const Corpus c = load_corpus(default_corpus_path());
  EXPECT_GE(c.size(), 16u);
  std::set<std::string> lyrics;
  for (const auto& e : c.entries) {
    EXPECT_EQ(e.melody.size(), e.lyrics.size()) << "line " << e.line;
    std::string text;
    for (const auto& w : e.lyrics.words) text += w + " ";
    EXPECT_EQ(tokenize_lyrics(text).size(), e.melody.size()) << "line " << e.line;
    lyrics.insert(text);
  }
  EXPECT_EQ(lyrics.size(), c.size());
}

TEST(Corpus, AlignmentErrorNamesLine) {
  const std::string text = line("la la", 2) + "\n" + line("twinkle twinkle star", 4) + "\n";
  try {
    parse_corpus(text);
    FAIL();
  } catch (const CorpusError& e) {
    EXPECT_EQ(e.line(), 2u);
    const std::string what = e.what();
    EXPECT_NE(what.find("expected 5"), std::string::npos) << what;
    EXPECT_NE(what.find("found 4"), std::string::npos) << what;
  }
}

TEST(Corpus, EmptyFileIsRejected) {
  for (const char* text : {"", "\n\n  \n"}) {
    try {
      parse_corpus(text);
      FAIL();
    } catch (const CorpusError& e) {
      EXPECT_NE(std::string(e.what()).find("empty corpus"), std::string::npos);
    }
  }
}

TEST(Corpus, ParseErrorNamesLineAndColumn) {
  const std::string text = line("la", 1) + "\n{\"lyrics\": \"la\", \"notes\": [}\n";
  try {
    parse_corpus(text);
    FAIL();
  } catch (const CorpusError& e) {
    EXPECT_EQ(e.line(), 2u);
    EXPECT_NE(std::string(e.what()).find("column"), std::string::npos);
  }
}

TEST(Corpus, UnknownValueNamesLineAndValue) {
  const std::string text = "{\"lyrics\": \"la\", \"notes\": [" + note_json(60, 0.3) + "]}\n";
  try {
    parse_corpus(text);
    FAIL();
  } catch (const CorpusError& e) {
    EXPECT_EQ(e.line(), 1u);
    EXPECT_NE(std::string(e.what()).find("duration"), std::string::npos) << e.what();
  }
}

TEST(Corpus, BlankLinesKeepSourceLineNumbers) {
  const Corpus c = parse_corpus("\n" + line("la", 1) + "\n\n" + line("la la", 2, 62) + "\n");
  ASSERT_EQ(c.size(), 2u);
  EXPECT_EQ(c.entries[0].line, 2u);
  EXPECT_EQ(c.entries[1].line, 4u);
  EXPECT_EQ(c.entries[1].melody[0][Attribute::pitch], *c.vocab.index_of(Attribute::pitch, 62));
}

// ---------------------------------------------------------------------------
// Config and checkpoints

TEST(TrainConfig, TauAnnealsExponentially) {
  TrainConfig c;
  c.steps = 11;
  EXPECT_DOUBLE_EQ(c.tau_at(0), 1.0);
  EXPECT_NEAR(c.tau_at(10), 0.2, 1e-12);
  EXPECT_NEAR(c.tau_at(5), std::sqrt(0.2), 1e-12);
  c.tau_end = 0.0;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Checkpoint, RoundTripsExactly) {
  const Corpus corpus = one_class_corpus();
  Checkpoint c = train(corpus, tiny_checkpoint(corpus, quick_config()));
  const auto bytes = serialize_checkpoint(c);
  const Checkpoint back = deserialize_checkpoint(bytes);
  EXPECT_TRUE(back == c);
  EXPECT_EQ(serialize_checkpoint(back), bytes);
  EXPECT_EQ(fingerprint(back), fingerprint(bytes));
  EXPECT_EQ(fingerprint(bytes).size(), 16u);
}

TEST(Checkpoint, CorruptedByteFailsChecksum) {
  const Corpus corpus = one_class_corpus();
  auto bytes = serialize_checkpoint(tiny_checkpoint(corpus));
  bytes[bytes.size() / 2] ^= 0x01;
  try {
    deserialize_checkpoint(bytes);
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_EQ(e.fault(), FormatError::Fault::checksum);
  }
}

TEST(Checkpoint, FutureVersionIsUnsupported) {
  const Corpus corpus = one_class_corpus();
  const auto bytes = serialize_checkpoint(tiny_checkpoint(corpus));
  const std::span<const std::uint8_t> payload(bytes.data() + 20, bytes.size() - 20 - 32);
  const auto future = seal_container("LYRECKPT", Checkpoint::kFormatVersion + 1, payload);
  try {
    deserialize_checkpoint(future);
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_EQ(e.fault(), FormatError::Fault::unsupported_version);
  }
}

TEST(Checkpoint, TruncationIsReported) {
  const Corpus corpus = one_class_corpus();
  const auto bytes = serialize_checkpoint(tiny_checkpoint(corpus));
  const std::vector<std::uint8_t> cut(bytes.begin(), bytes.begin() + 100);
  EXPECT_THROW(deserialize_checkpoint(cut), FormatError);
}

TEST(Checkpoint, EmbeddingDimMustMatchModel) {
  const Corpus corpus = one_class_corpus();
  ModelConfig wide = testing::tiny_config();
  wide.embed_dim = 3;
  const Checkpoint c = tiny_checkpoint(corpus);
  EXPECT_THROW(initial_checkpoint(corpus.vocab, c.syllables, c.words, wide, TrainConfig{}), ConfigError);
}

// ---------------------------------------------------------------------------
// Training

TEST(Train, ZeroStepsLeavesCheckpointUnchanged) {
  const Corpus corpus = one_class_corpus();
  TrainConfig cfg = quick_config();
  cfg.steps = 0;
  const Checkpoint start = tiny_checkpoint(corpus, cfg);
  EXPECT_TRUE(train(corpus, start) == start);
}

TEST(Train, SameSeedGivesIdenticalBytes) {
  const Corpus corpus = load_corpus(default_corpus_path());
  const auto run = [&] { return serialize_checkpoint(train(corpus, tiny_checkpoint(corpus, quick_config()))); };
  EXPECT_EQ(run(), run());
  TrainConfig other = quick_config();
  other.seed = 2;
  EXPECT_NE(serialize_checkpoint(train(corpus, tiny_checkpoint(corpus, other))), run());
}

TEST(Train, CheckpointHookSeesIntervalStates) {
  const Corpus corpus = one_class_corpus();
  TrainConfig cfg = quick_config();
  std::vector<Checkpoint> saved;
  TrainHooks hooks;
  hooks.on_checkpoint = [&](const Checkpoint& c) { saved.push_back(c); };
  const Checkpoint full = train(corpus, tiny_checkpoint(corpus, cfg), hooks);
  ASSERT_EQ(saved.size(), 3u);
  EXPECT_EQ(saved[0].step, 2u);
  EXPECT_TRUE(saved.back() == full);
  // Resuming skips the warm start and continues to the configured step count.
  const Checkpoint resumed = train(corpus, saved[0]);
  EXPECT_EQ(resumed.step, 6u);
  EXPECT_EQ(resumed.adam_d.step_count, full.adam_d.step_count);
}

TEST(Train, MetricsRowsFollowTheInterval) {
  const Corpus corpus = one_class_corpus();
  std::vector<MetricsRow> rows;
  TrainHooks hooks;
  hooks.on_metrics = [&](const MetricsRow& r) { rows.push_back(r); };
  train(corpus, tiny_checkpoint(corpus, quick_config()), hooks);
  ASSERT_EQ(rows.size(), 3u);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(rows[i].step, 2 * (i + 1));
    EXPECT_TRUE(std::isfinite(rows[i].loss_d) && std::isfinite(rows[i].loss_g));
    EXPECT_TRUE(std::isfinite(rows[i].loss_mi));
  }
  EXPECT_NEAR(rows.back().tau, 0.2, 1e-12);
  EXPECT_EQ(metrics_csv_header(), "step,loss_d,loss_g,loss_mi,tau");
  EXPECT_EQ(metrics_csv_row({4, 0.5, 1.25, 0.0, 0.2}), "4,0.500000,1.250000,0.000000,0.200000");
}

TEST(Train, PretrainLowersCrossEntropy) {
  const Corpus corpus = load_corpus(default_corpus_path());
  Checkpoint c = tiny_checkpoint(corpus, quick_config());
  const auto losses = pretrain_generator(corpus, c, 300);
  ASSERT_EQ(losses.size(), 300u);
  const auto mean = [&](std::size_t from) {
    double s = 0.0;
    for (std::size_t i = from; i < from + 20; ++i) s += losses[i];
    return s / 20.0;
  };
  EXPECT_LT(mean(280), mean(0) - 0.5);
}

TEST(Train, PretrainLearnsOneClassData) {
  const Corpus corpus = one_class_corpus();
  TrainConfig cfg = quick_config();
  cfg.lr_pretrain = 1e-2;
  Checkpoint c = tiny_checkpoint(corpus, cfg);
  pretrain_generator(corpus, c, 200);
  Rng rng(3);
  const LyricsEmbedding x = c.encode(tokenize_lyrics("la la la"));
  const auto d = generator_distributions(x, sample_noise(3, c.model.noise_dim, rng), c.generator);
  const std::size_t p60 = *c.attributes.index_of(Attribute::pitch, 60);
  for (std::size_t t = 0; t < 3; ++t) EXPECT_GT(d[Attribute::pitch].at(t, p60), 0.9);
}

TEST(Train, ZeroPretrainStepsLeavesParameters) {
  const Corpus corpus = one_class_corpus();
  Checkpoint c = tiny_checkpoint(corpus, quick_config());
  const Checkpoint before = c;
  EXPECT_TRUE(pretrain_generator(corpus, c, 0).empty());
  EXPECT_TRUE(c == before);
}

TEST(Train, NonFiniteLossNamesStepAndComponent) {
  const Corpus corpus = one_class_corpus();
  TrainConfig cfg = quick_config();
  cfg.pretrain_steps = 0;
  Checkpoint c = tiny_checkpoint(corpus, cfg);
  c.discriminator.critic_bias.value.values[0] = std::nan("");
  try {
    train(corpus, c);
    FAIL();
  } catch (const NonFiniteError& e) {
    EXPECT_EQ(std::string(e.what()), "step 0: loss_d is not finite");
  }
}

TEST(Train, VocabularyMismatchIsRejected) {
  const Corpus corpus = one_class_corpus();
  Checkpoint c = tiny_checkpoint(corpus, quick_config());
  const Corpus other = parse_corpus(line("la", 1), testing::tiny_vocab());
  EXPECT_THROW(train(other, c), ConfigError);
}

// ---------------------------------------------------------------------------
// Evaluation

TEST(Evaluate, TotalVariationMatchesHandComputation) {
  const std::vector<double> p{0.5, 0.3, 0.2}, q{0.2, 0.3, 0.5};
  EXPECT_NEAR(total_variation(p, q), 0.3, 1e-15);
  EXPECT_EQ(total_variation(p, p), 0.0);
  EXPECT_THROW(total_variation(p, std::vector<double>{1.0}), ContractError);
}

TEST(Evaluate, CorpusMarginalsCountNotes) {
  const Corpus c = parse_corpus(line("la la la", 3, 60) + "\n" + line("la", 1, 62) + "\n");
  const auto m = corpus_marginals(c);
  EXPECT_DOUBLE_EQ(m[0][*c.vocab.index_of(Attribute::pitch, 60)], 0.75);
  EXPECT_DOUBLE_EQ(m[0][*c.vocab.index_of(Attribute::pitch, 62)], 0.25);
  EXPECT_DOUBLE_EQ(m[1][*c.vocab.index_of(Attribute::duration, 1.0)], 1.0);
}

TEST(Evaluate, MetricsAreBoundedAndDeterministic) {
  const Corpus corpus = one_class_corpus();
  const Checkpoint c = tiny_checkpoint(corpus, quick_config());
  const EvalMetrics a = evaluate(c, corpus, 7, 20);
  const EvalMetrics b = evaluate(c, corpus, 7, 20);
  EXPECT_EQ(a.samples, 40u);
  for (double tv : a.tv_distance) {
    EXPECT_GE(tv, 0.0);
    EXPECT_LE(tv, 1.0);
  }
  EXPECT_EQ(a.tv_distance, b.tv_distance);
  EXPECT_EQ(a.mi_mse, b.mi_mse);
  EXPECT_GE(a.mi_mse, 0.0);
  EXPECT_EQ(evaluate(c, corpus).samples, 1000u);
}

// ---------------------------------------------------------------------------
// Heatmaps

TEST(Heatmap, SourceNames) {
  EXPECT_EQ(parse_heatmap_source("embedding"), HeatmapSource::embedding);
  EXPECT_EQ(parse_heatmap_source("interpretable"), HeatmapSource::interpretable);
  EXPECT_THROW(parse_heatmap_source("raw"), ContractError);
}

TEST(Heatmap, UnknownSyllablesAreListed) {
  const Corpus corpus = load_corpus(default_corpus_path());
  const Checkpoint c = tiny_checkpoint(corpus);
  try {
    syllable_heatmap(c, {"twin", "zzq", "qqz"}, HeatmapSource::embedding);
    FAIL();
  } catch (const LookupError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("zzq, qqz"), std::string::npos) << what;
  }
  EXPECT_THROW(syllable_heatmap(c, {"twin"}, HeatmapSource::interpretable, {tokenize_lyrics("row row")}),
               LookupError);
}

TEST(Heatmap, MatricesAreSymmetricWithUnitDiagonal) {
  const Corpus corpus = load_corpus(default_corpus_path());
  const Checkpoint c = tiny_checkpoint(corpus);
  const std::vector<std::string> syl{"twin", "kle", "star", "twin"};
  for (HeatmapSource source : {HeatmapSource::embedding, HeatmapSource::interpretable}) {
    const SimilarityMatrix m = syllable_heatmap(c, syl, source, corpus.lyrics(), ProbeOptions{2, 11});
    const std::size_t n = syl.size();
    ASSERT_EQ(m.values.values.size(), n * n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        EXPECT_NEAR(m.values.values[i * n + j], m.values.values[j * n + i], 1e-12);
        EXPECT_EQ(m.values.values[0 * n + j], m.values.values[3 * n + j]);
      }
    for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(m.values.values[i * n + i], 1.0, 1e-12);
  }
}

TEST(Heatmap, RepeatedSimilarityIsDeterministicAndBounded) {
  const Corpus corpus = load_corpus(default_corpus_path());
  const Checkpoint c = tiny_checkpoint(corpus);
  const auto probe = corpus.lyrics();
  const double a = repeated_syllable_similarity(c, probe, ProbeOptions{2, 11});
  EXPECT_EQ(a, repeated_syllable_similarity(c, probe, ProbeOptions{2, 11}));
  EXPECT_GE(a, -1.0);
  EXPECT_LE(a, 1.0);
  EXPECT_EQ(repeated_syllable_similarity(c, {tokenize_lyrics("one two")}, ProbeOptions{2, 11}), 0.0);
}

}  // namespace
}  // namespace lyre
