#pragma once

// Adversarial training with the MI term, checkpoints and evaluation.

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "lyre/corpus.hpp"
#include "lyre/embedding.hpp"
#include "lyre/melody_gan.hpp"
#include "lyre/mutual_info.hpp"
#include "lyre/optim.hpp"

namespace lyre {

struct TrainConfig {
  std::uint64_t seed = 1;
  std::size_t batch_size = 8;
  std::size_t steps = 2000;
  /// Maximum-likelihood warm start of the generator heads before the
  /// adversarial loop.
  std::size_t pretrain_steps = 300;
  double lr_pretrain = 1e-3;
  double lr_g = 1e-4;
  double lr_d = 1e-4;
  double lr_q = 1e-3;
  double lambda_mi = 0.5;
  double tau_start = 1.0;
  double tau_end = 0.2;
  std::size_t d_steps_per_g_step = 1;
  /// Metrics are emitted (and the checkpoint hook fires) every this many steps.
  std::size_t checkpoint_interval = 100;
  double clip_norm = 5.0;

  /// Throws ConfigError.
  void validate() const;
  /// Exponential anneal from tau_start at step 0 to tau_end at the last step.
  double tau_at(std::size_t step) const;
  bool operator==(const TrainConfig&) const = default;
};

/// Everything inference and resumed training need.
struct Checkpoint {
  static constexpr std::uint32_t kFormatVersion = 1;

  ModelConfig model;
  TrainConfig train;
  AttributeVocab attributes;
  EmbeddingTable syllables;
  EmbeddingTable words;
  GeneratorParams generator;
  DiscriminatorParams discriminator;
  PosteriorParams posterior;
  AdamState adam_g;  ///< generator without the M(x) projection
  AdamState adam_d;
  AdamState adam_q;  ///< M(x) projection followed by the posterior
  std::uint64_t step = 0;

  LyricsEmbedding encode(const LyricsSequence& seq) const { return lyre::encode(seq, syllables, words); }
  bool operator==(const Checkpoint&) const = default;
};

/// Fresh parameters drawn from train.seed.
/// Parameter lists in the order of adam_g and adam_q. The M(x) projection
/// only receives the MI gradient, so it is stepped with Q at lr_q.
std::vector<Parameter*> adversarial_params(Checkpoint& c);
std::vector<Parameter*> mi_params(Checkpoint& c);

Checkpoint initial_checkpoint(const AttributeVocab& vocab, EmbeddingTable syllables,
                              EmbeddingTable words, const ModelConfig& model, const TrainConfig& train);

std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint& ckpt);
/// Throws FormatError (checksum, truncation, magic, unsupported version).
Checkpoint deserialize_checkpoint(std::span<const std::uint8_t> bytes);
void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

/// First 16 hex digits of the SHA-256 of the serialized checkpoint.
std::string fingerprint(std::span<const std::uint8_t> checkpoint_bytes);
std::string fingerprint(const Checkpoint& ckpt);

struct MetricsRow {
  std::size_t step = 0;
  double loss_d = 0.0;
  double loss_g = 0.0;
  double loss_mi = 0.0;
  double tau = 0.0;
};

/// "step,loss_d,loss_g,loss_mi,tau"
std::string metrics_csv_header();
std::string metrics_csv_row(const MetricsRow& row);

struct TrainHooks {
  std::function<void(const MetricsRow&)> on_metrics;
  std::function<void(const Checkpoint&)> on_checkpoint;
};

/// Per-step mean cross-entropy of the three heads against the reference
/// melody, summed over attributes, plus the MI objective when lambda_mi > 0.
/// Updates the generator (and, with the MI term, Q) in place and returns the
/// cross-entropy before each update.
std::vector<double> pretrain_generator(const Corpus& corpus, Checkpoint& ckpt, std::size_t steps);

/// Runs pretraining (from step 0 only) and then ckpt.train.steps adversarial
/// steps. Throws NonFiniteError naming the step and loss component.
Checkpoint train(const Corpus& corpus, Checkpoint ckpt, const TrainHooks& hooks = {});

/// Skip-gram tables for the corpus followed by train().
Checkpoint train(const Corpus& corpus, const ModelConfig& model, const TrainConfig& config,
                 const SkipGramConfig& skipgram = {}, const TrainHooks& hooks = {});

struct EvalMetrics {
  std::array<double, 3> tv_distance{};  ///< generated vs corpus marginals, per attribute
  double mean_d_real = 0.0;
  double mean_d_fake = 0.0;
  double mi_mse = 0.0;  ///< reconstruction MSE of x from M(x)
  std::size_t samples = 0;
};

/// Generated marginals come from categorical draws of the head
/// distributions, samples_per_entry noise draws per corpus entry.
EvalMetrics evaluate(const Checkpoint& ckpt, const Corpus& corpus, std::uint64_t seed = 7,
                     std::size_t samples_per_entry = 0);

/// 0.5 * sum |p - q|
double total_variation(std::span<const double> p, std::span<const double> q);

/// Empirical per-attribute distributions of the corpus melodies.
std::array<std::vector<double>, 3> corpus_marginals(const Corpus& corpus);

}  // namespace lyre
