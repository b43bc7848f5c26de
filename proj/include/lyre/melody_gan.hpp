#pragma once

// Conditional LSTM generator and discriminator over discrete melody
// attributes, Gumbel-Softmax relaxation and the relativistic standard GAN
// losses.

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "lyre/attributes.hpp"
#include "lyre/autodiff.hpp"
#include "lyre/embedding.hpp"
#include "lyre/rng.hpp"

namespace lyre {

struct ModelConfig {
  std::size_t embed_dim = 10;  ///< per level; the condition vector is twice this
  std::size_t hidden = 128;
  std::size_t noise_dim = 20;
  std::size_t layers = 2;
  std::size_t disc_hidden = 128;
  std::size_t q_hidden = 32;

  std::size_t condition_width() const { return 2 * embed_dim; }
  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

struct LstmLayer {
  Parameter weight;  ///< [input + hidden, 4 hidden], gate order i, f, g, o
  Parameter bias;    ///< [1, 4 hidden]

  std::size_t hidden() const { return bias.value.shape[1] / 4; }
  bool operator==(const LstmLayer&) const = default;
};

struct LstmState {
  Var h;
  Var c;
};

LstmLayer init_lstm(const std::string& name, std::size_t input, std::size_t hidden, Rng& rng);
LstmState lstm_zero_state(Graph& g, std::size_t batch, std::size_t hidden);
LstmState lstm_step(Graph& g, const LstmLayer& layer, Var x, const LstmState& prev);

struct GeneratorParams {
  Parameter in_weight;  ///< [condition + noise, hidden]
  Parameter in_bias;
  std::vector<LstmLayer> lstm;
  std::array<Parameter, 3> head_weight;  ///< per attribute, [hidden, |vocab|]
  std::array<Parameter, 3> head_bias;
  Parameter interp_weight;  ///< [hidden, condition], produces M(x)
  Parameter interp_bias;

  std::vector<Parameter*> all();
  std::vector<const Parameter*> all() const;
  bool operator==(const GeneratorParams&) const = default;
};

struct DiscriminatorParams {
  LstmLayer lstm;        ///< over condition ++ three attribute vectors
  Parameter critic_weight;  ///< [disc_hidden, 1]
  Parameter critic_bias;

  std::vector<Parameter*> all();
  std::vector<const Parameter*> all() const;
  bool operator==(const DiscriminatorParams&) const = default;
};

GeneratorParams init_generator(const ModelConfig& config, const AttributeVocab& vocab, Rng& rng);
DiscriminatorParams init_discriminator(const ModelConfig& config, const AttributeVocab& vocab,
                                       Rng& rng);

// ---------------------------------------------------------------------------
// Gumbel-Softmax

/// g_i = -log(-log(u_i)), u_i uniform with u clamped to [1e-12, 1 - 1e-12].
std::vector<double> gumbel_noise(std::size_t n, Rng& rng);
double gumbel_from_uniform(double u);

/// softmax((logits + g) / tau) for one draw of Gumbel noise g.
std::vector<double> gumbel_softmax(std::span<const double> logits, double tau, Rng& rng);

/// Row-wise relaxed sample of [B, K] logits inside a graph.
Var gumbel_softmax(Graph& g, Var logits, double tau, Rng& rng);

// ---------------------------------------------------------------------------
// Relativistic standard GAN losses

/// -log sigmoid(c_real - c_fake)
double rsgan_d_loss(double c_real, double c_fake);
/// -log sigmoid(c_fake - c_real)
double rsgan_g_loss(double c_real, double c_fake);
/// Batch means of the above over paired [B, 1] critic scores.
Var rsgan_d_loss(Var c_real, Var c_fake);
Var rsgan_g_loss(Var c_real, Var c_fake);

// ---------------------------------------------------------------------------
// Graph-level forward passes over a batch of equal-length sequences.
// Each step tensor has the batch on its first axis.

using AttributeVars = std::array<Var, 3>;

struct GeneratorTrace {
  std::vector<AttributeVars> logits;
  std::vector<AttributeVars> probs;
  std::vector<AttributeVars> relaxed;  ///< empty when no sampling rng was given
  std::vector<Var> interpretable;      ///< M(x) per step, [B, condition]
};

/// `condition[t]` is [B, condition_width], `noise[t]` is [B, noise_dim].
GeneratorTrace generator_graph(Graph& g, const GeneratorParams& params,
                               std::span<const Tensor> condition, std::span<const Tensor> noise,
                               double tau, Rng* sampler);

/// Critic score [B, 1] from the last hidden state.
Var discriminator_graph(Graph& g, const DiscriminatorParams& params,
                        std::span<const Tensor> condition, std::span<const AttributeVars> melody);

/// One-hot [B, K] per step and attribute for reference melodies.
std::vector<AttributeVars> one_hot_melody(Graph& g, const AttributeVocab& vocab,
                                          std::span<const std::vector<AttributeIndices>> batch);

/// Splits [T, W] per-sequence tensors into T step tensors of [B, W].
std::vector<Tensor> to_steps(std::span<const Tensor> sequences);

/// [T, noise_dim] of standard normal draws.
Tensor sample_noise(std::size_t steps, std::size_t noise_dim, Rng& rng);

// ---------------------------------------------------------------------------
// Value-level API for one sequence.

/// Per step categorical distributions, one [T, |vocab|] tensor per attribute.
struct AttributeDistributions {
  std::array<Tensor, 3> probs;

  const Tensor& operator[](Attribute a) const { return probs[static_cast<std::size_t>(a)]; }
  std::size_t steps() const { return probs[0].shape.at(0); }
};

/// Relaxed one-hot samples, one [T, |vocab|] tensor per attribute.
struct RelaxedMelody {
  std::array<Tensor, 3> vectors;
  double tau = 1.0;

  std::size_t steps() const { return vectors[0].shape.at(0); }
};

struct GeneratorOutput {
  AttributeDistributions distributions;
  RelaxedMelody relaxed;
  Tensor interpretable;  ///< [T, condition]
};

/// `noise` is [T, noise_dim]. Throws ContractError on length mismatch.
GeneratorOutput generator_forward(const LyricsEmbedding& x, const Tensor& noise,
                                  const GeneratorParams& params, double tau, Rng& rng);

/// Distributions only, no Gumbel sampling.
AttributeDistributions generator_distributions(const LyricsEmbedding& x, const Tensor& noise,
                                               const GeneratorParams& params);

double discriminator_forward(const LyricsEmbedding& x, const RelaxedMelody& melody,
                             const DiscriminatorParams& params);

/// Exact one-hot encoding of a reference melody.
RelaxedMelody one_hot(const AttributeVocab& vocab, std::span<const AttributeIndices> melody);

}  // namespace lyre
