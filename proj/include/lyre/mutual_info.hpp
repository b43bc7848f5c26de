#pragma once

// Mutual-information consistency between the lyric condition x and the
// generator's interpretable vectors M(x).
//
// A posterior network Q predicts x from M(x). With Q read as a unit-variance
// Gaussian centred on its prediction, E[log Q(x | M(x))] equals the negative
// half squared error up to a constant, and that is the variational lower bound
// on I(x; M(x)) (the entropy H(x) is fixed by the embedding tables).

#include <span>
#include <string>
#include <vector>

#include "lyre/autodiff.hpp"
#include "lyre/embedding.hpp"
#include "lyre/melody_gan.hpp"

namespace lyre {

/// Two-layer network, width -> q_hidden (tanh) -> width. The output layer has
/// no bias.
struct PosteriorParams {
  Parameter hidden_weight;
  Parameter hidden_bias;
  Parameter out_weight;

  std::vector<Parameter*> all();
  std::vector<const Parameter*> all() const;
  bool operator==(const PosteriorParams&) const = default;
};

PosteriorParams init_posterior(const ModelConfig& config, Rng& rng);

/// x_hat for a [N, width] batch of M-vectors.
Var q_graph(Graph& g, const PosteriorParams& q, Var m);

/// -(1/N) sum_n 0.5 |x_n - x_hat_n|^2 over [N, width] rows.
Var mi_lower_bound(Var x, Var x_hat);

/// -lambda * bound, summed over every step of a batch. Zero (with zero
/// gradients) when lambda is 0.
Var mi_objective(Graph& g, const PosteriorParams& q, std::span<const Var> interpretable,
                 std::span<const Tensor> condition, double lambda);

/// Value-level forms for one sequence.
Tensor q_forward(const Tensor& m_seq, const PosteriorParams& q);
double mi_lower_bound(const Tensor& x, const Tensor& x_hat);

struct MiObjective {
  double value = 0.0;
  double reconstruction_mse = 0.0;  ///< mean squared error per coordinate
  Gradients grads;                   ///< keyed by the generator and posterior parameters
};

/// Runs the generator on (x, noise), reconstructs x through Q, and returns
/// -lambda * bound with gradients reaching both the generator and Q.
MiObjective mi_training_objective(const LyricsEmbedding& x, const Tensor& noise,
                                  const GeneratorParams& gen, const PosteriorParams& q, double tau,
                                  double lambda, Rng& rng);

/// Labelled n x n cosine similarities.
struct SimilarityMatrix {
  std::vector<std::string> labels;
  Tensor values;
};

SimilarityMatrix cosine_matrix(std::vector<std::string> labels,
                               const std::vector<std::vector<double>>& vectors);

/// Header row and column of labels, values at 6 decimals.
std::string similarity_csv(const SimilarityMatrix& m);

/// Grayscale binary portable pixmap (P6, equal RGB channels). Each cell is
/// `cell` pixels square; similarity 1 is black, -1 white.
std::vector<std::uint8_t> similarity_ppm(const SimilarityMatrix& m, std::size_t cell = 16);

}  // namespace lyre
