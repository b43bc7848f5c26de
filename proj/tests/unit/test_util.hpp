#pragma once

#include <functional>

#include "lyre/autodiff.hpp"
#include "lyre/corpus.hpp"
#include "lyre/embedding.hpp"
#include "lyre/melody_gan.hpp"
#include "lyre/optim.hpp"
#include "lyre/rng.hpp"
#include "lyre/trainer.hpp"

namespace lyre::testing {

inline Tensor random_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape), 0.0);
  for (double& v : t.values) v = rng.uniform(lo, hi);
  return t;
}

/// Small enough for finite differences over every weight.
inline ModelConfig tiny_config() {
  ModelConfig c;
  c.embed_dim = 2;
  c.hidden = 5;
  c.noise_dim = 3;
  c.layers = 2;
  c.disc_hidden = 4;
  c.q_hidden = 3;
  return c;
}

inline AttributeVocab tiny_vocab() {
  AttributeVocab v;
  v.pitches = {60, 62, 64};
  v.durations = {0.5, 1.0};
  v.rests = {0.0, 1.0};
  return v;
}

inline LyricsEmbedding random_embedding(std::size_t steps, std::size_t width, Rng& rng) {
  return LyricsEmbedding{random_tensor({steps, width}, rng)};
}

/// Worst relative error between backward() and central differences over
/// every entry of every listed parameter.
inline double worst_param_gradient_error(const std::vector<Parameter*>& params,
                                         const Gradients& grads,
                                         const std::function<double()>& loss) {
  double worst = 0.0;
  for (Parameter* p : params) {
    const Tensor saved = p->value;
    const Tensor numeric = finite_diff_grad(
        [&](const Tensor& probe) {
          p->value = probe;
          return loss();
        },
        saved, 1e-5);
    p->value = saved;
    worst = std::max(worst, max_relative_error(grads.at(p), numeric));
  }
  return worst;
}

/// Untrained checkpoint with short skip-gram tables over the corpus lyrics.
inline Checkpoint tiny_checkpoint(const Corpus& corpus, const TrainConfig& train = {},
                                  const ModelConfig& model = tiny_config()) {
  SkipGramConfig sg;
  sg.dim = model.embed_dim;
  sg.epochs = 2;
  sg.negatives = 1;
  const auto lyrics = corpus.lyrics();
  return initial_checkpoint(corpus.vocab, train_skipgram(lyrics, EmbeddingLevel::syllable, sg),
                            train_skipgram(lyrics, EmbeddingLevel::word, sg), model, train);
}

}  // namespace lyre::testing
