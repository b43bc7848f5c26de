#include "lyre/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <utility>

#include "lyre/error.hpp"

namespace lyre {

void TrainConfig::validate() const {
  if (batch_size == 0) throw ConfigError("batch_size must be at least 1");
  if (!(lr_g > 0) || !(lr_d > 0) || !(lr_q > 0) || !(lr_pretrain > 0)) throw ConfigError("learning rates must be positive");
  if (!(tau_end > 0) || !(tau_start >= tau_end))
    throw ConfigError("temperatures need tau_start >= tau_end > 0");
  if (!(lambda_mi >= 0)) throw ConfigError("lambda_mi must be non-negative");
  if (d_steps_per_g_step == 0) throw ConfigError("d_steps_per_g_step must be at least 1");
  if (checkpoint_interval == 0) throw ConfigError("checkpoint_interval must be at least 1");
  if (!(clip_norm > 0)) throw ConfigError("clip_norm must be positive");
}

double TrainConfig::tau_at(std::size_t step) const {
  if (steps <= 1) return tau_start;
  const double frac = std::min(1.0, static_cast<double>(step) / static_cast<double>(steps - 1));
  return tau_start * std::pow(tau_end / tau_start, frac);
}

std::vector<Parameter*> adversarial_params(Checkpoint& c) {
  std::vector<Parameter*> out;
  for (Parameter* p : c.generator.all())
    if (p != &c.generator.interp_weight && p != &c.generator.interp_bias) out.push_back(p);
  return out;
}

std::vector<Parameter*> mi_params(Checkpoint& c) {
  std::vector<Parameter*> out{&c.generator.interp_weight, &c.generator.interp_bias};
  for (Parameter* p : c.posterior.all()) out.push_back(p);
  return out;
}

Checkpoint initial_checkpoint(const AttributeVocab& vocab, EmbeddingTable syllables,
                              EmbeddingTable words, const ModelConfig& model, const TrainConfig& train) {
  model.validate();
  train.validate();
  if (syllables.dim != model.embed_dim || words.dim != model.embed_dim)
    throw ConfigError("embedding dim " + std::to_string(syllables.dim) + "/" + std::to_string(words.dim) +
                      " does not match model embed_dim " + std::to_string(model.embed_dim));
  Checkpoint c;
  c.model = model;
  c.train = train;
  c.attributes = vocab;
  c.syllables = std::move(syllables);
  c.words = std::move(words);
  Rng rng(train.seed);
  c.generator = init_generator(model, vocab, rng);
  c.discriminator = init_discriminator(model, vocab, rng);
  c.posterior = init_posterior(model, rng);
  c.adam_g = make_adam_state(adversarial_params(c));
  c.adam_d = make_adam_state(c.discriminator.all());
  c.adam_q = make_adam_state(mi_params(c));
  return c;
}

namespace {

/// Batches are drawn from one syllable-count group at a time so every
/// sequence in a batch unrolls to the same length.
class BatchSampler {
 public:
  BatchSampler(const Corpus& corpus, const Checkpoint& ckpt) : corpus_(corpus) {
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      encoded_.push_back(ckpt.encode(corpus.entries[i].lyrics).vectors);
      groups_[corpus.entries[i].lyrics.size()].push_back(i);
    }
  }

  struct Batch {
    std::vector<Tensor> condition;  ///< per step [B, W]
    std::vector<std::vector<AttributeIndices>> melodies;
    std::size_t steps = 0;
  };

  Batch draw(std::size_t batch_size, Rng& rng) const {
    const std::size_t anchor = rng.below(corpus_.size());
    const auto& group = groups_.at(corpus_.entries[anchor].lyrics.size());
    std::vector<Tensor> seqs;
    Batch b;
    for (std::size_t i = 0; i < batch_size; ++i) {
      const std::size_t idx = i == 0 ? anchor : group[rng.below(group.size())];
      seqs.push_back(encoded_[idx]);
      b.melodies.push_back(corpus_.entries[idx].melody);
    }
    b.condition = to_steps(seqs);
    b.steps = b.condition.size();
    return b;
  }

 private:
  const Corpus& corpus_;
  std::vector<Tensor> encoded_;
  std::map<std::size_t, std::vector<std::size_t>> groups_;
};

std::vector<Tensor> noise_steps(std::size_t batch, std::size_t steps, std::size_t dim, Rng& rng) {
  std::vector<Tensor> seqs;
  for (std::size_t b = 0; b < batch; ++b) seqs.push_back(sample_noise(steps, dim, rng));
  return to_steps(seqs);
}

void require_finite(double value, std::size_t step, const char* component) {
  if (!std::isfinite(value))
    throw NonFiniteError("step " + std::to_string(step) + ": " + component + " is not finite");
}

void require_finite_params(const std::vector<const Parameter*>& params, std::size_t step) {
  for (const Parameter* p : params)
    if (!p->value.all_finite())
      throw NonFiniteError("step " + std::to_string(step) + ": parameter " + p->name + " is not finite");
}

void check_corpus(const Corpus& corpus, const Checkpoint& ckpt) {
  if (corpus.entries.empty()) throw CorpusError(0, "empty corpus");
  if (!(corpus.vocab == ckpt.attributes))
    throw ConfigError("corpus attribute vocabulary differs from the checkpoint");
}

AdamConfig adam(double lr) {
  AdamConfig c;
  c.lr = lr;
  return c;
}

}  // namespace

std::vector<double> pretrain_generator(const Corpus& corpus, Checkpoint& ckpt, std::size_t steps) {
  check_corpus(corpus, ckpt);
  const TrainConfig& cfg = ckpt.train;
  cfg.validate();
  BatchSampler sampler(corpus, ckpt);
  Rng rng(cfg.seed ^ 0x5052455452414e31ULL);
  const bool with_mi = cfg.lambda_mi > 0;
  std::vector<Parameter*> gen = adversarial_params(ckpt);
  std::vector<Parameter*> mi = mi_params(ckpt);
  AdamState gen_state = make_adam_state(gen);
  AdamState mi_state = make_adam_state(mi);
  std::vector<double> losses;
  for (std::size_t s = 0; s < steps; ++s) {
    const auto batch = sampler.draw(cfg.batch_size, rng);
    const auto noise = noise_steps(cfg.batch_size, batch.steps, ckpt.model.noise_dim, rng);
    Graph g;
    const GeneratorTrace trace = generator_graph(g, ckpt.generator, batch.condition, noise, 1.0, nullptr);
    const auto targets = one_hot_melody(g, ckpt.attributes, batch.melodies);
    std::vector<Var> terms;
    for (std::size_t t = 0; t < batch.steps; ++t)
      for (std::size_t a = 0; a < 3; ++a) terms.push_back(sum(multiply(targets[t][a], log(trace.probs[t][a]))));
    const double n = static_cast<double>(cfg.batch_size * batch.steps);
    Var ce = scale(sum(concat(terms, 0)), -1.0 / n);
    const double value = ce.value().item();
    require_finite(value, s, "pretrain cross-entropy");
    losses.push_back(value);
    Var loss = ce;
    if (with_mi) {
      Var mi_term = mi_objective(g, ckpt.posterior, trace.interpretable, batch.condition, cfg.lambda_mi);
      require_finite(mi_term.value().item(), s, "pretrain loss_mi");
      loss = add(ce, mi_term);
    }
    Gradients grads = g.backward(loss);
    clip_global_norm(gen, grads, cfg.clip_norm);
    adam_step(gen, grads, gen_state, adam(cfg.lr_pretrain));
    if (with_mi) {
      clip_global_norm(mi, grads, cfg.clip_norm);
      adam_step(mi, grads, mi_state, adam(cfg.lr_q));
    }
  }
  return losses;
}

Checkpoint train(const Corpus& corpus, Checkpoint ckpt, const TrainHooks& hooks) {
  check_corpus(corpus, ckpt);
  const TrainConfig cfg = ckpt.train;
  cfg.validate();
  if (ckpt.step == 0 && cfg.pretrain_steps > 0 && cfg.steps > 0)
    pretrain_generator(corpus, ckpt, cfg.pretrain_steps);

  BatchSampler sampler(corpus, ckpt);
  Rng rng(cfg.seed * 0x9E3779B97F4A7C15ULL ^ ckpt.step);
  std::vector<Parameter*> gen = adversarial_params(ckpt);
  std::vector<Parameter*> disc = ckpt.discriminator.all();
  std::vector<Parameter*> q = mi_params(ckpt);
  const std::size_t B = cfg.batch_size;

  MetricsRow acc;
  std::size_t acc_count = 0;
  for (std::size_t step = ckpt.step; step < cfg.steps; ++step) {
    const double tau = cfg.tau_at(step);
    double loss_d = 0.0;
    for (std::size_t k = 0; k < cfg.d_steps_per_g_step; ++k) {
      const auto batch = sampler.draw(B, rng);
      const auto noise = noise_steps(B, batch.steps, ckpt.model.noise_dim, rng);
      // Fake samples enter the critic as constants so only D receives gradients.
      std::vector<std::array<Tensor, 3>> fake(batch.steps);
      {
        Graph gg;
        const auto trace = generator_graph(gg, ckpt.generator, batch.condition, noise, tau, &rng);
        for (std::size_t t = 0; t < batch.steps; ++t)
          for (std::size_t a = 0; a < 3; ++a) fake[t][a] = trace.relaxed[t][a].value();
      }
      Graph g;
      std::vector<AttributeVars> fake_vars(batch.steps);
      for (std::size_t t = 0; t < batch.steps; ++t)
        for (std::size_t a = 0; a < 3; ++a) fake_vars[t][a] = g.constant(fake[t][a]);
      Var c_real = discriminator_graph(g, ckpt.discriminator, batch.condition,
                                       one_hot_melody(g, ckpt.attributes, batch.melodies));
      Var c_fake = discriminator_graph(g, ckpt.discriminator, batch.condition, fake_vars);
      Var loss = rsgan_d_loss(c_real, c_fake);
      loss_d = loss.value().item();
      require_finite(loss_d, step, "loss_d");
      Gradients grads = g.backward(loss);
      clip_global_norm(disc, grads, cfg.clip_norm);
      adam_step(disc, grads, ckpt.adam_d, adam(cfg.lr_d));
    }

    const auto batch = sampler.draw(B, rng);
    const auto noise = noise_steps(B, batch.steps, ckpt.model.noise_dim, rng);
    Graph g;
    const auto trace = generator_graph(g, ckpt.generator, batch.condition, noise, tau, &rng);
    Var c_real = discriminator_graph(g, ckpt.discriminator, batch.condition,
                                     one_hot_melody(g, ckpt.attributes, batch.melodies));
    Var c_fake = discriminator_graph(g, ckpt.discriminator, batch.condition, trace.relaxed);
    Var loss_g = rsgan_g_loss(c_real, c_fake);
    Var total = loss_g;
    double loss_mi = 0.0;
    if (cfg.lambda_mi > 0) {
      Var mi = mi_objective(g, ckpt.posterior, trace.interpretable, batch.condition, cfg.lambda_mi);
      loss_mi = mi.value().item();
      total = add(loss_g, mi);
    }
    require_finite(loss_g.value().item(), step, "loss_g");
    require_finite(loss_mi, step, "loss_mi");
    Gradients grads = g.backward(total);
    clip_global_norm(gen, grads, cfg.clip_norm);
    adam_step(gen, grads, ckpt.adam_g, adam(cfg.lr_g));
    if (cfg.lambda_mi > 0) {
      clip_global_norm(q, grads, cfg.clip_norm);
      adam_step(q, grads, ckpt.adam_q, adam(cfg.lr_q));
    }
    ckpt.step = step + 1;

    acc.loss_d += loss_d;
    acc.loss_g += loss_g.value().item();
    acc.loss_mi += loss_mi;
    ++acc_count;
    if (ckpt.step % cfg.checkpoint_interval == 0 || ckpt.step == cfg.steps) {
      require_finite_params(std::as_const(ckpt.generator).all(), ckpt.step);
      require_finite_params(std::as_const(ckpt.discriminator).all(), ckpt.step);
      require_finite_params(std::as_const(ckpt.posterior).all(), ckpt.step);
      const double n = static_cast<double>(acc_count);
      const MetricsRow row{ckpt.step, acc.loss_d / n, acc.loss_g / n, acc.loss_mi / n, tau};
      if (hooks.on_metrics) hooks.on_metrics(row);
      if (hooks.on_checkpoint) hooks.on_checkpoint(ckpt);
      acc = MetricsRow{};
      acc_count = 0;
    }
  }
  return ckpt;
}

Checkpoint train(const Corpus& corpus, const ModelConfig& model, const TrainConfig& config,
                 const SkipGramConfig& skipgram, const TrainHooks& hooks) {
  SkipGramConfig sg = skipgram;
  sg.dim = model.embed_dim;
  const auto lyrics = corpus.lyrics();
  EmbeddingTable syl = train_skipgram(lyrics, EmbeddingLevel::syllable, sg);
  EmbeddingTable word = train_skipgram(lyrics, EmbeddingLevel::word, sg);
  return train(corpus, initial_checkpoint(corpus.vocab, std::move(syl), std::move(word), model, config), hooks);
}

double total_variation(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw ContractError("distributions differ in support size");
  double d = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) d += std::abs(p[i] - q[i]);
  return 0.5 * d;
}

std::array<std::vector<double>, 3> corpus_marginals(const Corpus& corpus) {
  std::array<std::vector<double>, 3> out;
  for (Attribute a : kAttributes) out[static_cast<std::size_t>(a)].assign(corpus.vocab.size(a), 0.0);
  double notes = 0.0;
  for (const auto& e : corpus.entries)
    for (const auto& idx : e.melody) {
      for (Attribute a : kAttributes) out[static_cast<std::size_t>(a)][idx[a]] += 1.0;
      notes += 1.0;
    }
  for (auto& dist : out)
    for (double& v : dist) v /= notes;
  return out;
}

namespace {

std::size_t draw_categorical(const Tensor& probs, std::size_t row, Rng& rng) {
  const std::size_t k = probs.shape[1];
  double u = rng.uniform();
  for (std::size_t i = 0; i < k; ++i) {
    u -= probs.at(row, i);
    if (u < 0) return i;
  }
  return k - 1;
}

}  // namespace

EvalMetrics evaluate(const Checkpoint& ckpt, const Corpus& corpus, std::uint64_t seed,
                     std::size_t samples_per_entry) {
  check_corpus(corpus, ckpt);
  if (samples_per_entry == 0) samples_per_entry = (1000 + corpus.size() - 1) / corpus.size();
  Rng rng(seed);
  std::array<std::vector<double>, 3> generated;
  for (Attribute a : kAttributes) generated[static_cast<std::size_t>(a)].assign(ckpt.attributes.size(a), 0.0);
  EvalMetrics m;
  double notes = 0.0, sq = 0.0, coords = 0.0;
  for (const auto& entry : corpus.entries) {
    const LyricsEmbedding x = ckpt.encode(entry.lyrics);
    const double real = discriminator_forward(x, one_hot(ckpt.attributes, entry.melody), ckpt.discriminator);
    for (std::size_t s = 0; s < samples_per_entry; ++s) {
      const Tensor z = sample_noise(x.steps(), ckpt.model.noise_dim, rng);
      const GeneratorOutput out = generator_forward(x, z, ckpt.generator, ckpt.train.tau_end, rng);
      for (std::size_t t = 0; t < x.steps(); ++t)
        for (std::size_t a = 0; a < 3; ++a)
          generated[a][draw_categorical(out.distributions.probs[a], t, rng)] += 1.0;
      notes += static_cast<double>(x.steps());
      m.mean_d_real += real;
      m.mean_d_fake += discriminator_forward(x, out.relaxed, ckpt.discriminator);
      const Tensor recon = q_forward(out.interpretable, ckpt.posterior);
      for (std::size_t i = 0; i < recon.size(); ++i) {
        const double d = recon.values[i] - x.vectors.values[i];
        sq += d * d;
      }
      coords += static_cast<double>(recon.size());
      ++m.samples;
    }
  }
  const auto data = corpus_marginals(corpus);
  for (std::size_t a = 0; a < 3; ++a) {
    for (double& v : generated[a]) v /= notes;
    m.tv_distance[a] = total_variation(generated[a], data[a]);
  }
  m.mean_d_real /= static_cast<double>(m.samples);
  m.mean_d_fake /= static_cast<double>(m.samples);
  m.mi_mse = sq / coords;
  return m;
}

}  // namespace lyre
