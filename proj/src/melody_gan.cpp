#include "lyre/melody_gan.hpp"

#include <algorithm>
#include <cmath>

#include "lyre/error.hpp"

namespace lyre {

namespace {

Parameter uniform_param(std::string name, Shape shape, double bound, Rng& rng) {
  Tensor t(std::move(shape), 0.0);
  for (double& v : t.values) v = rng.uniform(-bound, bound);
  return Parameter{std::move(name), std::move(t)};
}

Parameter zero_param(std::string name, Shape shape) {
  return Parameter{std::move(name), Tensor(std::move(shape), 0.0)};
}

double fan_in_bound(std::size_t fan_in) { return 1.0 / std::sqrt(static_cast<double>(fan_in)); }

Var linear(Graph& g, Var x, const Parameter& w, const Parameter& b) {
  return add(matmul(x, g.param(w)), g.param(b));
}

Tensor row_of(const Tensor& t, std::size_t r) {
  const std::size_t w = t.shape[1];
  return Tensor({1, w}, std::vector<double>(t.values.begin() + static_cast<std::ptrdiff_t>(r * w),
                                            t.values.begin() + static_cast<std::ptrdiff_t>((r + 1) * w)));
}

}  // namespace

void ModelConfig::validate() const {
  if (embed_dim == 0 || hidden == 0 || noise_dim == 0 || layers == 0 || disc_hidden == 0 ||
      q_hidden == 0)
    throw ConfigError("model dimensions must all be positive");
}

LstmLayer init_lstm(const std::string& name, std::size_t input, std::size_t hidden, Rng& rng) {
  LstmLayer layer{uniform_param(name + ".w", {input + hidden, 4 * hidden}, fan_in_bound(input + hidden), rng),
                  zero_param(name + ".b", {1, 4 * hidden})};
  // Forget gate starts open.
  std::fill_n(layer.bias.value.values.begin() + static_cast<std::ptrdiff_t>(hidden), hidden, 1.0);
  return layer;
}

LstmState lstm_zero_state(Graph& g, std::size_t batch, std::size_t hidden) {
  return {g.constant(Tensor({batch, hidden}, 0.0)), g.constant(Tensor({batch, hidden}, 0.0))};
}

LstmState lstm_step(Graph& g, const LstmLayer& layer, Var x, const LstmState& prev) {
  const std::size_t h = layer.hidden();
  Var gates = linear(g, concat({x, prev.h}, 1), layer.weight, layer.bias);
  Var in = sigmoid(slice(gates, 1, 0, h));
  Var forget = sigmoid(slice(gates, 1, h, 2 * h));
  Var cand = tanh(slice(gates, 1, 2 * h, 3 * h));
  Var out = sigmoid(slice(gates, 1, 3 * h, 4 * h));
  Var c = add(multiply(forget, prev.c), multiply(in, cand));
  return {multiply(out, tanh(c)), c};
}

std::vector<Parameter*> GeneratorParams::all() {
  std::vector<Parameter*> out{&in_weight, &in_bias};
  for (auto& l : lstm) {
    out.push_back(&l.weight);
    out.push_back(&l.bias);
  }
  for (std::size_t a = 0; a < 3; ++a) {
    out.push_back(&head_weight[a]);
    out.push_back(&head_bias[a]);
  }
  out.push_back(&interp_weight);
  out.push_back(&interp_bias);
  return out;
}

std::vector<const Parameter*> GeneratorParams::all() const {
  auto v = const_cast<GeneratorParams*>(this)->all();
  return {v.begin(), v.end()};
}

std::vector<Parameter*> DiscriminatorParams::all() {
  return {&lstm.weight, &lstm.bias, &critic_weight, &critic_bias};
}

std::vector<const Parameter*> DiscriminatorParams::all() const {
  auto v = const_cast<DiscriminatorParams*>(this)->all();
  return {v.begin(), v.end()};
}

GeneratorParams init_generator(const ModelConfig& config, const AttributeVocab& vocab, Rng& rng) {
  config.validate();
  vocab.validate();
  const std::size_t in = config.condition_width() + config.noise_dim;
  const std::size_t h = config.hidden;
  GeneratorParams p;
  p.in_weight = uniform_param("gen.in.w", {in, h}, fan_in_bound(in), rng);
  p.in_bias = zero_param("gen.in.b", {1, h});
  for (std::size_t l = 0; l < config.layers; ++l)
    p.lstm.push_back(init_lstm("gen.lstm" + std::to_string(l), h, h, rng));
  for (Attribute a : kAttributes) {
    const auto i = static_cast<std::size_t>(a);
    const std::string name = "gen.head." + std::string(to_string(a));
    p.head_weight[i] = uniform_param(name + ".w", {h, vocab.size(a)}, fan_in_bound(h), rng);
    p.head_bias[i] = zero_param(name + ".b", {1, vocab.size(a)});
  }
  p.interp_weight = uniform_param("gen.interp.w", {h, config.condition_width()}, fan_in_bound(h), rng);
  p.interp_bias = zero_param("gen.interp.b", {1, config.condition_width()});
  return p;
}

DiscriminatorParams init_discriminator(const ModelConfig& config, const AttributeVocab& vocab,
                                       Rng& rng) {
  config.validate();
  vocab.validate();
  const std::size_t in = config.condition_width() + vocab.size(Attribute::pitch) +
                         vocab.size(Attribute::duration) + vocab.size(Attribute::rest);
  DiscriminatorParams p;
  p.lstm = init_lstm("disc.lstm", in, config.disc_hidden, rng);
  p.critic_weight = uniform_param("disc.critic.w", {config.disc_hidden, 1}, fan_in_bound(config.disc_hidden), rng);
  p.critic_bias = zero_param("disc.critic.b", {1, 1});
  return p;
}

double gumbel_from_uniform(double u) {
  u = std::clamp(u, 1e-12, 1.0 - 1e-12);
  return -std::log(-std::log(u));
}

std::vector<double> gumbel_noise(std::size_t n, Rng& rng) {
  if (n == 0) throw ContractError("gumbel_noise needs n >= 1");
  std::vector<double> g(n);
  for (double& v : g) v = gumbel_from_uniform(rng.uniform());
  return g;
}

std::vector<double> gumbel_softmax(std::span<const double> logits, double tau, Rng& rng) {
  if (!(tau > 0)) throw ContractError("Gumbel-Softmax temperature must be positive");
  if (logits.empty()) throw ContractError("Gumbel-Softmax over zero classes");
  const auto g = gumbel_noise(logits.size(), rng);
  std::vector<double> y(logits.size());
  double hi = -INFINITY;
  for (std::size_t i = 0; i < y.size(); ++i) {
    y[i] = (logits[i] + g[i]) / tau;
    hi = std::max(hi, y[i]);
  }
  double total = 0.0;
  for (double& v : y) total += (v = std::exp(v - hi));
  for (double& v : y) v /= total;
  return y;
}

Var gumbel_softmax(Graph& g, Var logits, double tau, Rng& rng) {
  if (!(tau > 0)) throw ContractError("Gumbel-Softmax temperature must be positive");
  const Shape& shape = logits.shape();
  Tensor noise(shape, 0.0);
  for (double& v : noise.values) v = gumbel_from_uniform(rng.uniform());
  return softmax(scale(add(logits, g.constant(std::move(noise))), 1.0 / tau), shape.size() - 1);
}

namespace {

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

}  // namespace

double rsgan_d_loss(double c_real, double c_fake) { return softplus(c_fake - c_real); }
double rsgan_g_loss(double c_real, double c_fake) { return softplus(c_real - c_fake); }

Var rsgan_d_loss(Var c_real, Var c_fake) { return mean(softplus(sub(c_fake, c_real))); }
Var rsgan_g_loss(Var c_real, Var c_fake) { return mean(softplus(sub(c_real, c_fake))); }

GeneratorTrace generator_graph(Graph& g, const GeneratorParams& params,
                               std::span<const Tensor> condition, std::span<const Tensor> noise,
                               double tau, Rng* sampler) {
  if (condition.size() != noise.size())
    throw ContractError("noise has " + std::to_string(noise.size()) + " steps for " +
                        std::to_string(condition.size()) + " syllables");
  if (condition.empty()) throw ContractError("generator needs at least one step");
  if (sampler && !(tau > 0)) throw ContractError("Gumbel-Softmax temperature must be positive");
  const std::size_t batch = condition[0].shape.at(0);

  std::vector<LstmState> state;
  for (const auto& layer : params.lstm) state.push_back(lstm_zero_state(g, batch, layer.hidden()));

  GeneratorTrace trace;
  for (std::size_t t = 0; t < condition.size(); ++t) {
    if (condition[t].shape.at(0) != batch || noise[t].shape.at(0) != batch)
      throw ContractError("batch size changes between steps");
    Var in = concat({g.constant(condition[t]), g.constant(noise[t])}, 1);
    Var hidden = tanh(linear(g, in, params.in_weight, params.in_bias));
    for (std::size_t l = 0; l < params.lstm.size(); ++l) {
      state[l] = lstm_step(g, params.lstm[l], hidden, state[l]);
      hidden = state[l].h;
    }
    AttributeVars logits, probs, relaxed;
    for (std::size_t a = 0; a < 3; ++a) {
      logits[a] = linear(g, hidden, params.head_weight[a], params.head_bias[a]);
      probs[a] = softmax(logits[a], 1);
      if (sampler) relaxed[a] = gumbel_softmax(g, logits[a], tau, *sampler);
    }
    trace.logits.push_back(logits);
    trace.probs.push_back(probs);
    if (sampler) trace.relaxed.push_back(relaxed);
    trace.interpretable.push_back(linear(g, hidden, params.interp_weight, params.interp_bias));
  }
  return trace;
}

Var discriminator_graph(Graph& g, const DiscriminatorParams& params,
                        std::span<const Tensor> condition, std::span<const AttributeVars> melody) {
  if (condition.size() != melody.size())
    throw ContractError("melody has " + std::to_string(melody.size()) + " steps for " +
                        std::to_string(condition.size()) + " syllables");
  if (condition.empty()) throw ContractError("discriminator needs at least one step");
  const std::size_t batch = condition[0].shape.at(0);
  LstmState state = lstm_zero_state(g, batch, params.lstm.hidden());
  for (std::size_t t = 0; t < condition.size(); ++t) {
    Var in = concat({g.constant(condition[t]), melody[t][0], melody[t][1], melody[t][2]}, 1);
    state = lstm_step(g, params.lstm, in, state);
  }
  return linear(g, state.h, params.critic_weight, params.critic_bias);
}

std::vector<AttributeVars> one_hot_melody(Graph& g, const AttributeVocab& vocab,
                                          std::span<const std::vector<AttributeIndices>> batch) {
  if (batch.empty()) throw ContractError("empty melody batch");
  const std::size_t steps = batch[0].size();
  std::vector<AttributeVars> out(steps);
  for (std::size_t t = 0; t < steps; ++t)
    for (Attribute a : kAttributes) {
      const auto ai = static_cast<std::size_t>(a);
      Tensor hot({batch.size(), vocab.size(a)}, 0.0);
      for (std::size_t b = 0; b < batch.size(); ++b) {
        if (batch[b].size() != steps) throw ContractError("melodies in a batch differ in length");
        const std::size_t idx = batch[b][t][a];
        if (idx >= vocab.size(a)) throw ContractError("attribute index out of range");
        hot.at(b, idx) = 1.0;
      }
      out[t][ai] = g.constant(std::move(hot));
    }
  return out;
}

std::vector<Tensor> to_steps(std::span<const Tensor> sequences) {
  if (sequences.empty()) throw ContractError("empty batch");
  const std::size_t steps = sequences[0].shape.at(0);
  const std::size_t width = sequences[0].shape.at(1);
  std::vector<Tensor> out;
  for (std::size_t t = 0; t < steps; ++t) {
    Tensor step({sequences.size(), width}, 0.0);
    for (std::size_t b = 0; b < sequences.size(); ++b) {
      if (sequences[b].shape != sequences[0].shape)
        throw ContractError("sequences in a batch differ in shape");
      std::copy_n(&sequences[b].values[t * width], width, &step.values[b * width]);
    }
    out.push_back(std::move(step));
  }
  return out;
}

Tensor sample_noise(std::size_t steps, std::size_t noise_dim, Rng& rng) {
  Tensor z({steps, noise_dim}, 0.0);
  for (double& v : z.values) v = rng.normal();
  return z;
}

namespace {

void check_noise(const LyricsEmbedding& x, const Tensor& noise) {
  if (noise.rank() != 2 || noise.shape[0] != x.steps())
    throw ContractError("noise shape " + shape_string(noise.shape) + " does not cover " +
                        std::to_string(x.steps()) + " syllables");
}

Tensor stack_rows(const std::vector<AttributeVars>& steps, std::size_t a) {
  const Tensor& first = steps[0][a].value();
  const std::size_t k = first.shape[1];
  Tensor out({steps.size(), k}, 0.0);
  for (std::size_t t = 0; t < steps.size(); ++t)
    std::copy_n(steps[t][a].value().values.begin(), k, &out.values[t * k]);
  return out;
}

}  // namespace

GeneratorOutput generator_forward(const LyricsEmbedding& x, const Tensor& noise,
                                  const GeneratorParams& params, double tau, Rng& rng) {
  check_noise(x, noise);
  const Tensor cond[] = {x.vectors};
  const Tensor z[] = {noise};
  Graph g;
  const GeneratorTrace trace = generator_graph(g, params, to_steps(cond), to_steps(z), tau, &rng);
  GeneratorOutput out;
  out.relaxed.tau = tau;
  for (std::size_t a = 0; a < 3; ++a) {
    out.distributions.probs[a] = stack_rows(trace.probs, a);
    out.relaxed.vectors[a] = stack_rows(trace.relaxed, a);
  }
  const std::size_t width = trace.interpretable[0].value().shape[1];
  out.interpretable = Tensor({x.steps(), width}, 0.0);
  for (std::size_t t = 0; t < x.steps(); ++t)
    std::copy_n(trace.interpretable[t].value().values.begin(), width, &out.interpretable.values[t * width]);
  return out;
}

AttributeDistributions generator_distributions(const LyricsEmbedding& x, const Tensor& noise,
                                               const GeneratorParams& params) {
  check_noise(x, noise);
  const Tensor cond[] = {x.vectors};
  const Tensor z[] = {noise};
  Graph g;
  const GeneratorTrace trace = generator_graph(g, params, to_steps(cond), to_steps(z), 1.0, nullptr);
  AttributeDistributions out;
  for (std::size_t a = 0; a < 3; ++a) out.probs[a] = stack_rows(trace.probs, a);
  return out;
}

double discriminator_forward(const LyricsEmbedding& x, const RelaxedMelody& melody,
                             const DiscriminatorParams& params) {
  if (melody.steps() != x.steps())
    throw ContractError("melody has " + std::to_string(melody.steps()) + " steps for " +
                        std::to_string(x.steps()) + " syllables");
  Graph g;
  std::vector<AttributeVars> steps(x.steps());
  for (std::size_t t = 0; t < x.steps(); ++t)
    for (std::size_t a = 0; a < 3; ++a) steps[t][a] = g.constant(row_of(melody.vectors[a], t));
  const Tensor cond[] = {x.vectors};
  return discriminator_graph(g, params, to_steps(cond), steps).value().item();
}

RelaxedMelody one_hot(const AttributeVocab& vocab, std::span<const AttributeIndices> melody) {
  if (melody.empty()) throw ContractError("empty melody");
  RelaxedMelody out;
  for (Attribute a : kAttributes) {
    const auto ai = static_cast<std::size_t>(a);
    out.vectors[ai] = Tensor({melody.size(), vocab.size(a)}, 0.0);
    for (std::size_t t = 0; t < melody.size(); ++t) {
      if (melody[t][a] >= vocab.size(a)) throw ContractError("attribute index out of range");
      out.vectors[ai].at(t, melody[t][a]) = 1.0;
    }
  }
  return out;
}

}  // namespace lyre
