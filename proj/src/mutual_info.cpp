#include "lyre/mutual_info.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "lyre/error.hpp"

namespace lyre {

std::vector<Parameter*> PosteriorParams::all() { return {&hidden_weight, &hidden_bias, &out_weight}; }

std::vector<const Parameter*> PosteriorParams::all() const {
  return {&hidden_weight, &hidden_bias, &out_weight};
}

PosteriorParams init_posterior(const ModelConfig& config, Rng& rng) {
  config.validate();
  const std::size_t w = config.condition_width();
  const std::size_t h = config.q_hidden;
  auto uniform = [&](Shape shape, std::size_t fan_in) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    Tensor t(std::move(shape), 0.0);
    for (double& v : t.values) v = rng.uniform(-bound, bound);
    return t;
  };
  return PosteriorParams{{"q.hidden.w", uniform({w, h}, w)},
                         {"q.hidden.b", Tensor({1, h}, 0.0)},
                         {"q.out.w", uniform({h, w}, h)}};
}

Var q_graph(Graph& g, const PosteriorParams& q, Var m) {
  const std::size_t width = q.hidden_weight.value.shape[0];
  if (m.shape().size() != 2 || m.shape()[1] != width)
    throw ContractError("posterior expects width " + std::to_string(width) + ", got " +
                        shape_string(m.shape()));
  Var h = tanh(add(matmul(m, g.param(q.hidden_weight)), g.param(q.hidden_bias)));
  return matmul(h, g.param(q.out_weight));
}

Var mi_lower_bound(Var x, Var x_hat) {
  if (x.shape() != x_hat.shape())
    throw ContractError("reconstruction shape " + shape_string(x_hat.shape()) + " vs target " +
                        shape_string(x.shape()));
  const double rows = static_cast<double>(x.shape()[0]);
  return scale(sum(square(sub(x, x_hat))), -0.5 / rows);
}

Var mi_objective(Graph& g, const PosteriorParams& q, std::span<const Var> interpretable,
                 std::span<const Tensor> condition, double lambda) {
  if (lambda < 0) throw ContractError("lambda_mi must be non-negative");
  if (interpretable.size() != condition.size())
    throw ContractError("interpretable vectors and condition differ in length");
  if (interpretable.empty()) throw ContractError("MI objective over zero steps");
  // Stack steps along the batch axis so the bound averages over every row.
  std::vector<Var> targets;
  for (const Tensor& c : condition) targets.push_back(g.constant(c));
  Var x = concat(targets, 0);
  Var m = concat(std::vector<Var>(interpretable.begin(), interpretable.end()), 0);
  return scale(mi_lower_bound(x, q_graph(g, q, m)), -lambda);
}

Tensor q_forward(const Tensor& m_seq, const PosteriorParams& q) {
  Graph g;
  return q_graph(g, q, g.constant(m_seq)).value();
}

double mi_lower_bound(const Tensor& x, const Tensor& x_hat) {
  if (x.shape != x_hat.shape || x.rank() != 2)
    throw ContractError("reconstruction shape " + shape_string(x_hat.shape) + " vs target " +
                        shape_string(x.shape));
  double total = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x.values[i] - x_hat.values[i];
    total += d * d;
  }
  return -0.5 * total / static_cast<double>(x.shape[0]);
}

MiObjective mi_training_objective(const LyricsEmbedding& x, const Tensor& noise,
                                  const GeneratorParams& gen, const PosteriorParams& q, double tau,
                                  double lambda, Rng& rng) {
  const Tensor cond[] = {x.vectors};
  const Tensor z[] = {noise};
  if (noise.rank() != 2 || noise.shape[0] != x.steps())
    throw ContractError("noise does not cover every syllable");
  const auto cond_steps = to_steps(cond);
  Graph g;
  const GeneratorTrace trace = generator_graph(g, gen, cond_steps, to_steps(z), tau, &rng);
  for (const Parameter* p : q.all()) g.param(*p);
  Var loss = mi_objective(g, q, trace.interpretable, cond_steps, lambda);
  MiObjective out;
  out.value = loss.value().item();
  out.grads = g.backward(loss);
  Var m = concat(trace.interpretable, 0);
  const Tensor recon = q_forward(m.value(), q);
  double sq = 0.0;
  for (std::size_t i = 0; i < recon.size(); ++i) {
    const double d = recon.values[i] - x.vectors.values[i];
    sq += d * d;
  }
  out.reconstruction_mse = sq / static_cast<double>(recon.size());
  return out;
}

SimilarityMatrix cosine_matrix(std::vector<std::string> labels,
                               const std::vector<std::vector<double>>& vectors) {
  if (labels.size() != vectors.size()) throw ContractError("one vector per label required");
  const std::size_t n = labels.size();
  SimilarityMatrix m{std::move(labels), Tensor({std::max<std::size_t>(n, 1), std::max<std::size_t>(n, 1)}, 0.0)};
  if (n == 0) {
    m.values = Tensor();
    return m;
  }
  for (std::size_t i = 0; i < n; ++i) {
    m.values.at(i, i) = 1.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      const double c = vectors[i] == vectors[j] ? 1.0 : cosine_similarity(vectors[i], vectors[j]);
      m.values.at(i, j) = c;
      m.values.at(j, i) = c;
    }
  }
  return m;
}

std::string similarity_csv(const SimilarityMatrix& m) {
  std::string out = "syllable";
  for (const auto& l : m.labels) out += "," + l;
  out += "\n";
  char buf[32];
  for (std::size_t i = 0; i < m.labels.size(); ++i) {
    out += m.labels[i];
    for (std::size_t j = 0; j < m.labels.size(); ++j) {
      std::snprintf(buf, sizeof buf, ",%.6f", m.values.at(i, j));
      out += buf;
    }
    out += "\n";
  }
  return out;
}

std::vector<std::uint8_t> similarity_ppm(const SimilarityMatrix& m, std::size_t cell) {
  const std::size_t n = m.labels.size();
  const std::size_t side = std::max<std::size_t>(n * cell, 1);
  const std::string header = "P6\n" + std::to_string(side) + " " + std::to_string(side) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.reserve(out.size() + side * side * 3);
  for (std::size_t y = 0; y < side; ++y)
    for (std::size_t x = 0; x < side; ++x) {
      std::uint8_t level = 255;
      if (n > 0) {
        const double v = std::clamp(m.values.at(y / cell, x / cell), -1.0, 1.0);
        level = static_cast<std::uint8_t>(std::lround((1.0 - v) * 127.5));
      }
      out.insert(out.end(), {level, level, level});
    }
  return out;
}

}  // namespace lyre
