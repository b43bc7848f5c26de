#include "lyre/optim.hpp"

#include <algorithm>
#include <cmath>

#include "lyre/error.hpp"

namespace lyre {

AdamState make_adam_state(std::span<Parameter* const> params) {
  AdamState s;
  for (const Parameter* p : params) {
    s.first_moment.emplace_back(p->value.shape, 0.0);
    s.second_moment.emplace_back(p->value.shape, 0.0);
  }
  return s;
}

void adam_step(std::span<Parameter* const> params, const Gradients& grads, AdamState& state,
               const AdamConfig& config) {
  if (config.lr <= 0) throw ContractError("learning rate must be positive");
  if (state.first_moment.size() != params.size() || state.second_moment.size() != params.size())
    throw ContractError("optimizer state tracks " + std::to_string(state.first_moment.size()) +
                        " parameters, got " + std::to_string(params.size()));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Shape& shape = params[i]->value.shape;
    if (state.first_moment[i].shape != shape || state.second_moment[i].shape != shape)
      throw ContractError("optimizer state shape mismatch for " + params[i]->name);
    if (auto it = grads.find(params[i]); it != grads.end() && it->second.shape != shape)
      throw ContractError("gradient shape " + shape_string(it->second.shape) + " for " +
                          params[i]->name + " of shape " + shape_string(shape));
  }

  ++state.step_count;
  const double t = static_cast<double>(state.step_count);
  const double c1 = 1.0 - std::pow(config.beta1, t);
  const double c2 = 1.0 - std::pow(config.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto it = grads.find(params[i]);
    auto& w = params[i]->value.values;
    auto& m = state.first_moment[i].values;
    auto& v = state.second_moment[i].values;
    for (std::size_t j = 0; j < w.size(); ++j) {
      const double g = it == grads.end() ? 0.0 : it->second.values[j];
      m[j] = config.beta1 * m[j] + (1.0 - config.beta1) * g;
      v[j] = config.beta2 * v[j] + (1.0 - config.beta2) * g * g;
      w[j] -= config.lr * (m[j] / c1) / (std::sqrt(v[j] / c2) + config.eps);
    }
  }
}

double clip_global_norm(std::span<Parameter* const> params, Gradients& grads, double max_norm) {
  double sq = 0.0;
  for (const Parameter* p : params)
    if (auto it = grads.find(p); it != grads.end())
      for (double g : it->second.values) sq += g * g;
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    const double f = max_norm / norm;
    for (const Parameter* p : params)
      if (auto it = grads.find(p); it != grads.end())
        for (double& g : it->second.values) g *= f;
  }
  return norm;
}

Tensor finite_diff_grad(const std::function<double(const Tensor&)>& f, const Tensor& x,
                        double eps) {
  if (!(eps > 0)) throw ContractError("finite difference step must be positive");
  Tensor grad(x.shape, 0.0);
  Tensor probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = probe.values[i];
    probe.values[i] = orig + eps;
    const double hi = f(probe);
    probe.values[i] = orig - eps;
    const double lo = f(probe);
    probe.values[i] = orig;
    grad.values[i] = (hi - lo) / (2.0 * eps);
  }
  return grad;
}

double max_relative_error(const Tensor& a, const Tensor& b, double floor) {
  if (a.shape != b.shape)
    throw DimensionError("comparing " + shape_string(a.shape) + " with " + shape_string(b.shape));
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double denom = std::max({floor, std::abs(a.values[i]), std::abs(b.values[i])});
    worst = std::max(worst, std::abs(a.values[i] - b.values[i]) / denom);
  }
  return worst;
}

}  // namespace lyre
