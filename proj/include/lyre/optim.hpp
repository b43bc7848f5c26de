#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "lyre/autodiff.hpp"

namespace lyre {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Moments are stored in the same order as the parameter list they were
/// created for.
struct AdamState {
  std::uint64_t step_count = 0;
  std::vector<Tensor> first_moment;
  std::vector<Tensor> second_moment;

  bool operator==(const AdamState&) const = default;
};

AdamState make_adam_state(std::span<Parameter* const> params);

/// One bias-corrected Adam update. Parameters missing from `grads` are
/// treated as having zero gradient.
void adam_step(std::span<Parameter* const> params, const Gradients& grads, AdamState& state,
               const AdamConfig& config);

/// Rescales gradients in place so their joint L2 norm is at most max_norm.
/// Returns the norm before clipping.
double clip_global_norm(std::span<Parameter* const> params, Gradients& grads, double max_norm);

/// Central differences (f(x + eps e_i) - f(x - eps e_i)) / (2 eps).
Tensor finite_diff_grad(const std::function<double(const Tensor&)>& f, const Tensor& x,
                        double eps = 1e-5);

/// max_i |a_i - b_i| / max(floor, |a_i|, |b_i|)
double max_relative_error(const Tensor& a, const Tensor& b, double floor = 1e-6);

}  // namespace lyre
