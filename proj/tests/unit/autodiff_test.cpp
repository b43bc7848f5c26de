#include <gtest/gtest.h>

#include <cmath>
#include <functional>

#include "lyre/autodiff.hpp"
#include "lyre/error.hpp"
#include "lyre/optim.hpp"
#include "lyre/rng.hpp"

using namespace lyre;

namespace {

Tensor random_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape), 0.0);
  for (double& v : t.values) v = rng.uniform(lo, hi);
  return t;
}

// Builds a fresh graph around x, returns the analytic gradient of the scalar
// produced by `f` and the central-difference estimate.
std::pair<Tensor, Tensor> grads_of(const std::function<Var(Graph&, Var)>& f, const Tensor& x) {
  Graph g;
  Var in = g.constant(x);
  Var out = f(g, in);
  g.backward(out);
  Tensor analytic = g.grad(in);
  Tensor numeric = finite_diff_grad(
      [&](const Tensor& probe) {
        Graph h;
        return f(h, h.constant(probe)).value().item();
      },
      x, 1e-5);
  return {analytic, numeric};
}

// Weighted sum so that every output element contributes a distinct gradient.
Var weighted_sum(Graph& g, Var y) {
  Rng rng(99);
  return sum(multiply(y, g.constant(random_tensor(y.shape(), rng))));
}

}  // namespace

TEST(Matmul, IdentityLeavesOperandUnchanged) {
  Graph g;
  Var a = g.constant(Tensor::matrix({{1, 0}, {0, 1}}));
  Var b = g.constant(Tensor::matrix({{3, 4}, {5, 6}}));
  EXPECT_EQ(matmul(a, b).value(), Tensor::matrix({{3, 4}, {5, 6}}));
}

TEST(Matmul, RowTimesColumn) {
  Graph g;
  Var a = g.constant(Tensor::matrix({{1, 2}}));
  Var b = g.constant(Tensor::matrix({{3}, {4}}));
  EXPECT_EQ(matmul(a, b).value(), Tensor::matrix({{11}}));
}

TEST(Matmul, ShapeMismatchNamesBothShapes) {
  Graph g;
  Var a = g.constant(Tensor({2, 3}, 1.0));
  Var b = g.constant(Tensor({2, 3}, 1.0));
  try {
    matmul(a, b);
    FAIL() << "expected DimensionError";
  } catch (const DimensionError& e) {
    EXPECT_NE(std::string(e.what()).find("[2,3] x [2,3]"), std::string::npos) << e.what();
  }
}

TEST(Matmul, GradientOfSumMatchesFiniteDifferences) {
  Rng rng(1);
  const Tensor a = random_tensor({3, 3}, rng);
  const Tensor b = random_tensor({3, 3}, rng);
  auto [analytic, numeric] =
      grads_of([&](Graph& g, Var x) { return sum(matmul(x, g.constant(b))); }, a);
  EXPECT_LT(max_relative_error(analytic, numeric), 1e-4);
  auto [ab, nb] = grads_of([&](Graph& g, Var x) { return sum(matmul(g.constant(a), x)); }, b);
  EXPECT_LT(max_relative_error(ab, nb), 1e-4);
}

TEST(Softmax, SymmetricInputIsUniform) {
  Graph g;
  Var y = softmax(g.constant(Tensor::vector({0, 0})), 0);
  EXPECT_DOUBLE_EQ(y.value().values[0], 0.5);
  EXPECT_DOUBLE_EQ(y.value().values[1], 0.5);
}

TEST(Softmax, LargeLogitsDoNotOverflow) {
  Graph g;
  Var y = softmax(g.constant(Tensor::vector({1000, 0})), 0);
  EXPECT_TRUE(y.value().all_finite());
  EXPECT_NEAR(y.value().values[0], 1.0, 1e-12);
  EXPECT_NEAR(y.value().values[1], 0.0, 1e-12);
}

TEST(Softmax, SlicesSumToOneAlongEitherAxis) {
  Rng rng(5);
  for (std::size_t axis = 0; axis < 2; ++axis) {
    Graph g;
    const Tensor y = softmax(g.constant(random_tensor({4, 7}, rng, -30, 30)), axis).value();
    const std::size_t outer = axis == 0 ? 7 : 4;
    const std::size_t len = axis == 0 ? 4 : 7;
    for (std::size_t o = 0; o < outer; ++o) {
      double total = 0.0;
      for (std::size_t l = 0; l < len; ++l) {
        const double v = axis == 0 ? y.at(l, o) : y.at(o, l);
        EXPECT_GT(v, 0.0);
        EXPECT_LT(v, 1.0);
        total += v;
      }
      EXPECT_NEAR(total, 1.0, 1e-9);
    }
  }
}

TEST(Softmax, GradientMatchesFiniteDifferences) {
  Rng rng(2);
  const Tensor x = random_tensor({5}, rng, -2, 2);
  auto [analytic, numeric] = grads_of([](Graph& g, Var v) { return weighted_sum(g, softmax(v, 0)); }, x);
  EXPECT_LT(max_relative_error(analytic, numeric), 1e-4);
}

TEST(Backward, SumHasUnitGradient) {
  Graph g;
  Var x = g.constant(Tensor::vector({1, 2, 3}));
  g.backward(sum(x));
  EXPECT_EQ(g.grad(x), Tensor::vector({1, 1, 1}));
}

TEST(Backward, SquareHasGradientTwoX) {
  Graph g;
  Var x = g.constant(Tensor::vector({1, 2, 3}));
  g.backward(sum(multiply(x, x)));
  EXPECT_EQ(g.grad(x), Tensor::vector({2, 4, 6}));
}

TEST(Backward, RejectsNonScalarLoss) {
  Graph g;
  Var x = g.constant(Tensor::vector({1, 2}));
  EXPECT_THROW(g.backward(x), ContractError);
}

TEST(Backward, UntouchedParametersGetZeroGradient) {
  Parameter used{"used", Tensor::vector({1, 2})};
  Parameter unused{"unused", Tensor({2, 2}, 3.0)};
  Graph g;
  Var a = g.param(used);
  g.param(unused);
  Gradients grads = g.backward(sum(a));
  ASSERT_EQ(grads.size(), 2u);
  EXPECT_EQ(grads.at(&unused), Tensor({2, 2}, 0.0));
  EXPECT_EQ(grads.at(&used), Tensor::vector({1, 1}));
}

TEST(Backward, TwoLayerTanhNetworkMatchesFiniteDifferences) {
  Rng rng(3);
  Parameter w1{"w1", random_tensor({4, 6}, rng)};
  Parameter b1{"b1", random_tensor({1, 6}, rng)};
  Parameter w2{"w2", random_tensor({6, 2}, rng)};
  Parameter b2{"b2", random_tensor({1, 2}, rng)};
  const Tensor input = random_tensor({3, 4}, rng);
  std::vector<Parameter*> params{&w1, &b1, &w2, &b2};

  auto loss_of = [&](Graph& g) {
    Var h = tanh(add(matmul(g.constant(input), g.param(w1)), g.param(b1)));
    Var out = tanh(add(matmul(h, g.param(w2)), g.param(b2)));
    return mean(square(out));
  };

  Graph g;
  Gradients grads = g.backward(loss_of(g));
  for (Parameter* p : params) {
    const Tensor saved = p->value;
    Tensor numeric = finite_diff_grad(
        [&](const Tensor& probe) {
          p->value = probe;
          Graph h;
          return loss_of(h).value().item();
        },
        saved, 1e-5);
    p->value = saved;
    EXPECT_LT(max_relative_error(grads.at(p), numeric), 1e-4) << p->name;
  }
}

// One check per primitive on random finite inputs.
TEST(Primitives, EveryGradientMatchesFiniteDifferences) {
  Rng rng(11);
  const Tensor other = random_tensor({3, 4}, rng);
  const Tensor row = random_tensor({1, 4}, rng);
  const Tensor rhs = random_tensor({4, 2}, rng);
  const std::vector<std::pair<std::string, std::function<Var(Graph&, Var)>>> cases = {
      {"add", [&](Graph& g, Var x) { return weighted_sum(g, add(x, g.constant(other))); }},
      {"add_broadcast", [&](Graph& g, Var x) { return weighted_sum(g, add(g.constant(other), slice(x, 0, 0, 1))); }},
      {"multiply", [&](Graph& g, Var x) { return weighted_sum(g, multiply(x, g.constant(other))); }},
      {"multiply_broadcast", [&](Graph& g, Var x) { return weighted_sum(g, multiply(x, g.constant(row))); }},
      {"matmul", [&](Graph& g, Var x) { return weighted_sum(g, matmul(x, g.constant(rhs))); }},
      {"concat0", [&](Graph& g, Var x) { return weighted_sum(g, concat({x, g.constant(other), x}, 0)); }},
      {"concat1", [&](Graph& g, Var x) { return weighted_sum(g, concat({g.constant(other), x}, 1)); }},
      {"slice", [&](Graph& g, Var x) { return weighted_sum(g, slice(x, 1, 1, 3)); }},
      {"sigmoid", [&](Graph& g, Var x) { return weighted_sum(g, sigmoid(x)); }},
      {"tanh", [&](Graph& g, Var x) { return weighted_sum(g, tanh(x)); }},
      {"log", [&](Graph& g, Var x) { return weighted_sum(g, log(add(multiply(x, x), g.constant(Tensor::scalar(0.5))))); }},
      {"exp", [&](Graph& g, Var x) { return weighted_sum(g, exp(x)); }},
      {"softmax0", [&](Graph& g, Var x) { return weighted_sum(g, softmax(x, 0)); }},
      {"softmax1", [&](Graph& g, Var x) { return weighted_sum(g, softmax(x, 1)); }},
      {"mean", [&](Graph& g, Var x) { return mean(multiply(x, g.constant(other))); }},
      {"sum", [&](Graph& g, Var x) { return sum(multiply(x, g.constant(other))); }},
      {"gather_rows", [&](Graph& g, Var x) { return weighted_sum(g, gather_rows(x, {2, 0, 2, 1})); }},
      {"softplus", [&](Graph& g, Var x) { return weighted_sum(g, softplus(scale(x, 3.0))); }},
  };
  const Tensor x = random_tensor({3, 4}, rng);
  for (const auto& [name, f] : cases) {
    auto [analytic, numeric] = grads_of(f, x);
    EXPECT_LT(max_relative_error(analytic, numeric), 1e-4) << name;
  }
}

TEST(Backward, ReusedInputAccumulates) {
  Rng rng(4);
  const Tensor x = random_tensor({2, 3}, rng);
  auto [analytic, numeric] = grads_of(
      [](Graph& g, Var v) { return weighted_sum(g, add(multiply(tanh(v), v), exp(scale(v, 0.3)))); }, x);
  EXPECT_LT(max_relative_error(analytic, numeric), 1e-4);

  Parameter p{"p", x};
  Graph g;
  Var a = g.param(p);
  Var b = g.param(p);
  EXPECT_EQ(a.index, b.index);
  Gradients grads = g.backward(sum(add(a, b)));
  EXPECT_EQ(grads.at(&p), Tensor(x.shape, 2.0));
}

TEST(Backward, ComputationIsBitIdentical) {
  auto run = [] {
    Rng rng(8);
    Parameter w{"w", random_tensor({5, 5}, rng)};
    Graph g;
    Var h = softmax(tanh(matmul(g.constant(random_tensor({2, 5}, rng)), g.param(w))), 1);
    Gradients grads = g.backward(mean(log(h)));
    return std::make_pair(h.value(), grads.at(&w));
  };
  EXPECT_EQ(run(), run());
}

TEST(Softplus, StableAtExtremes) {
  Graph g;
  const Tensor y = softplus(g.constant(Tensor::vector({-800, 0, 800}))).value();
  EXPECT_NEAR(y.values[0], 0.0, 1e-300);
  EXPECT_DOUBLE_EQ(y.values[1], std::log(2.0));
  EXPECT_DOUBLE_EQ(y.values[2], 800.0);
}

TEST(FiniteDiff, SquareAtThree) {
  const Tensor g = finite_diff_grad([](const Tensor& x) { return x.values[0] * x.values[0]; },
                                    Tensor::vector({3.0}), 1e-5);
  EXPECT_NEAR(g.values[0], 6.0, 1e-6);
}

TEST(FiniteDiff, ConstantFunctionHasZeroGradient) {
  const Tensor g = finite_diff_grad([](const Tensor&) { return 7.0; }, Tensor::vector({1, 2, 3}), 1e-5);
  EXPECT_EQ(g, Tensor::vector({0, 0, 0}));
}

TEST(FiniteDiff, RejectsNonPositiveStep) {
  EXPECT_THROW(finite_diff_grad([](const Tensor&) { return 0.0; }, Tensor::vector({1}), 0.0),
               ContractError);
}

TEST(Adam, ZeroGradientLeavesParametersUnchanged) {
  Parameter p{"p", Tensor::vector({1.5, -2.0})};
  std::vector<Parameter*> params{&p};
  AdamState s = make_adam_state(params);
  Gradients grads{{&p, Tensor::vector({0, 0})}};
  adam_step(params, grads, s, {});
  EXPECT_EQ(p.value, Tensor::vector({1.5, -2.0}));
  EXPECT_EQ(s.step_count, 1u);
}

TEST(Adam, FirstStepMovesByLearningRateAgainstGradientSign) {
  Parameter p{"p", Tensor::vector({1.0, 1.0, 1.0})};
  std::vector<Parameter*> params{&p};
  AdamState s = make_adam_state(params);
  Gradients grads{{&p, Tensor::vector({0.3, -7.0, 1e-3})}};
  AdamConfig cfg;
  cfg.lr = 0.01;
  adam_step(params, grads, s, cfg);
  EXPECT_NEAR(p.value.values[0], 1.0 - 0.01, 1e-7);
  EXPECT_NEAR(p.value.values[1], 1.0 + 0.01, 1e-7);
  EXPECT_NEAR(p.value.values[2], 1.0 - 0.01, 1e-7);
}

TEST(Adam, ShapeMismatchIsContractError) {
  Parameter p{"p", Tensor::vector({1.0, 1.0})};
  std::vector<Parameter*> params{&p};
  AdamState s = make_adam_state(params);
  Gradients grads{{&p, Tensor::vector({1.0})}};
  EXPECT_THROW(adam_step(params, grads, s, {}), ContractError);
}

TEST(Adam, MinimizesSquaredNormAndMatchesReferenceRule) {
  Parameter p{"x", Tensor::vector({5.0, -5.0})};
  std::vector<Parameter*> params{&p};
  AdamState s = make_adam_state(params);
  AdamConfig cfg;
  cfg.lr = 0.1;

  // Scalar transcription of the update rule, run alongside.
  double ref[2] = {5.0, -5.0}, m[2] = {0, 0}, v[2] = {0, 0};
  for (int t = 1; t <= 200; ++t) {
    Graph g;
    Var x = g.param(p);
    Gradients grads = g.backward(sum(square(x)));
    adam_step(params, grads, s, cfg);
    for (int i = 0; i < 2; ++i) {
      const double gr = 2 * ref[i];
      m[i] = 0.9 * m[i] + 0.1 * gr;
      v[i] = 0.999 * v[i] + 0.001 * gr * gr;
      const double mh = m[i] / (1 - std::pow(0.9, t));
      const double vh = v[i] / (1 - std::pow(0.999, t));
      ref[i] -= 0.1 * mh / (std::sqrt(vh) + 1e-8);
    }
  }
  EXPECT_NEAR(p.value.values[0], ref[0], 1e-12);
  EXPECT_NEAR(p.value.values[1], ref[1], 1e-12);
  EXPECT_LT(std::hypot(p.value.values[0], p.value.values[1]), 0.1);
  for (const Tensor& t : s.second_moment)
    for (double e : t.values) EXPECT_GE(e, 0.0);
}

TEST(ClipGlobalNorm, ScalesDownLargeGradients) {
  Parameter a{"a", Tensor::vector({0, 0})};
  Parameter b{"b", Tensor::vector({0})};
  std::vector<Parameter*> params{&a, &b};
  Gradients grads{{&a, Tensor::vector({3, 0})}, {&b, Tensor::vector({4})}};
  EXPECT_DOUBLE_EQ(clip_global_norm(params, grads, 1.0), 5.0);
  EXPECT_NEAR(grads.at(&a).values[0], 0.6, 1e-15);
  EXPECT_NEAR(grads.at(&b).values[0], 0.8, 1e-15);
}
