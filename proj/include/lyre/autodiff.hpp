#pragma once

// Define-by-run reverse-mode differentiation over Tensor values.
//
// A Graph is a tape: every primitive appends one node whose inputs precede it,
// so the tape order is already a topological order and backward() is a single
// reverse sweep. Graphs are built fresh for every forward pass.

#include <cstddef>
#include <string>
#include <unordered_map>
#include <vector>

#include "lyre/tensor.hpp"

namespace lyre {

/// A named trainable tensor owned outside any graph.
struct Parameter {
  std::string name;
  Tensor value;

  bool operator==(const Parameter&) const = default;
};

class Graph;

/// Handle to one node of a Graph.
struct Var {
  Graph* graph = nullptr;
  std::size_t index = 0;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape; }
};

using Gradients = std::unordered_map<const Parameter*, Tensor>;

enum class Op {
  leaf,
  matmul,
  add,
  multiply,
  concat,
  slice,
  sigmoid,
  tanh,
  log,
  exp,
  softmax,
  mean,
  sum,
  gather_rows,
  softplus,
};

class Graph {
 public:
  struct Node {
    Op op = Op::leaf;
    std::vector<std::size_t> inputs;
    Tensor value;
    Tensor grad;
    const Parameter* param = nullptr;
    std::size_t axis = 0;
    std::size_t offset = 0;
    std::vector<std::size_t> indices;
  };

  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var constant(Tensor value);
  /// Leaf bound to a parameter. Repeated calls with the same parameter return
  /// the same node so that reuse accumulates into one gradient.
  Var param(const Parameter& p);

  const Tensor& value(Var v) const { return nodes_.at(v.index).value; }
  /// Gradient of the last backward() target w.r.t. v; zeros if unreached.
  Tensor grad(Var v) const;

  /// Reverse sweep from a scalar loss. Every parameter bound to this graph
  /// gets an entry, zero-filled when the loss does not depend on it.
  Gradients backward(Var loss);

  std::size_t size() const noexcept { return nodes_.size(); }

  Var record(Node node);
  const Node& node(std::size_t i) const { return nodes_[i]; }

 private:
  void backprop_node(std::size_t i);
  Tensor& grad_slot(std::size_t i);

  std::vector<Node> nodes_;
  std::unordered_map<const Parameter*, std::size_t> param_nodes_;
};

// Primitives.
Var matmul(Var a, Var b);
/// Elementwise with numpy-style broadcasting of either operand.
Var add(Var a, Var b);
Var multiply(Var a, Var b);
Var concat(const std::vector<Var>& parts, std::size_t axis);
Var slice(Var x, std::size_t axis, std::size_t begin, std::size_t end);
Var sigmoid(Var x);
Var tanh(Var x);
Var log(Var x);
Var exp(Var x);
Var softmax(Var x, std::size_t axis);
Var mean(Var x);
Var sum(Var x);
/// Rows of a [V, d] table selected by index, shape [n, d].
Var gather_rows(Var table, const std::vector<std::size_t>& rows);
/// log(1 + e^x) evaluated as max(x, 0) + log1p(e^-|x|).
Var softplus(Var x);

// Composites.
Var scale(Var x, double factor);
Var sub(Var a, Var b);
Var square(Var x);

}  // namespace lyre
