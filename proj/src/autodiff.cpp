#include "lyre/autodiff.hpp"

#include <algorithm>
#include <cmath>

#include "lyre/error.hpp"

namespace lyre {

namespace {

Graph& graph_of(Var v) {
  if (!v.graph) throw ContractError("variable is not bound to a graph");
  return *v.graph;
}

Graph& common_graph(Var a, Var b) {
  if (a.graph != b.graph) throw ContractError("operands belong to different graphs");
  return graph_of(a);
}

Shape broadcast_shape(const Shape& a, const Shape& b) {
  const std::size_t rank = std::max(a.size(), b.size());
  Shape out(rank);
  for (std::size_t i = 0; i < rank; ++i) {
    const std::size_t da = i < rank - a.size() ? 1 : a[i - (rank - a.size())];
    const std::size_t db = i < rank - b.size() ? 1 : b[i - (rank - b.size())];
    if (da != db && da != 1 && db != 1)
      throw DimensionError("cannot broadcast " + shape_string(a) + " with " + shape_string(b));
    out[i] = std::max(da, db);
  }
  return out;
}

// For each flat index of `out`, the flat index of `in` it reads from.
// Empty when the shapes are identical.
std::vector<std::size_t> broadcast_map(const Shape& out, const Shape& in) {
  if (out == in) return {};
  const std::size_t total = shape_size(out);
  std::vector<std::size_t> map(total);
  const std::size_t rank = out.size();
  const std::size_t pad = rank - in.size();
  std::vector<std::size_t> in_stride(rank, 0);
  std::size_t stride = 1;
  for (std::size_t i = rank; i-- > pad;) {
    const std::size_t d = in[i - pad];
    in_stride[i] = d == 1 ? 0 : stride;
    stride *= d;
  }
  std::vector<std::size_t> idx(rank, 0);
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t src = 0;
    for (std::size_t i = 0; i < rank; ++i) src += idx[i] * in_stride[i];
    map[flat] = src;
    for (std::size_t i = rank; i-- > 0;) {
      if (++idx[i] < out[i]) break;
      idx[i] = 0;
    }
  }
  return map;
}

struct AxisSplit {
  std::size_t outer = 1;
  std::size_t length = 1;
  std::size_t inner = 1;
};

AxisSplit split_at(const Shape& shape, std::size_t axis) {
  AxisSplit s;
  for (std::size_t i = 0; i < axis; ++i) s.outer *= shape[i];
  s.length = shape[axis];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) s.inner *= shape[i];
  return s;
}

Var unary(Var x, Op op, double (*f)(double)) {
  Graph& g = graph_of(x);
  Graph::Node n;
  n.op = op;
  n.inputs = {x.index};
  n.value = g.value(x);
  for (double& v : n.value.values) v = f(v);
  return g.record(std::move(n));
}

double sigmoid_scalar(double v) {
  if (v >= 0) return 1.0 / (1.0 + std::exp(-v));
  const double e = std::exp(v);
  return e / (1.0 + e);
}

double softplus_scalar(double v) { return std::max(v, 0.0) + std::log1p(std::exp(-std::abs(v))); }

}  // namespace

const Tensor& Var::value() const { return graph_of(*this).value(*this); }

Var Graph::record(Node node) {
  nodes_.push_back(std::move(node));
  return Var{this, nodes_.size() - 1};
}

Var Graph::constant(Tensor value) {
  Node n;
  n.value = std::move(value);
  return record(std::move(n));
}

Var Graph::param(const Parameter& p) {
  if (auto it = param_nodes_.find(&p); it != param_nodes_.end()) return Var{this, it->second};
  Node n;
  n.value = p.value;
  n.param = &p;
  Var v = record(std::move(n));
  param_nodes_.emplace(&p, v.index);
  return v;
}

Tensor Graph::grad(Var v) const {
  const Node& n = nodes_.at(v.index);
  if (n.grad.values.empty()) return Tensor(n.value.shape, 0.0);
  return n.grad;
}

Tensor& Graph::grad_slot(std::size_t i) {
  Node& n = nodes_[i];
  if (n.grad.values.empty()) n.grad = Tensor(n.value.shape, 0.0);
  return n.grad;
}

Gradients Graph::backward(Var loss) {
  if (loss.graph != this) throw ContractError("loss belongs to a different graph");
  const Node& target = nodes_.at(loss.index);
  if (target.value.size() != 1)
    throw ContractError("backward() needs a scalar loss, got shape " +
                        shape_string(target.value.shape));
  for (Node& n : nodes_) n.grad = Tensor();
  grad_slot(loss.index).values[0] = 1.0;
  for (std::size_t i = loss.index + 1; i-- > 0;) {
    if (!nodes_[i].grad.values.empty() && nodes_[i].op != Op::leaf) backprop_node(i);
  }
  Gradients out;
  for (const auto& [p, idx] : param_nodes_) out.emplace(p, grad(Var{this, idx}));
  return out;
}

void Graph::backprop_node(std::size_t i) {
  // Inputs always precede their consumer, so grad_slot() never touches n.
  const Node& n = nodes_[i];
  const std::vector<double>& gy = n.grad.values;
  const std::vector<double>& y = n.value.values;

  switch (n.op) {
    case Op::leaf:
      break;

    case Op::matmul: {
      const Tensor& a = nodes_[n.inputs[0]].value;
      const Tensor& b = nodes_[n.inputs[1]].value;
      const std::size_t m = a.shape[0], k = a.shape[1], cols = b.shape[1];
      // dA = dY B^T, accumulated as rows of B^T so the inner loop is contiguous.
      std::vector<double> bt(k * cols);
      for (std::size_t p = 0; p < k; ++p)
        for (std::size_t c = 0; c < cols; ++c) bt[c * k + p] = b.values[p * cols + c];
      std::vector<double>& ga = grad_slot(n.inputs[0]).values;
      for (std::size_t r = 0; r < m; ++r) {
        double* garow = &ga[r * k];
        for (std::size_t c = 0; c < cols; ++c) {
          const double gv = gy[r * cols + c];
          if (gv == 0.0) continue;
          const double* btrow = &bt[c * k];
          for (std::size_t p = 0; p < k; ++p) garow[p] += gv * btrow[p];
        }
      }
      std::vector<double>& gb = grad_slot(n.inputs[1]).values;
      for (std::size_t r = 0; r < m; ++r)
        for (std::size_t p = 0; p < k; ++p) {
          const double av = a.values[r * k + p];
          if (av == 0.0) continue;
          double* gbrow = &gb[p * cols];
          const double* grow = &gy[r * cols];
          for (std::size_t c = 0; c < cols; ++c) gbrow[c] += av * grow[c];
        }
      break;
    }

    case Op::add:
    case Op::multiply: {
      for (int side = 0; side < 2; ++side) {
        const std::size_t in = n.inputs[side];
        const std::size_t other = n.inputs[1 - side];
        const auto map = broadcast_map(n.value.shape, nodes_[in].value.shape);
        const auto other_map = broadcast_map(n.value.shape, nodes_[other].value.shape);
        const std::vector<double>& ov = nodes_[other].value.values;
        std::vector<double>& g = grad_slot(in).values;
        for (std::size_t j = 0; j < gy.size(); ++j) {
          const std::size_t dst = map.empty() ? j : map[j];
          if (n.op == Op::add) {
            g[dst] += gy[j];
          } else {
            g[dst] += gy[j] * ov[other_map.empty() ? j : other_map[j]];
          }
        }
      }
      break;
    }

    case Op::concat: {
      const AxisSplit out = split_at(n.value.shape, n.axis);
      std::size_t start = 0;
      for (std::size_t in : n.inputs) {
        const std::size_t len = nodes_[in].value.shape[n.axis];
        std::vector<double>& g = grad_slot(in).values;
        for (std::size_t o = 0; o < out.outer; ++o)
          for (std::size_t l = 0; l < len; ++l)
            for (std::size_t q = 0; q < out.inner; ++q)
              g[(o * len + l) * out.inner + q] +=
                  gy[(o * out.length + start + l) * out.inner + q];
        start += len;
      }
      break;
    }

    case Op::slice: {
      const Shape& in_shape = nodes_[n.inputs[0]].value.shape;
      const AxisSplit src = split_at(in_shape, n.axis);
      const std::size_t len = n.value.shape[n.axis];
      std::vector<double>& g = grad_slot(n.inputs[0]).values;
      for (std::size_t o = 0; o < src.outer; ++o)
        for (std::size_t l = 0; l < len; ++l)
          for (std::size_t q = 0; q < src.inner; ++q)
            g[(o * src.length + n.offset + l) * src.inner + q] += gy[(o * len + l) * src.inner + q];
      break;
    }

    case Op::sigmoid: {
      std::vector<double>& g = grad_slot(n.inputs[0]).values;
      for (std::size_t j = 0; j < gy.size(); ++j) g[j] += gy[j] * y[j] * (1.0 - y[j]);
      break;
    }
    case Op::tanh: {
      std::vector<double>& g = grad_slot(n.inputs[0]).values;
      for (std::size_t j = 0; j < gy.size(); ++j) g[j] += gy[j] * (1.0 - y[j] * y[j]);
      break;
    }
    case Op::log: {
      const std::vector<double>& x = nodes_[n.inputs[0]].value.values;
      std::vector<double>& g = grad_slot(n.inputs[0]).values;
      for (std::size_t j = 0; j < gy.size(); ++j) g[j] += gy[j] / x[j];
      break;
    }
    case Op::exp: {
      std::vector<double>& g = grad_slot(n.inputs[0]).values;
      for (std::size_t j = 0; j < gy.size(); ++j) g[j] += gy[j] * y[j];
      break;
    }
    case Op::softplus: {
      const std::vector<double>& x = nodes_[n.inputs[0]].value.values;
      std::vector<double>& g = grad_slot(n.inputs[0]).values;
      for (std::size_t j = 0; j < gy.size(); ++j) g[j] += gy[j] * sigmoid_scalar(x[j]);
      break;
    }

    case Op::softmax: {
      const AxisSplit s = split_at(n.value.shape, n.axis);
      std::vector<double>& g = grad_slot(n.inputs[0]).values;
      for (std::size_t o = 0; o < s.outer; ++o)
        for (std::size_t q = 0; q < s.inner; ++q) {
          double dot = 0.0;
          for (std::size_t l = 0; l < s.length; ++l) {
            const std::size_t j = (o * s.length + l) * s.inner + q;
            dot += gy[j] * y[j];
          }
          for (std::size_t l = 0; l < s.length; ++l) {
            const std::size_t j = (o * s.length + l) * s.inner + q;
            g[j] += y[j] * (gy[j] - dot);
          }
        }
      break;
    }

    case Op::mean:
    case Op::sum: {
      std::vector<double>& g = grad_slot(n.inputs[0]).values;
      const double d = n.op == Op::mean ? gy[0] / static_cast<double>(g.size()) : gy[0];
      for (double& v : g) v += d;
      break;
    }

    case Op::gather_rows: {
      const std::size_t dim = n.value.shape[1];
      std::vector<double>& g = grad_slot(n.inputs[0]).values;
      for (std::size_t r = 0; r < n.indices.size(); ++r)
        for (std::size_t c = 0; c < dim; ++c) g[n.indices[r] * dim + c] += gy[r * dim + c];
      break;
    }
  }
}

Var matmul(Var a, Var b) {
  Graph& g = common_graph(a, b);
  const Tensor& av = g.value(a);
  const Tensor& bv = g.value(b);
  if (av.rank() != 2 || bv.rank() != 2 || av.shape[1] != bv.shape[0])
    throw DimensionError("matmul shape mismatch: " + shape_string(av.shape) + " x " +
                         shape_string(bv.shape));
  const std::size_t m = av.shape[0], k = av.shape[1], cols = bv.shape[1];
  Graph::Node n;
  n.op = Op::matmul;
  n.inputs = {a.index, b.index};
  n.value = Tensor({m, cols}, 0.0);
  double* out = n.value.values.data();
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t p = 0; p < k; ++p) {
      const double v = av.values[r * k + p];
      if (v == 0.0) continue;
      const double* brow = &bv.values[p * cols];
      double* orow = out + r * cols;
      for (std::size_t c = 0; c < cols; ++c) orow[c] += v * brow[c];
    }
  return g.record(std::move(n));
}

namespace {

Var elementwise(Var a, Var b, Op op) {
  Graph& g = common_graph(a, b);
  const Tensor& av = g.value(a);
  const Tensor& bv = g.value(b);
  const Shape out_shape = broadcast_shape(av.shape, bv.shape);
  const auto ma = broadcast_map(out_shape, av.shape);
  const auto mb = broadcast_map(out_shape, bv.shape);
  Graph::Node n;
  n.op = op;
  n.inputs = {a.index, b.index};
  n.value = Tensor(out_shape, 0.0);
  for (std::size_t j = 0; j < n.value.size(); ++j) {
    const double x = av.values[ma.empty() ? j : ma[j]];
    const double y = bv.values[mb.empty() ? j : mb[j]];
    n.value.values[j] = op == Op::add ? x + y : x * y;
  }
  return g.record(std::move(n));
}

}  // namespace

Var add(Var a, Var b) { return elementwise(a, b, Op::add); }
Var multiply(Var a, Var b) { return elementwise(a, b, Op::multiply); }

Var concat(const std::vector<Var>& parts, std::size_t axis) {
  if (parts.empty()) throw ContractError("concat of zero tensors");
  Graph& g = graph_of(parts[0]);
  const Shape& first = g.value(parts[0]).shape;
  if (axis >= first.size()) throw DimensionError("concat axis out of range");
  Shape out_shape = first;
  out_shape[axis] = 0;
  for (Var p : parts) {
    common_graph(parts[0], p);
    const Shape& s = g.value(p).shape;
    if (s.size() != first.size()) throw DimensionError("concat rank mismatch");
    for (std::size_t i = 0; i < s.size(); ++i)
      if (i != axis && s[i] != first[i])
        throw DimensionError("concat shape mismatch: " + shape_string(first) + " vs " +
                             shape_string(s));
    out_shape[axis] += s[axis];
  }
  Graph::Node n;
  n.op = Op::concat;
  n.axis = axis;
  n.value = Tensor(out_shape, 0.0);
  const AxisSplit out = split_at(out_shape, axis);
  std::size_t start = 0;
  for (Var p : parts) {
    n.inputs.push_back(p.index);
    const Tensor& v = g.value(p);
    const std::size_t len = v.shape[axis];
    for (std::size_t o = 0; o < out.outer; ++o)
      for (std::size_t l = 0; l < len; ++l)
        std::copy_n(&v.values[(o * len + l) * out.inner], out.inner,
                    &n.value.values[(o * out.length + start + l) * out.inner]);
    start += len;
  }
  return g.record(std::move(n));
}

Var slice(Var x, std::size_t axis, std::size_t begin, std::size_t end) {
  Graph& g = graph_of(x);
  const Tensor& v = g.value(x);
  if (axis >= v.rank() || begin >= end || end > v.shape[axis])
    throw DimensionError("slice [" + std::to_string(begin) + "," + std::to_string(end) +
                         ") on axis " + std::to_string(axis) + " of " + shape_string(v.shape));
  Shape out_shape = v.shape;
  out_shape[axis] = end - begin;
  Graph::Node n;
  n.op = Op::slice;
  n.inputs = {x.index};
  n.axis = axis;
  n.offset = begin;
  n.value = Tensor(out_shape, 0.0);
  const AxisSplit src = split_at(v.shape, axis);
  const std::size_t len = end - begin;
  for (std::size_t o = 0; o < src.outer; ++o)
    for (std::size_t l = 0; l < len; ++l)
      std::copy_n(&v.values[(o * src.length + begin + l) * src.inner], src.inner,
                  &n.value.values[(o * len + l) * src.inner]);
  return g.record(std::move(n));
}

Var sigmoid(Var x) { return unary(x, Op::sigmoid, sigmoid_scalar); }
Var tanh(Var x) { return unary(x, Op::tanh, [](double v) { return std::tanh(v); }); }
Var log(Var x) { return unary(x, Op::log, [](double v) { return std::log(v); }); }
Var exp(Var x) { return unary(x, Op::exp, [](double v) { return std::exp(v); }); }
Var softplus(Var x) { return unary(x, Op::softplus, softplus_scalar); }

Var softmax(Var x, std::size_t axis) {
  Graph& g = graph_of(x);
  const Tensor& v = g.value(x);
  if (axis >= v.rank()) throw DimensionError("softmax axis out of range");
  Graph::Node n;
  n.op = Op::softmax;
  n.inputs = {x.index};
  n.axis = axis;
  n.value = v;
  const AxisSplit s = split_at(v.shape, axis);
  auto& out = n.value.values;
  for (std::size_t o = 0; o < s.outer; ++o)
    for (std::size_t q = 0; q < s.inner; ++q) {
      double hi = -INFINITY;
      for (std::size_t l = 0; l < s.length; ++l) hi = std::max(hi, out[(o * s.length + l) * s.inner + q]);
      double total = 0.0;
      for (std::size_t l = 0; l < s.length; ++l) {
        double& e = out[(o * s.length + l) * s.inner + q];
        e = std::exp(e - hi);
        total += e;
      }
      for (std::size_t l = 0; l < s.length; ++l) out[(o * s.length + l) * s.inner + q] /= total;
    }
  return g.record(std::move(n));
}

namespace {

Var reduce(Var x, Op op) {
  Graph& g = graph_of(x);
  const Tensor& v = g.value(x);
  double total = 0.0;
  for (double e : v.values) total += e;
  if (op == Op::mean) total /= static_cast<double>(v.size());
  Graph::Node n;
  n.op = op;
  n.inputs = {x.index};
  n.value = Tensor::scalar(total);
  return g.record(std::move(n));
}

}  // namespace

Var mean(Var x) { return reduce(x, Op::mean); }
Var sum(Var x) { return reduce(x, Op::sum); }

Var gather_rows(Var table, const std::vector<std::size_t>& rows) {
  Graph& g = graph_of(table);
  const Tensor& t = g.value(table);
  if (t.rank() != 2) throw DimensionError("gather_rows needs a [V,d] table, got " + shape_string(t.shape));
  if (rows.empty()) throw ContractError("gather_rows with no indices");
  const std::size_t dim = t.shape[1];
  Graph::Node n;
  n.op = Op::gather_rows;
  n.inputs = {table.index};
  n.indices = rows;
  n.value = Tensor({rows.size(), dim}, 0.0);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r] >= t.shape[0])
      throw ContractError("row " + std::to_string(rows[r]) + " outside table of " +
                          std::to_string(t.shape[0]) + " rows");
    std::copy_n(&t.values[rows[r] * dim], dim, &n.value.values[r * dim]);
  }
  return g.record(std::move(n));
}

Var scale(Var x, double factor) {
  return multiply(x, graph_of(x).constant(Tensor::scalar(factor)));
}

Var sub(Var a, Var b) { return add(a, scale(b, -1.0)); }

Var square(Var x) { return multiply(x, x); }

}  // namespace lyre
