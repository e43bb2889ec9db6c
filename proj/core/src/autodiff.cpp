// Copyright 2026 The poscl Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "poscl/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "poscl/errors.hpp"

namespace poscl::ad {

const Tensor& Var::value() const { return graph_->node(id_).value; }
bool Var::requires_grad() const { return graph_->node(id_).requires_grad; }

const Tensor& Gradients::at(NodeId id) const {
  auto it = grads_.find(id);
  if (it == grads_.end()) throw ContractError("no gradient recorded for node " + std::to_string(id));
  return it->second;
}

Tensor Gradients::take(NodeId id) {
  auto it = grads_.find(id);
  if (it == grads_.end()) throw ContractError("no gradient recorded for node " + std::to_string(id));
  Tensor out = std::move(it->second);
  grads_.erase(it);
  return out;
}

Var Graph::add_leaf(Tensor value, bool requires_grad) {
  Node n;
  n.op = Op::kLeaf;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

Var Graph::record(Node node) {
  node.requires_grad = false;
  for (auto in : node.inputs) node.requires_grad = node.requires_grad || nodes_.at(in).requires_grad;
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

namespace {

void same_graph(const Var& a, const Var& b) {
  if (&a.graph() != &b.graph()) throw ContractError("operands belong to different graphs");
}

void require_same_shape(const char* op, const Var& a, const Var& b) {
  same_graph(a, b);
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + to_string(a.shape()) + " vs " +
                         to_string(b.shape()));
  }
}

void require_rank2(const char* op, const Var& a) {
  if (a.value().rank() != 2) {
    throw DimensionError(std::string(op) + ": expected rank-2 operand, got " + to_string(a.shape()));
  }
}

// C[m x p] += A[m x k] * B[k x p], all row-major.
void gemm_acc(const double* A, const double* B, double* C, std::size_t m, std::size_t k, std::size_t p) {
  for (std::size_t i = 0; i < m; ++i) {
    double* crow = C + i * p;
    for (std::size_t l = 0; l < k; ++l) {
      const double a = A[i * k + l];
      if (a == 0.0) continue;
      const double* brow = B + l * p;
      for (std::size_t j = 0; j < p; ++j) crow[j] += a * brow[j];
    }
  }
}

// C[m x k] += A[m x p] * B[k x p]^T
void gemm_abt_acc(const double* A, const double* B, double* C, std::size_t m, std::size_t p, std::size_t k) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = A + i * p;
    for (std::size_t l = 0; l < k; ++l) {
      const double* brow = B + l * p;
      double acc = 0.0;
      for (std::size_t j = 0; j < p; ++j) acc += arow[j] * brow[j];
      C[i * k + l] += acc;
    }
  }
}

// C[k x p] += A[m x k]^T * B[m x p]
void gemm_atb_acc(const double* A, const double* B, double* C, std::size_t m, std::size_t k, std::size_t p) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* brow = B + i * p;
    for (std::size_t l = 0; l < k; ++l) {
      const double a = A[i * k + l];
      if (a == 0.0) continue;
      double* crow = C + l * p;
      for (std::size_t j = 0; j < p; ++j) crow[j] += a * brow[j];
    }
  }
}

std::vector<double> transposed(std::span<const double> a, std::size_t rows, std::size_t cols) {
  std::vector<double> t(a.size());
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) t[j * rows + i] = a[i * cols + j];
  return t;
}

struct AxisSplit {
  std::size_t outer = 1, extent = 1, inner = 1;
};

AxisSplit split_axis(const Shape& s, std::size_t axis) {
  AxisSplit r;
  for (std::size_t i = 0; i < axis; ++i) r.outer *= s[i];
  r.extent = s[axis];
  for (std::size_t i = axis + 1; i < s.size(); ++i) r.inner *= s[i];
  return r;
}

Graph::Node make_node(Op op, std::vector<NodeId> inputs, Tensor value) {
  Graph::Node n;
  n.op = op;
  n.inputs = std::move(inputs);
  n.value = std::move(value);
  return n;
}

}  // namespace

Var matmul(const Var& a, const Var& b) {
  same_graph(a, b);
  require_rank2("matmul", a);
  require_rank2("matmul", b);
  const auto m = a.shape()[0], k = a.shape()[1], p = b.shape()[1];
  if (b.shape()[0] != k) {
    throw DimensionError("matmul: inner extents differ, " + to_string(a.shape()) + " x " + to_string(b.shape()));
  }
  std::vector<double> out(m * p, 0.0);
  gemm_acc(a.value().data().data(), b.value().data().data(), out.data(), m, k, p);
  return a.graph().record(make_node(Op::kMatMul, {a.id(), b.id()}, Tensor({m, p}, std::move(out))));
}

Var transpose(const Var& a) {
  require_rank2("transpose", a);
  const auto r = a.shape()[0], c = a.shape()[1];
  return a.graph().record(make_node(Op::kTranspose, {a.id()}, Tensor({c, r}, transposed(a.value().data(), r, c))));
}

Var reshape(const Var& a, Shape shape) {
  if (shape_size(shape) != a.value().size()) {
    throw DimensionError("reshape: " + to_string(a.shape()) + " to " + to_string(shape));
  }
  return a.graph().record(make_node(Op::kReshape, {a.id()}, a.value().reshaped(std::move(shape))));
}

namespace {

Var binary(Op op, const char* name, const Var& a, const Var& b) {
  require_same_shape(name, a, b);
  const auto& x = a.value().values();
  const auto& y = b.value().values();
  std::vector<double> out(x.size());
  switch (op) {
    case Op::kAdd:
      for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] + y[i];
      break;
    case Op::kSub:
      for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] - y[i];
      break;
    case Op::kMul:
      for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] * y[i];
      break;
    case Op::kDiv:
      for (std::size_t i = 0; i < x.size(); ++i) {
        if (y[i] == 0.0) throw DomainError("div: zero divisor at flat index " + std::to_string(i));
        out[i] = x[i] / y[i];
      }
      break;
    default:
      throw ContractError("binary: not a binary op");
  }
  return a.graph().record(make_node(op, {a.id(), b.id()}, Tensor(a.shape(), std::move(out))));
}

}  // namespace

Var add(const Var& a, const Var& b) { return binary(Op::kAdd, "add", a, b); }
Var sub(const Var& a, const Var& b) { return binary(Op::kSub, "sub", a, b); }
Var mul(const Var& a, const Var& b) { return binary(Op::kMul, "mul", a, b); }
Var div(const Var& a, const Var& b) { return binary(Op::kDiv, "div", a, b); }

Var exp(const Var& a) {
  std::vector<double> out(a.value().size());
  const auto& x = a.value().values();
  for (std::size_t i = 0; i < x.size(); ++i) {
    out[i] = std::exp(x[i]);
    if (!std::isfinite(out[i])) throw DomainError("exp: overflow at flat index " + std::to_string(i));
  }
  return a.graph().record(make_node(Op::kExp, {a.id()}, Tensor(a.shape(), std::move(out))));
}

Var log(const Var& a) {
  std::vector<double> out(a.value().size());
  const auto& x = a.value().values();
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0)) throw DomainError("log: non-positive input at flat index " + std::to_string(i));
    out[i] = std::log(x[i]);
  }
  return a.graph().record(make_node(Op::kLog, {a.id()}, Tensor(a.shape(), std::move(out))));
}

Var relu(const Var& a) {
  std::vector<double> out(a.value().values());
  for (auto& v : out) v = v > 0.0 ? v : 0.0;
  return a.graph().record(make_node(Op::kRelu, {a.id()}, Tensor(a.shape(), std::move(out))));
}

Var scale(const Var& a, double c) {
  std::vector<double> out(a.value().values());
  for (auto& v : out) v *= c;
  auto n = make_node(Op::kScale, {a.id()}, Tensor(a.shape(), std::move(out)));
  n.constant = c;
  return a.graph().record(std::move(n));
}

Var elementwise(ElementwiseKind kind, const Var& a, std::optional<Var> b, double c) {
  auto need_b = [&]() -> const Var& {
    if (!b) throw ContractError("elementwise: binary kind needs a second operand");
    return *b;
  };
  switch (kind) {
    case ElementwiseKind::kAdd: return add(a, need_b());
    case ElementwiseKind::kSub: return sub(a, need_b());
    case ElementwiseKind::kMul: return mul(a, need_b());
    case ElementwiseKind::kDiv: return div(a, need_b());
    case ElementwiseKind::kExp: return exp(a);
    case ElementwiseKind::kLog: return log(a);
    case ElementwiseKind::kRelu: return relu(a);
    case ElementwiseKind::kScale: return scale(a, c);
  }
  throw ContractError("elementwise: unknown kind");
}

Var add_row_bias(const Var& a, const Var& bias) {
  same_graph(a, bias);
  require_rank2("add_row_bias", a);
  const auto m = a.shape()[0], n = a.shape()[1];
  if (bias.shape() != Shape{n}) {
    throw DimensionError("add_row_bias: bias " + to_string(bias.shape()) + " does not match " + to_string(a.shape()));
  }
  std::vector<double> out(a.value().values());
  const auto& bv = bias.value().values();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] += bv[j];
  return a.graph().record(make_node(Op::kAddRowBias, {a.id(), bias.id()}, Tensor(a.shape(), std::move(out))));
}

Var reduce(ReduceKind kind, const Var& a, std::optional<std::size_t> axis) {
  const auto& x = a.value();
  const Op op = kind == ReduceKind::kSum ? Op::kSum : kind == ReduceKind::kMean ? Op::kMean : Op::kMax;
  Shape out_shape;
  AxisSplit s;
  if (axis) {
    if (*axis >= x.rank()) {
      throw RangeError("reduce: axis " + std::to_string(*axis) + " out of range for shape " + to_string(x.shape()));
    }
    s = split_axis(x.shape(), *axis);
    out_shape = x.shape();
    out_shape.erase(out_shape.begin() + static_cast<std::ptrdiff_t>(*axis));
  } else {
    s.extent = x.size();
  }
  std::vector<double> out(s.outer * s.inner);
  std::vector<std::size_t> argmax;
  if (op == Op::kMax) argmax.resize(out.size());
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t in = 0; in < s.inner; ++in) {
      const std::size_t base = o * s.extent * s.inner + in;
      double acc = op == Op::kMax ? x[base] : 0.0;
      std::size_t best = 0;
      for (std::size_t e = 0; e < s.extent; ++e) {
        const double v = x[base + e * s.inner];
        if (op == Op::kMax) {
          if (v > acc) {  // strict: ties keep the lowest index
            acc = v;
            best = e;
          }
        } else {
          acc += v;
        }
      }
      if (op == Op::kMean) acc /= static_cast<double>(s.extent);
      out[o * s.inner + in] = acc;
      if (op == Op::kMax) argmax[o * s.inner + in] = best;
    }
  }
  auto n = make_node(op, {a.id()}, Tensor(std::move(out_shape), std::move(out)));
  n.axis = axis;
  n.indices = std::move(argmax);
  return a.graph().record(std::move(n));
}

Var sum(const Var& a, std::optional<std::size_t> axis) { return reduce(ReduceKind::kSum, a, axis); }
Var mean(const Var& a, std::optional<std::size_t> axis) { return reduce(ReduceKind::kMean, a, axis); }
Var max(const Var& a, std::optional<std::size_t> axis) { return reduce(ReduceKind::kMax, a, axis); }

NormalizedRows l2_normalize_rows(const Var& a) {
  require_rank2("l2_normalize_rows", a);
  const auto r = a.shape()[0], c = a.shape()[1];
  const auto& x = a.value().values();
  std::vector<double> out(x.size()), norms(r);
  std::size_t degenerate = 0;
  for (std::size_t i = 0; i < r; ++i) {
    double ss = 0.0;
    for (std::size_t j = 0; j < c; ++j) ss += x[i * c + j] * x[i * c + j];
    if (ss < kNormEpsilon) ++degenerate;
    norms[i] = std::sqrt(ss + kNormEpsilon);
    for (std::size_t j = 0; j < c; ++j) out[i * c + j] = x[i * c + j] / norms[i];
  }
  auto n = make_node(Op::kL2NormalizeRows, {a.id()}, Tensor(a.shape(), std::move(out)));
  n.saved = std::move(norms);
  return {a.graph().record(std::move(n)), degenerate};
}

Var masked_logsumexp_rows(const Var& a, const Tensor& include) {
  require_rank2("masked_logsumexp_rows", a);
  if (include.shape() != a.shape()) {
    throw DimensionError("masked_logsumexp_rows: mask " + to_string(include.shape()) + " vs input " +
                         to_string(a.shape()));
  }
  const auto r = a.shape()[0], c = a.shape()[1];
  const auto& x = a.value().values();
  std::vector<double> out(r), weights(x.size(), 0.0);
  for (std::size_t i = 0; i < r; ++i) {
    double row_max = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < c; ++j)
      if (include[i * c + j] != 0.0) row_max = std::max(row_max, x[i * c + j]);
    if (!std::isfinite(row_max)) {
      throw DomainError("masked_logsumexp_rows: row " + std::to_string(i) + " has no included entries");
    }
    double acc = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
      if (include[i * c + j] == 0.0) continue;
      weights[i * c + j] = std::exp(x[i * c + j] - row_max);
      acc += weights[i * c + j];
    }
    out[i] = row_max + std::log(acc);
    for (std::size_t j = 0; j < c; ++j) weights[i * c + j] /= acc;
  }
  auto n = make_node(Op::kMaskedLogSumExpRows, {a.id()}, Tensor({r}, std::move(out)));
  n.saved = std::move(weights);
  return a.graph().record(std::move(n));
}

Var softmax_cross_entropy(const Var& logits, std::span<const std::size_t> labels) {
  const auto& x = logits.value();
  if (x.rank() < 2) throw DimensionError("softmax_cross_entropy: logits need shape [B, C, ...]");
  const auto s = split_axis(x.shape(), 1);  // outer = B, extent = C, inner = pixels
  if (labels.size() != s.outer * s.inner) {
    throw DimensionError("softmax_cross_entropy: " + std::to_string(labels.size()) + " labels for logits " +
                         to_string(x.shape()));
  }
  std::vector<double> probs(x.size());
  double total = 0.0;
  for (std::size_t b = 0; b < s.outer; ++b) {
    for (std::size_t p = 0; p < s.inner; ++p) {
      const std::size_t label = labels[b * s.inner + p];
      if (label >= s.extent) {
        throw RangeError("softmax_cross_entropy: label " + std::to_string(label) + " at pixel " +
                         std::to_string(b * s.inner + p) + " outside [0, " + std::to_string(s.extent) + ")");
      }
      const std::size_t base = b * s.extent * s.inner + p;
      double m = x[base];
      for (std::size_t c = 1; c < s.extent; ++c) m = std::max(m, x[base + c * s.inner]);
      double z = 0.0;
      for (std::size_t c = 0; c < s.extent; ++c) {
        probs[base + c * s.inner] = std::exp(x[base + c * s.inner] - m);
        z += probs[base + c * s.inner];
      }
      for (std::size_t c = 0; c < s.extent; ++c) probs[base + c * s.inner] /= z;
      total += m + std::log(z) - x[base + label * s.inner];
    }
  }
  const double count = static_cast<double>(s.outer * s.inner);
  auto n = make_node(Op::kSoftmaxCrossEntropy, {logits.id()}, Tensor::scalar(total / count));
  n.saved = std::move(probs);
  n.indices.assign(labels.begin(), labels.end());
  n.classes = s.extent;
  return logits.graph().record(std::move(n));
}

// ---- backward ----

namespace {

void accumulate(std::vector<std::optional<std::vector<double>>>& grads, NodeId id, std::size_t size,
                auto&& fill) {
  auto& g = grads[id];
  if (!g) g.emplace(size, 0.0);
  fill(*g);
}

}  // namespace

Gradients Graph::backward(const Var& loss) const {
  if (&loss.graph() != this) throw ContractError("backward: loss belongs to another graph");
  if (loss.value().size() != 1) {
    throw ContractError("backward: loss must be scalar, got shape " + to_string(loss.shape()));
  }
  std::vector<std::optional<std::vector<double>>> grads(nodes_.size());
  grads[loss.id()] = std::vector<double>{1.0};

  for (NodeId id = loss.id() + 1; id-- > 0;) {
    const Node& n = nodes_[id];
    if (!grads[id] || !n.requires_grad || n.op == Op::kLeaf) continue;
    const std::vector<double>& dy = *grads[id];
    auto wants = [&](std::size_t k) { return nodes_[n.inputs[k]].requires_grad; };
    auto in_value = [&](std::size_t k) -> const Tensor& { return nodes_[n.inputs[k]].value; };
    auto acc = [&](std::size_t k, auto&& fill) {
      if (wants(k)) accumulate(grads, n.inputs[k], in_value(k).size(), fill);
    };

    switch (n.op) {
      case Op::kLeaf:
        break;
      case Op::kMatMul: {
        const auto& A = in_value(0);
        const auto& B = in_value(1);
        const auto m = A.shape()[0], k = A.shape()[1], p = B.shape()[1];
        acc(0, [&](std::vector<double>& g) {  // dA = dC * B^T
          gemm_abt_acc(dy.data(), B.data().data(), g.data(), m, p, k);
        });
        acc(1, [&](std::vector<double>& g) {  // dB = A^T * dC
          gemm_atb_acc(A.data().data(), dy.data(), g.data(), m, k, p);
        });
        break;
      }
      case Op::kTranspose: {
        const auto r = in_value(0).shape()[0], c = in_value(0).shape()[1];
        acc(0, [&](std::vector<double>& g) {
          auto t = transposed(dy, c, r);
          for (std::size_t i = 0; i < g.size(); ++i) g[i] += t[i];
        });
        break;
      }
      case Op::kReshape:
      case Op::kAdd:
        acc(0, [&](std::vector<double>& g) {
          for (std::size_t i = 0; i < g.size(); ++i) g[i] += dy[i];
        });
        if (n.op == Op::kAdd) {
          acc(1, [&](std::vector<double>& g) {
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += dy[i];
          });
        }
        break;
      case Op::kSub:
        acc(0, [&](std::vector<double>& g) {
          for (std::size_t i = 0; i < g.size(); ++i) g[i] += dy[i];
        });
        acc(1, [&](std::vector<double>& g) {
          for (std::size_t i = 0; i < g.size(); ++i) g[i] -= dy[i];
        });
        break;
      case Op::kMul: {
        const auto& A = in_value(0);
        const auto& B = in_value(1);
        acc(0, [&](std::vector<double>& g) {
          for (std::size_t i = 0; i < g.size(); ++i) g[i] += dy[i] * B[i];
        });
        acc(1, [&](std::vector<double>& g) {
          for (std::size_t i = 0; i < g.size(); ++i) g[i] += dy[i] * A[i];
        });
        break;
      }
      case Op::kDiv: {
        const auto& A = in_value(0);
        const auto& B = in_value(1);
        acc(0, [&](std::vector<double>& g) {
          for (std::size_t i = 0; i < g.size(); ++i) g[i] += dy[i] / B[i];
        });
        acc(1, [&](std::vector<double>& g) {
          for (std::size_t i = 0; i < g.size(); ++i) g[i] -= dy[i] * A[i] / (B[i] * B[i]);
        });
        break;
      }
      case Op::kExp:
        acc(0, [&](std::vector<double>& g) {
          for (std::size_t i = 0; i < g.size(); ++i) g[i] += dy[i] * n.value[i];
        });
        break;
      case Op::kLog: {
        const auto& A = in_value(0);
        acc(0, [&](std::vector<double>& g) {
          for (std::size_t i = 0; i < g.size(); ++i) g[i] += dy[i] / A[i];
        });
        break;
      }
      case Op::kRelu: {
        const auto& A = in_value(0);
        acc(0, [&](std::vector<double>& g) {
          for (std::size_t i = 0; i < g.size(); ++i)
            if (A[i] > 0.0) g[i] += dy[i];
        });
        break;
      }
      case Op::kScale:
        acc(0, [&](std::vector<double>& g) {
          for (std::size_t i = 0; i < g.size(); ++i) g[i] += dy[i] * n.constant;
        });
        break;
      case Op::kAddRowBias: {
        const auto cols = in_value(1).size();
        acc(0, [&](std::vector<double>& g) {
          for (std::size_t i = 0; i < g.size(); ++i) g[i] += dy[i];
        });
        acc(1, [&](std::vector<double>& g) {
          for (std::size_t i = 0; i < dy.size(); ++i) g[i % cols] += dy[i];
        });
        break;
      }
      case Op::kSum:
      case Op::kMean:
      case Op::kMax: {
        const auto& A = in_value(0);
        AxisSplit s;
        if (n.axis) {
          s = split_axis(A.shape(), *n.axis);
        } else {
          s.extent = A.size();
        }
        const double w = n.op == Op::kMean ? 1.0 / static_cast<double>(s.extent) : 1.0;
        acc(0, [&](std::vector<double>& g) {
          for (std::size_t o = 0; o < s.outer; ++o) {
            for (std::size_t in = 0; in < s.inner; ++in) {
              const std::size_t r = o * s.inner + in;
              const std::size_t base = o * s.extent * s.inner + in;
              if (n.op == Op::kMax) {
                g[base + n.indices[r] * s.inner] += dy[r];
              } else {
                for (std::size_t e = 0; e < s.extent; ++e) g[base + e * s.inner] += w * dy[r];
              }
            }
          }
        });
        break;
      }
      case Op::kL2NormalizeRows: {
        const auto r = n.value.shape()[0], c = n.value.shape()[1];
        acc(0, [&](std::vector<double>& g) {
          for (std::size_t i = 0; i < r; ++i) {
            double dot = 0.0;
            for (std::size_t j = 0; j < c; ++j) dot += dy[i * c + j] * n.value[i * c + j];
            for (std::size_t j = 0; j < c; ++j) {
              g[i * c + j] += (dy[i * c + j] - n.value[i * c + j] * dot) / n.saved[i];
            }
          }
        });
        break;
      }
      case Op::kMaskedLogSumExpRows: {
        const auto c = in_value(0).shape()[1];
        acc(0, [&](std::vector<double>& g) {
          for (std::size_t i = 0; i < g.size(); ++i) g[i] += dy[i / c] * n.saved[i];
        });
        break;
      }
      case Op::kSoftmaxCrossEntropy: {
        const auto& A = in_value(0);
        const auto s = split_axis(A.shape(), 1);
        const double w = dy[0] / static_cast<double>(s.outer * s.inner);
        acc(0, [&](std::vector<double>& g) {
          for (std::size_t i = 0; i < g.size(); ++i) g[i] += w * n.saved[i];
          for (std::size_t b = 0; b < s.outer; ++b) {
            for (std::size_t p = 0; p < s.inner; ++p) {
              const std::size_t label = n.indices[b * s.inner + p];
              g[b * s.extent * s.inner + label * s.inner + p] -= w;
            }
          }
        });
        break;
      }
    }
  }

  Gradients out;
  for (NodeId id = 0; id < nodes_.size(); ++id) {
    const Node& n = nodes_[id];
    if (n.op != Op::kLeaf || !n.requires_grad) continue;
    if (grads[id]) {
      out.grads_.emplace(id, Tensor(n.value.shape(), std::move(*grads[id])));
    } else {
      out.grads_.emplace(id, Tensor::zeros(n.value.shape()));
    }
  }
  return out;
}

}  // namespace poscl::ad
