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

#pragma once

// Tape-based reverse-mode differentiation over dense Tensors.
//
// A Graph records every primitive applied to its Vars in insertion order, so
// the tape is topologically sorted by construction. backward() walks it once in
// reverse. Build a fresh Graph per training step; a Graph and its Vars belong to
// one thread.

#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "poscl/tensor.hpp"

namespace poscl::ad {

using NodeId = std::size_t;

enum class Op : std::uint8_t {
  kLeaf,
  kMatMul,
  kTranspose,
  kReshape,
  kAdd,
  kSub,
  kMul,
  kDiv,
  kExp,
  kLog,
  kRelu,
  kScale,
  kAddRowBias,
  kSum,
  kMean,
  kMax,
  kL2NormalizeRows,
  kMaskedLogSumExpRows,
  kSoftmaxCrossEntropy,
};

enum class ElementwiseKind { kAdd, kSub, kMul, kDiv, kExp, kLog, kRelu, kScale };
enum class ReduceKind { kSum, kMean, kMax };

class Graph;

/// Handle to a node in a Graph. Cheap to copy; valid while its Graph lives.
class Var {
 public:
  Var(Graph* graph, NodeId id) : graph_(graph), id_(id) {}

  Graph& graph() const { return *graph_; }
  NodeId id() const { return id_; }
  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  bool requires_grad() const;

 private:
  Graph* graph_;
  NodeId id_;
};

/// Gradients of a scalar with respect to every requires_grad leaf of a graph.
class Gradients {
 public:
  bool contains(NodeId id) const { return grads_.count(id) != 0; }
  const Tensor& at(NodeId id) const;
  const Tensor& operator[](const Var& v) const { return at(v.id()); }
  std::size_t size() const { return grads_.size(); }
  const std::map<NodeId, Tensor>& all() const { return grads_; }
  /// Moves one gradient out; the entry is removed.
  Tensor take(NodeId id);

 private:
  friend class Graph;
  std::map<NodeId, Tensor> grads_;
};

class Graph {
 public:
  struct Node {
    Op op = Op::kLeaf;
    std::vector<NodeId> inputs;
    Tensor value;
    bool requires_grad = false;
    double constant = 0.0;                 // kScale factor
    std::optional<std::size_t> axis;       // reductions; nullopt reduces everything
    std::vector<double> saved;             // op-specific forward values reused by backward
    std::vector<std::size_t> indices;      // argmax positions, class labels
    std::size_t classes = 0;               // kSoftmaxCrossEntropy
  };

  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  /// Trainable input; receives a gradient from backward().
  Var leaf(Tensor value) { return add_leaf(std::move(value), true); }
  /// Input excluded from differentiation.
  Var constant(Tensor value) { return add_leaf(std::move(value), false); }

  std::size_t size() const { return nodes_.size(); }
  const Node& node(NodeId id) const { return nodes_.at(id); }

  /// Reverse sweep from a scalar. Leaves the loss does not reach get zeros.
  Gradients backward(const Var& loss) const;

  // Appends a computed node. Used by the op implementations.
  Var record(Node node);

 private:
  Var add_leaf(Tensor value, bool requires_grad);
  std::deque<Node> nodes_;  // deque: value() references stay valid as nodes are added
};

// ---- primitives ----

Var matmul(const Var& a, const Var& b);
Var transpose(const Var& a);
Var reshape(const Var& a, Shape shape);

Var elementwise(ElementwiseKind kind, const Var& a, std::optional<Var> b = std::nullopt, double c = 1.0);
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var div(const Var& a, const Var& b);
Var exp(const Var& a);
Var log(const Var& a);
Var relu(const Var& a);
Var scale(const Var& a, double c);

/// a[m x n] + bias[n] broadcast over rows.
Var add_row_bias(const Var& a, const Var& bias);

Var reduce(ReduceKind kind, const Var& a, std::optional<std::size_t> axis = std::nullopt);
Var sum(const Var& a, std::optional<std::size_t> axis = std::nullopt);
Var mean(const Var& a, std::optional<std::size_t> axis = std::nullopt);
Var max(const Var& a, std::optional<std::size_t> axis = std::nullopt);

inline constexpr double kNormEpsilon = 1e-12;

struct NormalizedRows {
  Var rows;
  std::size_t degenerate_rows = 0;  // rows whose squared norm is below epsilon
};

/// Divides each row of a[n x d] by sqrt(sum of squares + kNormEpsilon).
NormalizedRows l2_normalize_rows(const Var& a);

/// out[i] = log(sum_j include[i][j] * exp(a[i][j])) for a[m x n], computed
/// with the row max subtracted first. include is an m x n 0/1 tensor; a row
/// with no included entry is a DomainError.
Var masked_logsumexp_rows(const Var& a, const Tensor& include);

/// Mean per-pixel cross-entropy. logits has shape [B, C, ...]; labels holds
/// B * prod(...) class indices in [0, C), laid out like logits without C.
Var softmax_cross_entropy(const Var& logits, std::span<const std::size_t> labels);

inline Var operator+(const Var& a, const Var& b) { return add(a, b); }
inline Var operator-(const Var& a, const Var& b) { return sub(a, b); }
inline Var operator*(const Var& a, const Var& b) { return mul(a, b); }
inline Var operator/(const Var& a, const Var& b) { return div(a, b); }

// ---- verification ----

/// A scalar-valued tensor program of one input.
using ScalarProgram = std::function<Var(Graph&, const Var&)>;

/// Max over entries of |analytic - central difference| / max(1, |central difference|).
double grad_check(const ScalarProgram& f, const Tensor& x, double eps = 1e-6);

/// Plain forward evaluation of f at x.
double evaluate(const ScalarProgram& f, const Tensor& x);

}  // namespace poscl::ad
