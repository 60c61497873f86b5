// Copyright 2026 The scasr Authors
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

// Dense fp64 tensors of rank <= 3 recorded on a reverse-mode tape.
//
// A Graph owns every node created while building one expression. Nodes are
// appended in evaluation order, so creation order is a topological order and
// backward() simply walks the node list from the root down to index 0. A
// Tensor is a cheap (graph, index) handle; it is only valid while its Graph
// is alive. Graphs share no mutable state, so independent graphs may be
// built and differentiated on different threads.

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace scasr::num {

class Shape {
 public:
  Shape() = default;  // rank 0, one element
  Shape(std::initializer_list<std::size_t> dims);
  explicit Shape(std::span<const std::size_t> dims);

  std::size_t rank() const { return rank_; }
  std::size_t operator[](std::size_t i) const { return dims_[i]; }
  std::size_t numel() const;
  std::size_t rows() const;  // rank-2 helpers
  std::size_t cols() const;
  std::string str() const;

  friend bool operator==(const Shape& a, const Shape& b);

 private:
  std::array<std::size_t, 3> dims_{0, 0, 0};
  std::size_t rank_ = 0;
};

class Graph;

class Tensor {
 public:
  Tensor() = default;

  bool valid() const { return graph_ != nullptr; }
  Graph& graph() const { return *graph_; }
  std::uint32_t id() const { return id_; }

  const Shape& shape() const;
  std::span<const double> data() const;
  double operator[](std::size_t i) const { return data()[i]; }
  double at(std::size_t r, std::size_t c) const;
  double item() const;
  bool requires_grad() const;
  // Gradient after Graph::backward(). All zeros for nodes the root does not
  // depend on.
  std::span<const double> grad() const;
  std::vector<double> to_vector() const;

 private:
  friend class Graph;
  Tensor(Graph* g, std::uint32_t id) : graph_(g), id_(id) {}
  Graph* graph_ = nullptr;
  std::uint32_t id_ = 0;
};

class Graph {
 public:
  struct Node;
  using BackwardFn = std::function<void(const Node& out, Node* const* in)>;

  struct Node {
    Shape shape;
    std::vector<double> value;
    std::vector<double> grad;  // sized only when requires_grad
    bool requires_grad = false;
    std::array<std::uint32_t, 3> inputs{};
    std::uint8_t num_inputs = 0;
    BackwardFn backward;
    std::vector<std::uint32_t> extra_inputs;  // variadic ops (concat_rows)
  };

  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Tensor constant(Shape shape, std::vector<double> values);
  Tensor variable(Shape shape, std::vector<double> values);
  Tensor scalar(double v) { return constant(Shape{}, {v}); }

  // Records an op node. Values are checked for finiteness here, which is the
  // single funnel every forward op passes through.
  Tensor record(Shape shape, std::vector<double> values,
                std::initializer_list<Tensor> inputs, BackwardFn backward,
                const char* op_name);
  Tensor record_variadic(Shape shape, std::vector<double> values,
                         std::span<const Tensor> inputs, BackwardFn backward,
                         const char* op_name);

  // Reverse sweep from a scalar root. May be called once per graph.
  void backward(Tensor root);

  std::size_t size() const { return nodes_.size(); }
  const Node& node(std::uint32_t id) const { return nodes_[id]; }

 private:
  friend class Tensor;
  std::vector<Node> nodes_;
  bool backward_done_ = false;
};

// Linear algebra and elementwise ops. Binary elementwise ops require equal
// shapes or one rank-0 operand.
Tensor matmul(Tensor a, Tensor b);
Tensor add(Tensor a, Tensor b);
Tensor sub(Tensor a, Tensor b);
Tensor mul(Tensor a, Tensor b);
Tensor scale(Tensor a, double c);
Tensor tanh(Tensor a);
Tensor exp(Tensor a);
Tensor log(Tensor a);

// Row-wise (last axis) log-softmax via max-shifted log-sum-exp.
Tensor softmax_log(Tensor logits);
// Rank-2 log-softmax over the entries whose mask byte is nonzero. Masked-out
// entries produce 0 and receive no gradient. Every row needs one live entry.
Tensor softmax_log_masked(Tensor logits, std::vector<std::uint8_t> mask);
// Row-wise (last axis) L2 normalization; rows with norm <= 1e-12 throw.
Tensor l2_normalize(Tensor v);

Tensor sum(Tensor a);
Tensor mean(Tensor a);
Tensor reshape(Tensor a, Shape shape);
Tensor transpose(Tensor a);
Tensor row(Tensor a, std::size_t r);  // 1 x cols
Tensor gather_rows(Tensor a, std::vector<std::size_t> rows);
Tensor concat_rows(std::span<const Tensor> parts);
Tensor repeat_rows(Tensor a, std::size_t times);  // from a 1 x n row
// Flat-index gather, result is rank 1.
Tensor pick(Tensor a, std::vector<std::size_t> flat_indices);

inline constexpr double kNormEpsilon = 1e-12;

}  // namespace scasr::num
