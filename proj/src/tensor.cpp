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

#include "scasr/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "scasr/errors.hpp"

namespace scasr::num {

using Node = Graph::Node;

// ---------------------------------------------------------------------------
// Shape

Shape::Shape(std::initializer_list<std::size_t> dims)
    : Shape(std::span<const std::size_t>(dims.begin(), dims.size())) {}

Shape::Shape(std::span<const std::size_t> dims) {
  if (dims.size() > 3) {
    throw DimensionError("rank " + std::to_string(dims.size()) +
                         " exceeds the supported maximum of 3");
  }
  rank_ = dims.size();
  std::copy(dims.begin(), dims.end(), dims_.begin());
}

std::size_t Shape::numel() const {
  std::size_t n = 1;
  for (std::size_t i = 0; i < rank_; ++i) n *= dims_[i];
  return n;
}

std::size_t Shape::rows() const {
  if (rank_ != 2) throw DimensionError("expected rank 2, got " + str());
  return dims_[0];
}

std::size_t Shape::cols() const {
  if (rank_ != 2) throw DimensionError("expected rank 2, got " + str());
  return dims_[1];
}

std::string Shape::str() const {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < rank_; ++i) {
    if (i) os << 'x';
    os << dims_[i];
  }
  os << ']';
  return os.str();
}

bool operator==(const Shape& a, const Shape& b) {
  if (a.rank_ != b.rank_) return false;
  for (std::size_t i = 0; i < a.rank_; ++i) {
    if (a.dims_[i] != b.dims_[i]) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Tensor

const Shape& Tensor::shape() const { return graph_->nodes_[id_].shape; }

std::span<const double> Tensor::data() const {
  return graph_->nodes_[id_].value;
}

double Tensor::at(std::size_t r, std::size_t c) const {
  return data()[r * shape().cols() + c];
}

double Tensor::item() const {
  if (shape().numel() != 1) {
    throw ContractError("item() on tensor of shape " + shape().str());
  }
  return data()[0];
}

bool Tensor::requires_grad() const {
  return graph_->nodes_[id_].requires_grad;
}

std::span<const double> Tensor::grad() const {
  const Node& n = graph_->nodes_[id_];
  if (!n.requires_grad) {
    throw ContractError("grad() on a tensor that does not require grad");
  }
  return n.grad;
}

std::vector<double> Tensor::to_vector() const {
  auto d = data();
  return {d.begin(), d.end()};
}

// ---------------------------------------------------------------------------
// Graph

namespace {

void check_finite(std::span<const double> v, const char* op_name) {
  for (double x : v) {
    if (!std::isfinite(x)) {
      throw NonFiniteError(std::string("non-finite value produced by ") +
                           op_name);
    }
  }
}

}  // namespace

Tensor Graph::constant(Shape shape, std::vector<double> values) {
  if (values.size() != shape.numel()) {
    throw DimensionError("constant of shape " + shape.str() + " given " +
                         std::to_string(values.size()) + " values");
  }
  check_finite(values, "constant");
  Node n;
  n.shape = shape;
  n.value = std::move(values);
  nodes_.push_back(std::move(n));
  return Tensor(this, static_cast<std::uint32_t>(nodes_.size() - 1));
}

Tensor Graph::variable(Shape shape, std::vector<double> values) {
  Tensor t = constant(shape, std::move(values));
  Node& n = nodes_[t.id_];
  n.requires_grad = true;
  n.grad.assign(n.value.size(), 0.0);
  return t;
}

Tensor Graph::record(Shape shape, std::vector<double> values,
                     std::initializer_list<Tensor> inputs, BackwardFn backward,
                     const char* op_name) {
  check_finite(values, op_name);
  Node n;
  n.shape = shape;
  n.value = std::move(values);
  for (const Tensor& in : inputs) {
    if (in.graph_ != this) {
      throw ContractError(std::string(op_name) +
                          ": input belongs to a different graph");
    }
    n.inputs[n.num_inputs++] = in.id_;
    n.requires_grad = n.requires_grad || nodes_[in.id_].requires_grad;
  }
  if (n.requires_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Tensor(this, static_cast<std::uint32_t>(nodes_.size() - 1));
}

Tensor Graph::record_variadic(Shape shape, std::vector<double> values,
                              std::span<const Tensor> inputs,
                              BackwardFn backward, const char* op_name) {
  check_finite(values, op_name);
  Node n;
  n.shape = shape;
  n.value = std::move(values);
  n.extra_inputs.reserve(inputs.size());
  for (const Tensor& in : inputs) {
    if (in.graph_ != this) {
      throw ContractError(std::string(op_name) +
                          ": input belongs to a different graph");
    }
    n.extra_inputs.push_back(in.id_);
    n.requires_grad = n.requires_grad || nodes_[in.id_].requires_grad;
  }
  if (n.requires_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Tensor(this, static_cast<std::uint32_t>(nodes_.size() - 1));
}

void Graph::backward(Tensor root) {
  if (root.graph_ != this) throw ContractError("root from another graph");
  if (root.shape().numel() != 1) {
    throw ContractError("backward() needs a scalar root, got shape " +
                        root.shape().str());
  }
  if (backward_done_) throw ContractError("backward() already ran");
  backward_done_ = true;

  for (Node& n : nodes_) {
    if (n.requires_grad) n.grad.assign(n.value.size(), 0.0);
  }
  Node& r = nodes_[root.id_];
  if (!r.requires_grad) return;
  r.grad[0] = 1.0;

  std::vector<Node*> ins;
  for (std::size_t i = root.id_ + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.requires_grad || !n.backward) continue;
    ins.clear();
    for (std::uint8_t k = 0; k < n.num_inputs; ++k) {
      ins.push_back(&nodes_[n.inputs[k]]);
    }
    for (std::uint32_t id : n.extra_inputs) ins.push_back(&nodes_[id]);
    n.backward(n, ins.data());
  }
}

// ---------------------------------------------------------------------------
// Ops

namespace {

void same_graph(Tensor a, Tensor b, const char* op) {
  if (!a.valid() || !b.valid() || &a.graph() != &b.graph()) {
    throw ContractError(std::string(op) + ": operands from different graphs");
  }
}

bool is_scalar(const Shape& s) { return s.rank() == 0; }

enum class Bin { kAdd, kSub, kMul };

Tensor binary(Tensor a, Tensor b, Bin op, const char* name) {
  same_graph(a, b, name);
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  Shape out_shape;
  if (sa == sb) {
    out_shape = sa;
  } else if (is_scalar(sa)) {
    out_shape = sb;
  } else if (is_scalar(sb)) {
    out_shape = sa;
  } else {
    throw DimensionError(std::string(name) + ": shapes " + sa.str() + " and " +
                         sb.str() + " are not broadcast-compatible");
  }
  const bool a_bc = sa.numel() == 1 && out_shape.numel() != 1;
  const bool b_bc = sb.numel() == 1 && out_shape.numel() != 1;
  auto av = a.data();
  auto bv = b.data();
  const std::size_t n = out_shape.numel();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    double x = av[a_bc ? 0 : i];
    double y = bv[b_bc ? 0 : i];
    switch (op) {
      case Bin::kAdd: out[i] = x + y; break;
      case Bin::kSub: out[i] = x - y; break;
      case Bin::kMul: out[i] = x * y; break;
    }
  }
  return a.graph().record(
      out_shape, std::move(out), {a, b},
      [op, a_bc, b_bc](const Node& o, Node* const* in) {
        Node& na = *in[0];
        Node& nb = *in[1];
        const std::size_t n = o.value.size();
        for (std::size_t i = 0; i < n; ++i) {
          const double g = o.grad[i];
          const std::size_t ia = a_bc ? 0 : i;
          const std::size_t ib = b_bc ? 0 : i;
          switch (op) {
            case Bin::kAdd:
              if (na.requires_grad) na.grad[ia] += g;
              if (nb.requires_grad) nb.grad[ib] += g;
              break;
            case Bin::kSub:
              if (na.requires_grad) na.grad[ia] += g;
              if (nb.requires_grad) nb.grad[ib] -= g;
              break;
            case Bin::kMul:
              if (na.requires_grad) na.grad[ia] += g * nb.value[ib];
              if (nb.requires_grad) nb.grad[ib] += g * na.value[ia];
              break;
          }
        }
      },
      name);
}

}  // namespace

Tensor matmul(Tensor a, Tensor b) {
  same_graph(a, b, "matmul");
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  if (sa.rank() != 2 || sb.rank() != 2 || sa[1] != sb[0]) {
    throw DimensionError("matmul: cannot multiply " + sa.str() + " by " +
                         sb.str());
  }
  const std::size_t m = sa[0], k = sa[1], n = sb[1];
  auto av = a.data();
  auto bv = b.data();
  std::vector<double> out(m * n, 0.0);
  // i-k-j order: each output element accumulates over k in ascending order,
  // independent of m. A single row times B is bit-identical to the same row
  // inside a larger product.
  for (std::size_t i = 0; i < m; ++i) {
    double* orow = out.data() + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = av[i * k + p];
      const double* brow = bv.data() + p * n;
      for (std::size_t j = 0; j < n; ++j) orow[j] += aip * brow[j];
    }
  }
  return a.graph().record(
      Shape{m, n}, std::move(out), {a, b},
      [m, k, n](const Node& o, Node* const* in) {
        Node& na = *in[0];
        Node& nb = *in[1];
        if (na.requires_grad) {
          for (std::size_t i = 0; i < m; ++i) {
            const double* g = o.grad.data() + i * n;
            for (std::size_t p = 0; p < k; ++p) {
              const double* brow = nb.value.data() + p * n;
              double acc[4] = {0.0, 0.0, 0.0, 0.0};
              std::size_t j = 0;
              for (; j + 4 <= n; j += 4) {
                acc[0] += g[j] * brow[j];
                acc[1] += g[j + 1] * brow[j + 1];
                acc[2] += g[j + 2] * brow[j + 2];
                acc[3] += g[j + 3] * brow[j + 3];
              }
              for (; j < n; ++j) acc[0] += g[j] * brow[j];
              na.grad[i * k + p] += (acc[0] + acc[1]) + (acc[2] + acc[3]);
            }
          }
        }
        if (nb.requires_grad) {
          for (std::size_t i = 0; i < m; ++i) {
            const double* g = o.grad.data() + i * n;
            for (std::size_t p = 0; p < k; ++p) {
              const double aip = na.value[i * k + p];
              if (aip == 0.0) continue;
              double* gb = nb.grad.data() + p * n;
              for (std::size_t j = 0; j < n; ++j) gb[j] += aip * g[j];
            }
          }
        }
      },
      "matmul");
}

Tensor add(Tensor a, Tensor b) { return binary(a, b, Bin::kAdd, "add"); }
Tensor sub(Tensor a, Tensor b) { return binary(a, b, Bin::kSub, "sub"); }
Tensor mul(Tensor a, Tensor b) { return binary(a, b, Bin::kMul, "mul"); }

Tensor scale(Tensor a, double c) {
  auto av = a.data();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = c * av[i];
  return a.graph().record(
      a.shape(), std::move(out), {a},
      [c](const Node& o, Node* const* in) {
        for (std::size_t i = 0; i < o.grad.size(); ++i) {
          in[0]->grad[i] += c * o.grad[i];
        }
      },
      "scale");
}

Tensor tanh(Tensor a) {
  auto av = a.data();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = std::tanh(av[i]);
  return a.graph().record(
      a.shape(), std::move(out), {a},
      [](const Node& o, Node* const* in) {
        for (std::size_t i = 0; i < o.grad.size(); ++i) {
          const double y = o.value[i];
          in[0]->grad[i] += o.grad[i] * (1.0 - y * y);
        }
      },
      "tanh");
}

Tensor exp(Tensor a) {
  auto av = a.data();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = std::exp(av[i]);
  return a.graph().record(
      a.shape(), std::move(out), {a},
      [](const Node& o, Node* const* in) {
        for (std::size_t i = 0; i < o.grad.size(); ++i) {
          in[0]->grad[i] += o.grad[i] * o.value[i];
        }
      },
      "exp");
}

Tensor log(Tensor a) {
  auto av = a.data();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) {
    if (!(av[i] > 0.0)) {
      throw DomainError("log of non-positive value " + std::to_string(av[i]));
    }
    out[i] = std::log(av[i]);
  }
  return a.graph().record(
      a.shape(), std::move(out), {a},
      [](const Node& o, Node* const* in) {
        for (std::size_t i = 0; i < o.grad.size(); ++i) {
          in[0]->grad[i] += o.grad[i] / in[0]->value[i];
        }
      },
      "log");
}

namespace {

std::size_t last_dim(const Shape& s) {
  return s.rank() == 0 ? 1 : s[s.rank() - 1];
}

}  // namespace

Tensor softmax_log(Tensor logits) {
  const Shape s = logits.shape();
  const std::size_t n = last_dim(s);
  const std::size_t rows = s.numel() / n;
  auto x = logits.data();
  std::vector<double> out(x.size());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = x.data() + r * n;
    double mx = *std::max_element(xr, xr + n);
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) acc += std::exp(xr[j] - mx);
    const double lse = mx + std::log(acc);
    for (std::size_t j = 0; j < n; ++j) out[r * n + j] = xr[j] - lse;
  }
  return logits.graph().record(
      s, std::move(out), {logits},
      [rows, n](const Node& o, Node* const* in) {
        // d x_j = g_j - softmax_j * sum(g)
        for (std::size_t r = 0; r < rows; ++r) {
          const double* g = o.grad.data() + r * n;
          const double* y = o.value.data() + r * n;
          double gs = 0.0;
          for (std::size_t j = 0; j < n; ++j) gs += g[j];
          for (std::size_t j = 0; j < n; ++j) {
            in[0]->grad[r * n + j] += g[j] - std::exp(y[j]) * gs;
          }
        }
      },
      "softmax_log");
}

Tensor softmax_log_masked(Tensor logits, std::vector<std::uint8_t> mask) {
  const Shape s = logits.shape();
  const std::size_t rows = s.rows();
  const std::size_t n = s.cols();
  if (mask.size() != s.numel()) {
    throw DimensionError("softmax_log_masked: mask size mismatch");
  }
  auto x = logits.data();
  std::vector<double> out(x.size(), 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = x.data() + r * n;
    const std::uint8_t* mr = mask.data() + r * n;
    double mx = -INFINITY;
    for (std::size_t j = 0; j < n; ++j) {
      if (mr[j]) mx = std::max(mx, xr[j]);
    }
    if (mx == -INFINITY) {
      throw ContractError("softmax_log_masked: row " + std::to_string(r) +
                          " has no live entries");
    }
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (mr[j]) acc += std::exp(xr[j] - mx);
    }
    const double lse = mx + std::log(acc);
    for (std::size_t j = 0; j < n; ++j) {
      if (mr[j]) out[r * n + j] = xr[j] - lse;
    }
  }
  return logits.graph().record(
      s, std::move(out), {logits},
      [rows, n, mask = std::move(mask)](const Node& o, Node* const* in) {
        for (std::size_t r = 0; r < rows; ++r) {
          const double* g = o.grad.data() + r * n;
          const double* y = o.value.data() + r * n;
          const std::uint8_t* mr = mask.data() + r * n;
          double gs = 0.0;
          for (std::size_t j = 0; j < n; ++j) {
            if (mr[j]) gs += g[j];
          }
          for (std::size_t j = 0; j < n; ++j) {
            if (mr[j]) in[0]->grad[r * n + j] += g[j] - std::exp(y[j]) * gs;
          }
        }
      },
      "softmax_log_masked");
}

Tensor l2_normalize(Tensor v) {
  const Shape s = v.shape();
  const std::size_t n = last_dim(s);
  const std::size_t rows = s.numel() / n;
  auto x = v.data();
  std::vector<double> out(x.size());
  std::vector<double> norms(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    double ss = 0.0;
    for (std::size_t j = 0; j < n; ++j) ss += x[r * n + j] * x[r * n + j];
    const double nrm = std::sqrt(ss);
    if (!(nrm > kNormEpsilon)) {
      throw DegenerateVectorError("l2_normalize: row " + std::to_string(r) +
                                  " has norm " + std::to_string(nrm));
    }
    norms[r] = nrm;
    for (std::size_t j = 0; j < n; ++j) out[r * n + j] = x[r * n + j] / nrm;
  }
  return v.graph().record(
      s, std::move(out), {v},
      [rows, n, norms = std::move(norms)](const Node& o, Node* const* in) {
        // d x = (g - u (u . g)) / |x|
        for (std::size_t r = 0; r < rows; ++r) {
          const double* g = o.grad.data() + r * n;
          const double* u = o.value.data() + r * n;
          double ug = 0.0;
          for (std::size_t j = 0; j < n; ++j) ug += u[j] * g[j];
          for (std::size_t j = 0; j < n; ++j) {
            in[0]->grad[r * n + j] += (g[j] - u[j] * ug) / norms[r];
          }
        }
      },
      "l2_normalize");
}

Tensor sum(Tensor a) {
  double acc = 0.0;
  for (double x : a.data()) acc += x;
  return a.graph().record(
      Shape{}, {acc}, {a},
      [](const Node& o, Node* const* in) {
        for (double& g : in[0]->grad) g += o.grad[0];
      },
      "sum");
}

Tensor mean(Tensor a) {
  const std::size_t n = a.shape().numel();
  if (n == 0) throw ContractError("mean of empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(n));
}

Tensor reshape(Tensor a, Shape shape) {
  if (shape.numel() != a.shape().numel()) {
    throw DimensionError("reshape " + a.shape().str() + " -> " + shape.str());
  }
  return a.graph().record(
      shape, a.to_vector(), {a},
      [](const Node& o, Node* const* in) {
        for (std::size_t i = 0; i < o.grad.size(); ++i) {
          in[0]->grad[i] += o.grad[i];
        }
      },
      "reshape");
}

Tensor transpose(Tensor a) {
  const std::size_t m = a.shape().rows();
  const std::size_t n = a.shape().cols();
  auto x = a.data();
  std::vector<double> out(m * n);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) out[j * m + i] = x[i * n + j];
  }
  return a.graph().record(
      Shape{n, m}, std::move(out), {a},
      [m, n](const Node& o, Node* const* in) {
        for (std::size_t i = 0; i < m; ++i) {
          for (std::size_t j = 0; j < n; ++j) {
            in[0]->grad[i * n + j] += o.grad[j * m + i];
          }
        }
      },
      "transpose");
}

Tensor row(Tensor a, std::size_t r) { return gather_rows(a, {r}); }

Tensor gather_rows(Tensor a, std::vector<std::size_t> rows) {
  const std::size_t m = a.shape().rows();
  const std::size_t n = a.shape().cols();
  auto x = a.data();
  std::vector<double> out(rows.size() * n);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= m) {
      throw DimensionError("gather_rows: row " + std::to_string(rows[i]) +
                           " out of range for " + a.shape().str());
    }
    std::copy_n(x.data() + rows[i] * n, n, out.data() + i * n);
  }
  const std::size_t k = rows.size();
  return a.graph().record(
      Shape{k, n}, std::move(out), {a},
      [n, rows = std::move(rows)](const Node& o, Node* const* in) {
        for (std::size_t i = 0; i < rows.size(); ++i) {
          double* g = in[0]->grad.data() + rows[i] * n;
          const double* go = o.grad.data() + i * n;
          for (std::size_t j = 0; j < n; ++j) g[j] += go[j];
        }
      },
      "gather_rows");
}

Tensor concat_rows(std::span<const Tensor> parts) {
  if (parts.empty()) throw ContractError("concat_rows of nothing");
  const std::size_t n = parts[0].shape().cols();
  std::size_t total = 0;
  for (const Tensor& p : parts) {
    if (p.shape().cols() != n) {
      throw DimensionError("concat_rows: column mismatch " +
                           p.shape().str() + " vs " + parts[0].shape().str());
    }
    same_graph(p, parts[0], "concat_rows");
    total += p.shape().rows();
  }
  std::vector<double> out;
  out.reserve(total * n);
  for (const Tensor& p : parts) {
    auto d = p.data();
    out.insert(out.end(), d.begin(), d.end());
  }
  return parts[0].graph().record_variadic(
      Shape{total, n}, std::move(out), parts,
      [](const Node& o, Node* const* in) {
        std::size_t offset = 0;
        for (std::size_t k = 0; k < o.extra_inputs.size(); ++k) {
          Node& p = *in[k];
          if (p.requires_grad) {
            for (std::size_t i = 0; i < p.value.size(); ++i) {
              p.grad[i] += o.grad[offset + i];
            }
          }
          offset += p.value.size();
        }
      },
      "concat_rows");
}

Tensor repeat_rows(Tensor a, std::size_t times) {
  if (a.shape().rows() != 1) {
    throw DimensionError("repeat_rows expects a 1 x n row, got " +
                         a.shape().str());
  }
  const std::size_t n = a.shape().cols();
  auto x = a.data();
  std::vector<double> out(times * n);
  for (std::size_t i = 0; i < times; ++i) {
    std::copy_n(x.data(), n, out.data() + i * n);
  }
  return a.graph().record(
      Shape{times, n}, std::move(out), {a},
      [times, n](const Node& o, Node* const* in) {
        for (std::size_t i = 0; i < times; ++i) {
          for (std::size_t j = 0; j < n; ++j) {
            in[0]->grad[j] += o.grad[i * n + j];
          }
        }
      },
      "repeat_rows");
}

Tensor pick(Tensor a, std::vector<std::size_t> flat_indices) {
  auto x = a.data();
  std::vector<double> out(flat_indices.size());
  for (std::size_t i = 0; i < flat_indices.size(); ++i) {
    if (flat_indices[i] >= x.size()) {
      throw DimensionError("pick: index " + std::to_string(flat_indices[i]) +
                           " out of range for " + a.shape().str());
    }
    out[i] = x[flat_indices[i]];
  }
  const std::size_t k = flat_indices.size();
  return a.graph().record(
      Shape{k}, std::move(out), {a},
      [idx = std::move(flat_indices)](const Node& o, Node* const* in) {
        for (std::size_t i = 0; i < idx.size(); ++i) {
          in[0]->grad[idx[i]] += o.grad[i];
        }
      },
      "pick");
}

}  // namespace scasr::num
