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

#include "scasr/model.hpp"

#include <cmath>

#include "scasr/errors.hpp"
#include "scasr/io.hpp"
#include "scasr/rng.hpp"

namespace scasr::model {

using num::Graph;
using num::Shape;
using num::Tensor;

void ModelConfig::validate() const {
  if (dim == 0) throw ConfigError("model.dim: must be positive");
  if (hidden == 0) throw ConfigError("model.hidden: must be positive");
  if (embed == 0) throw ConfigError("model.embed: must be positive");
  if (proj == 0) throw ConfigError("model.proj: must be positive");
  if (vocab != vocab::kSize) {
    throw ConfigError("model.vocab: must be " + std::to_string(vocab::kSize));
  }
}

namespace {

struct Spec {
  const char* name;
  std::size_t rows, cols, fan_in;
};

std::vector<Spec> specs(const ModelConfig& c) {
  const std::size_t D = c.dim, H = c.hidden, E = c.embed, P = c.proj,
                    V = c.vocab;
  return {
      {"enc.wx", D, H, D},      {"enc.wh", H, H, H},
      {"enc.b", 1, H, D + H},   {"dec.emb", V, E, V},
      {"dec.we", E, H, E},      {"dec.wc", H, H, H},
      {"dec.ws", H, H, H},      {"dec.b", 1, H, E + 2 * H},
      {"asr.w", H, V, H},       {"asr.b", 1, V, H},
      {"con.w", H, P, H},       {"con.b", 1, P, H},
  };
}

}  // namespace

std::size_t ModelParams::count() const {
  std::size_t n = 0;
  for (const auto& t : tensors) n += t.value.data.size();
  return n;
}

std::string ModelParams::hash() const {
  return io::hex64(io::fnv1a(serialize(*this)));
}

std::size_t param_count(const ModelConfig& c) {
  const std::size_t D = c.dim, H = c.hidden, E = c.embed, P = c.proj,
                    V = c.vocab;
  return (D * H + H * H + H) + (V * E + E * H + 2 * H * H + H) +
         (H * V + V) + (H * P + P);
}

ModelParams zero_params(const ModelConfig& config) {
  config.validate();
  ModelParams p;
  p.config = config;
  for (const auto& s : specs(config)) {
    p.tensors.push_back({s.name, s.fan_in, Matrix(s.rows, s.cols)});
  }
  return p;
}

ModelParams init_params(const ModelConfig& config, std::uint64_t seed) {
  ModelParams p = zero_params(config);
  for (std::size_t i = 0; i < p.tensors.size(); ++i) {
    auto& t = p.tensors[i];
    Rng rng(derive_seed(seed, t.name));
    const double s = 1.0 / std::sqrt(static_cast<double>(t.fan_in));
    std::uniform_real_distribution<double> u(-s, s);
    for (double& x : t.value.data) x = u(rng);
  }
  return p;
}

BoundParams bind(Graph& g, const ModelParams& params, bool trainable) {
  BoundParams b;
  b.t.reserve(params.tensors.size());
  for (const auto& t : params.tensors) {
    Shape s{t.value.rows, t.value.cols};
    b.t.push_back(trainable ? g.variable(s, t.value.data)
                            : g.constant(s, t.value.data));
  }
  return b;
}

std::vector<std::vector<double>> collect_grads(const BoundParams& bound) {
  std::vector<std::vector<double>> out;
  out.reserve(bound.t.size());
  for (const auto& t : bound.t) {
    auto g = t.grad();
    out.emplace_back(g.begin(), g.end());
  }
  return out;
}

Tensor frames_tensor(Graph& g, const Matrix& frames) {
  return g.constant(Shape{frames.rows, frames.cols}, frames.data);
}

Tensor encode(const BoundParams& p, Tensor frames) {
  const std::size_t T = frames.shape().rows();
  if (T == 0) throw ContractError("encode: need at least one frame");
  Graph& g = frames.graph();
  const std::size_t H = p[kEncWh].shape().rows();
  Tensor xw = num::matmul(frames, p[kEncWx]);
  Tensor h = g.constant(Shape{1, H}, std::vector<double>(H, 0.0));
  std::vector<Tensor> states;
  states.reserve(T);
  for (std::size_t t = 0; t < T; ++t) {
    Tensor pre = num::add(num::add(num::row(xw, t), num::matmul(h, p[kEncWh])),
                          p[kEncB]);
    h = num::tanh(pre);
    states.push_back(h);
  }
  return num::concat_rows(states);
}

EncoderCache make_cache(Tensor encoder_states) {
  return {encoder_states, num::transpose(encoder_states)};
}

Tensor initial_state(Graph& g, const ModelConfig& config) {
  return g.constant(Shape{1, config.hidden},
                    std::vector<double>(config.hidden, 0.0));
}

Tensor decoder_cell(const BoundParams& p, const EncoderCache& enc,
                    int prev_token, Tensor state) {
  if (prev_token < 0 || prev_token >= vocab::kSize) {
    throw VocabularyError("token " + std::to_string(prev_token) +
                          " out of vocabulary");
  }
  Tensor scores = num::matmul(state, enc.states_t);  // 1 x T
  Tensor attn = num::exp(num::softmax_log(scores));
  Tensor context = num::matmul(attn, enc.states);  // 1 x H
  Tensor emb = num::row(p[kDecEmb], static_cast<std::size_t>(prev_token));
  Tensor pre = num::add(num::matmul(emb, p[kDecWe]),
                        num::matmul(context, p[kDecWc]));
  pre = num::add(pre, num::matmul(state, p[kDecWs]));
  pre = num::add(pre, p[kDecB]);
  return num::tanh(pre);
}

StepResult decode_step(const BoundParams& p, const EncoderCache& enc,
                       int prev_token, Tensor state) {
  StepResult r;
  r.h = decoder_cell(p, enc, prev_token, state);
  r.logprobs = num::softmax_log(
      num::add(num::matmul(r.h, p[kAsrW]), num::repeat_rows(p[kAsrB], 1)));
  r.proj = num::add(num::matmul(r.h, p[kConW]), num::repeat_rows(p[kConB], 1));
  return r;
}

ForwardResult forward_teacher_forced(const BoundParams& p, Tensor frames,
                                     const std::vector<int>& target) {
  if (target.size() < 2 || target.front() != vocab::kSos ||
      target.back() != vocab::kEos) {
    throw ContractError("forward_teacher_forced: target must be SOS ... EOS");
  }
  for (int tok : target) {
    if (tok < 0 || tok >= vocab::kSize) {
      throw VocabularyError("target token " + std::to_string(tok) +
                            " out of vocabulary");
    }
  }
  Graph& g = frames.graph();
  const std::size_t H = p[kEncWh].shape().rows();
  EncoderCache enc = make_cache(encode(p, frames));
  Tensor state = g.constant(Shape{1, H}, std::vector<double>(H, 0.0));
  const std::size_t L = target.size() - 1;
  std::vector<Tensor> hs;
  hs.reserve(L);
  for (std::size_t i = 1; i <= L; ++i) {
    state = decoder_cell(p, enc, target[i - 1], state);
    hs.push_back(state);
  }
  ForwardResult r;
  r.length = L;
  r.h = num::concat_rows(hs);
  r.asr_logprobs = num::softmax_log(
      num::add(num::matmul(r.h, p[kAsrW]), num::repeat_rows(p[kAsrB], L)));
  r.proj = num::add(num::matmul(r.h, p[kConW]), num::repeat_rows(p[kConB], L));
  return r;
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {
constexpr char kMagic[8] = {'S', 'C', 'A', 'S', 'R', 'C', 'K', 'P'};
}

std::string serialize(const ModelParams& params) {
  io::ByteWriter w;
  w.raw(kMagic, sizeof kMagic);
  w.u32(kCheckpointVersion);
  const auto& c = params.config;
  for (std::size_t v : {c.dim, c.hidden, c.embed, c.proj, c.vocab}) {
    w.u32(static_cast<std::uint32_t>(v));
  }
  w.u32(static_cast<std::uint32_t>(params.tensors.size()));
  for (const auto& t : params.tensors) {
    w.str(t.name);
    w.u32(static_cast<std::uint32_t>(t.value.rows));
    w.u32(static_cast<std::uint32_t>(t.value.cols));
    w.f64s(t.value.data);
  }
  return w.bytes();
}

ModelParams deserialize(const std::string& bytes, const std::string& source) {
  io::ByteReader r(bytes, source);
  if (r.raw(sizeof kMagic) != std::string(kMagic, sizeof kMagic)) {
    throw LoadError(source + ": not a checkpoint");
  }
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw LoadError(source + ": unsupported checkpoint version " +
                    std::to_string(version));
  }
  ModelConfig c;
  c.dim = r.u32();
  c.hidden = r.u32();
  c.embed = r.u32();
  c.proj = r.u32();
  c.vocab = r.u32();
  ModelParams p = zero_params(c);
  const std::uint32_t n = r.u32();
  if (n != p.tensors.size()) {
    throw LoadError(source + ": expected " + std::to_string(p.tensors.size()) +
                    " matrices, found " + std::to_string(n));
  }
  for (auto& t : p.tensors) {
    const std::string name = r.str();
    const std::size_t rows = r.u32();
    const std::size_t cols = r.u32();
    if (name != t.name) {
      throw LoadError(source + ": expected matrix " + t.name + ", found " +
                      name);
    }
    if (rows != t.value.rows || cols != t.value.cols) {
      throw LoadError(source + ": matrix " + name + " is " +
                      std::to_string(rows) + "x" + std::to_string(cols) +
                      " but its header dims imply " +
                      std::to_string(t.value.rows) + "x" +
                      std::to_string(t.value.cols));
    }
    t.value.data = r.f64s(rows * cols);
  }
  if (!r.done()) throw LoadError(source + ": trailing bytes");
  return p;
}

void save_checkpoint(const ModelParams& params,
                     const std::filesystem::path& path) {
  io::write_file(path, serialize(params));
}

ModelParams load_checkpoint(const std::filesystem::path& path) {
  return deserialize(io::read_file(path), path.string());
}

ModelParams load_checkpoint(const std::filesystem::path& path,
                            const ModelConfig& expected) {
  ModelParams p = load_checkpoint(path);
  ModelParams want = zero_params(expected);
  for (std::size_t i = 0; i < want.tensors.size(); ++i) {
    const auto& a = p.tensors[i].value;
    const auto& b = want.tensors[i].value;
    if (a.rows != b.rows || a.cols != b.cols) {
      throw LoadError(path.string() + ": matrix " + want.tensors[i].name +
                      " is " + std::to_string(a.rows) + "x" +
                      std::to_string(a.cols) + ", config expects " +
                      std::to_string(b.rows) + "x" + std::to_string(b.cols));
    }
  }
  return p;
}

}  // namespace scasr::model
