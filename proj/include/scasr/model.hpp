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

// Attention encoder-decoder over feature frames.
//
//   encoder   e_t = tanh(x_t Wx + e_{t-1} Wh + b)           e_0 = 0
//   attention a   = softmax(s_{i-1} E^T),  c_i = a E
//   decoder   s_i = tanh(emb[y_{i-1}] We + c_i Wc + s_{i-1} Ws + b)   s_0 = 0
//   heads     logP = log_softmax(s_i G + g),  y = s_i F + f
//
// s_i is the per-character representation h shared by the recognition head
// (G, g) and the projection head (F, f). Weights are stored input x output so
// every product is row-vector times matrix.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "scasr/matrix.hpp"
#include "scasr/tensor.hpp"
#include "scasr/vocab.hpp"

namespace scasr::model {

struct ModelConfig {
  std::size_t dim = 20;     // D, input feature size
  std::size_t hidden = 64;  // H
  std::size_t embed = 32;   // E
  std::size_t proj = 16;    // P
  std::size_t vocab = vocab::kSize;

  void validate() const;
  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

enum Param : std::size_t {
  kEncWx, kEncWh, kEncB,
  kDecEmb, kDecWe, kDecWc, kDecWs, kDecB,
  kAsrW, kAsrB,
  kConW, kConB,
  kNumParams
};

struct NamedMatrix {
  std::string name;
  std::size_t fan_in = 1;
  Matrix value;
  friend bool operator==(const NamedMatrix&, const NamedMatrix&) = default;
};

struct ModelParams {
  ModelConfig config;
  std::vector<NamedMatrix> tensors;  // indexed by Param

  const Matrix& operator[](Param p) const { return tensors[p].value; }
  Matrix& operator[](Param p) { return tensors[p].value; }
  std::size_t count() const;
  // Hash of the serialized checkpoint bytes.
  std::string hash() const;
  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

// All-zero parameters with the right names and shapes.
ModelParams zero_params(const ModelConfig& config);
// Uniform(-s, s), s = 1 / sqrt(fan_in) per matrix. A bias takes the fan-in
// of the whole cell it feeds.
ModelParams init_params(const ModelConfig& config, std::uint64_t seed);
// Closed-form parameter count for a config.
std::size_t param_count(const ModelConfig& config);

// Parameters placed on a graph, as variables or constants.
struct BoundParams {
  std::vector<num::Tensor> t;
  const num::Tensor& operator[](Param p) const { return t[p]; }
};
BoundParams bind(num::Graph& g, const ModelParams& params, bool trainable);
// Gradients of every bound parameter after Graph::backward().
std::vector<std::vector<double>> collect_grads(const BoundParams& bound);

num::Tensor frames_tensor(num::Graph& g, const Matrix& frames);

// Encoder states T x H.
num::Tensor encode(const BoundParams& p, num::Tensor frames);

struct EncoderCache {
  num::Tensor states;     // T x H
  num::Tensor states_t;   // H x T
};
EncoderCache make_cache(num::Tensor encoder_states);

struct StepResult {
  num::Tensor h;          // 1 x H, also the new decoder state
  num::Tensor logprobs;   // 1 x V
  num::Tensor proj;       // 1 x P
};

num::Tensor initial_state(num::Graph& g, const ModelConfig& config);
// One decoder recurrence (attention + cell), no heads.
num::Tensor decoder_cell(const BoundParams& p, const EncoderCache& enc,
                         int prev_token, num::Tensor state);
// Recurrence plus both heads. Throws VocabularyError for bad tokens.
StepResult decode_step(const BoundParams& p, const EncoderCache& enc,
                       int prev_token, num::Tensor state);

struct ForwardResult {
  num::Tensor h;             // L x H
  num::Tensor asr_logprobs;  // L x V
  num::Tensor proj;          // L x P
  std::size_t length = 0;    // L = len(target) - 1
};

// Teacher-forced pass: step i consumes target[i-1] and predicts target[i].
ForwardResult forward_teacher_forced(const BoundParams& p, num::Tensor frames,
                                     const std::vector<int>& target);

// Checkpoint: "SCASRCKP", u32 version, u32 D H E P V, u32 count, then per
// matrix: u32-length name, u32 rows, u32 cols, rows*cols LE doubles.
inline constexpr std::uint32_t kCheckpointVersion = 1;
std::string serialize(const ModelParams& params);
ModelParams deserialize(const std::string& bytes, const std::string& source);
void save_checkpoint(const ModelParams& params, const std::filesystem::path& path);
ModelParams load_checkpoint(const std::filesystem::path& path);
// Load and check against the expected dims; mismatches name the matrix.
ModelParams load_checkpoint(const std::filesystem::path& path,
                            const ModelConfig& expected);

}  // namespace scasr::model
