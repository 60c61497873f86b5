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

#include "scasr/contrast.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "scasr/errors.hpp"
#include "scasr/rng.hpp"
#include "scasr/vocab.hpp"

namespace scasr::contrast {

using num::Graph;
using num::Shape;
using num::Tensor;

std::vector<double> CharEmbedding::normalized() const {
  double ss = 0.0;
  for (double x : y) ss += x * x;
  const double n = std::sqrt(ss);
  if (!(n > num::kNormEpsilon)) {
    throw DegenerateVectorError("character embedding has zero norm");
  }
  std::vector<double> out(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) out[i] = y[i] / n;
  return out;
}

PairBatch mine_pairs(std::span<const int> labels, std::size_t cap_per_class,
                     std::uint64_t seed) {
  PairBatch b;
  std::array<std::vector<std::size_t>, vocab::kNumLetters> members;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (!vocab::is_letter(labels[i])) continue;
    members[labels[i]].push_back(b.candidates.size());
    b.candidates.push_back(i);
    b.labels.push_back(labels[i]);
  }
  Rng rng(seed);
  for (int letter = 0; letter < vocab::kNumLetters; ++letter) {
    const auto& idx = members[letter];
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t i = 0; i < idx.size(); ++i) {
      for (std::size_t j = i + 1; j < idx.size(); ++j) {
        pairs.emplace_back(idx[i], idx[j]);
      }
    }
    if (pairs.size() > cap_per_class) {
      // Partial Fisher-Yates: the first cap entries are a uniform sample.
      for (std::size_t i = 0; i < cap_per_class; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, pairs.size() - 1);
        std::swap(pairs[i], pairs[pick(rng)]);
      }
      pairs.resize(cap_per_class);
      std::sort(pairs.begin(), pairs.end());
    }
    b.positive_pairs.insert(b.positive_pairs.end(), pairs.begin(), pairs.end());
  }
  return b;
}

PairBatch mine_pairs(std::span<const CharEmbedding> embeddings,
                     std::size_t cap_per_class, std::uint64_t seed) {
  std::vector<int> labels;
  labels.reserve(embeddings.size());
  for (const auto& e : embeddings) labels.push_back(e.label);
  return mine_pairs(labels, cap_per_class, seed);
}

namespace {

void check_tau(double tau) {
  if (!(tau > 0.0)) throw ContractError("temperature must be positive");
}

std::vector<std::uint8_t> off_diagonal_mask(std::size_t m) {
  std::vector<std::uint8_t> mask(m * m, 1);
  for (std::size_t i = 0; i < m; ++i) mask[i * m + i] = 0;
  return mask;
}

}  // namespace

Tensor similarity_logits(Tensor y, double tau) {
  check_tau(tau);
  Tensor u = num::l2_normalize(y);
  return num::scale(num::matmul(u, num::transpose(u)), 1.0 / tau);
}

Tensor contrastive_pair_loss(Tensor y, std::size_t anchor, std::size_t positive,
                             double tau) {
  const std::size_t m = y.shape().rows();
  if (m < 2) throw InsufficientBatchError("need at least 2 candidates");
  if (anchor >= m || positive >= m) {
    throw ContractError("pair index out of range");
  }
  if (anchor == positive) throw ContractError("anchor equals positive");
  Tensor s = similarity_logits(y, tau);
  std::vector<std::uint8_t> mask(m, 1);
  mask[anchor] = 0;
  Tensor lsm = num::softmax_log_masked(num::row(s, anchor), std::move(mask));
  return num::scale(num::sum(num::pick(lsm, {positive})), -1.0);
}

ContrastiveTerm contrastive_loss(Tensor y, const PairBatch& batch, double tau) {
  check_tau(tau);
  ContrastiveTerm out;
  const std::size_t m = y.shape().rows();
  if (m != batch.size()) {
    throw DimensionError("contrastive_loss: " + std::to_string(m) +
                         " rows for " + std::to_string(batch.size()) +
                         " candidates");
  }
  if (batch.positive_pairs.empty()) {
    out.loss = y.graph().scalar(0.0);
    out.empty = true;
    return out;
  }
  if (m < 2) throw InsufficientBatchError("need at least 2 candidates");
  Tensor lsm = num::softmax_log_masked(similarity_logits(y, tau),
                                       off_diagonal_mask(m));
  std::vector<std::size_t> picks;
  picks.reserve(2 * batch.positive_pairs.size());
  for (auto [a, b] : batch.positive_pairs) {
    picks.push_back(a * m + b);
    picks.push_back(b * m + a);
  }
  out.anchored_terms = picks.size();
  out.loss = num::scale(num::mean(num::pick(lsm, std::move(picks))), -1.0);
  return out;
}

namespace {

Tensor stack_embeddings(Graph& g, std::span<const CharEmbedding> c) {
  if (c.empty()) throw InsufficientBatchError("no candidates");
  const std::size_t p = c[0].y.size();
  std::vector<double> flat;
  flat.reserve(c.size() * p);
  for (const auto& e : c) {
    if (e.y.size() != p) throw DimensionError("ragged candidate embeddings");
    flat.insert(flat.end(), e.y.begin(), e.y.end());
  }
  return g.constant(Shape{c.size(), p}, std::move(flat));
}

}  // namespace

double contrastive_pair_loss(std::span<const CharEmbedding> candidates,
                             std::size_t anchor, std::size_t positive,
                             double tau) {
  if (candidates.size() < 2) {
    throw InsufficientBatchError("need at least 2 candidates");
  }
  Graph g;
  return contrastive_pair_loss(stack_embeddings(g, candidates), anchor,
                               positive, tau)
      .item();
}

double contrastive_loss(std::span<const CharEmbedding> candidates,
                        const PairBatch& batch, double tau, bool* empty) {
  Graph g;
  std::vector<CharEmbedding> picked;
  picked.reserve(batch.candidates.size());
  for (std::size_t i : batch.candidates) picked.push_back(candidates[i]);
  if (picked.empty()) {
    if (empty) *empty = true;
    return 0.0;
  }
  ContrastiveTerm t = contrastive_loss(stack_embeddings(g, picked), batch, tau);
  if (empty) *empty = t.empty;
  return t.loss.item();
}

Tensor asr_loss(Tensor asr_logprobs, const std::vector<int>& target) {
  const std::size_t L = asr_logprobs.shape().rows();
  const std::size_t V = asr_logprobs.shape().cols();
  if (target.size() != L + 1) {
    throw ContractError("asr_loss: " + std::to_string(L) +
                        " output rows for a target of length " +
                        std::to_string(target.size()));
  }
  std::vector<std::size_t> picks;
  picks.reserve(L);
  for (std::size_t i = 0; i < L; ++i) {
    const int tok = target[i + 1];
    if (tok == vocab::kPad) continue;
    if (tok < 0 || static_cast<std::size_t>(tok) >= V) {
      throw VocabularyError("target token " + std::to_string(tok));
    }
    picks.push_back(i * V + static_cast<std::size_t>(tok));
  }
  return num::scale(num::sum(num::pick(asr_logprobs, std::move(picks))),
                    -1.0 / static_cast<double>(L));
}

Tensor total_loss(Tensor asr, Tensor con, double alpha) {
  return num::add(asr, num::scale(con, alpha));
}

}  // namespace scasr::contrast
