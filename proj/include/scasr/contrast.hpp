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

// Supervised contrastive loss over character representations.
//
// Candidates are the projected representations of every letter position in
// a batch, across all views. Two candidates with the same letter form a
// positive pair. For an anchor n and positive m:
//
//   l(n, m) = -log( exp(s_nm / tau) / sum_{k != n} exp(s_nk / tau) )
//
// with s the cosine similarity. The batch loss averages l over both
// orientations of every mined pair.

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "scasr/augment.hpp"
#include "scasr/tensor.hpp"

namespace scasr::contrast {

inline constexpr double kDefaultTau = 0.07;
inline constexpr std::size_t kDefaultPairCap = 20;

struct CharEmbedding {
  std::vector<double> y;  // raw projection
  int label = 0;
  std::string utterance_id;
  augment::ViewTag view_tag = augment::ViewTag::kOriginal;
  std::size_t position = 0;

  std::vector<double> normalized() const;
};

struct PairBatch {
  // Indices into the mined input list; only letter-labelled entries.
  std::vector<std::size_t> candidates;
  std::vector<int> labels;  // per candidate
  // Unordered pairs of candidate indices, first < second.
  std::vector<std::pair<std::size_t, std::size_t>> positive_pairs;

  std::size_t size() const { return candidates.size(); }
};

// All same-letter pairs, downsampled uniformly (seeded) to cap_per_class
// pairs per letter when a letter has more.
PairBatch mine_pairs(std::span<const int> labels, std::size_t cap_per_class,
                     std::uint64_t seed);
PairBatch mine_pairs(std::span<const CharEmbedding> embeddings,
                     std::size_t cap_per_class, std::uint64_t seed);

// Graph versions. `y` is M x P, one raw projection per candidate row.
num::Tensor similarity_logits(num::Tensor y, double tau);
num::Tensor contrastive_pair_loss(num::Tensor y, std::size_t anchor,
                                  std::size_t positive, double tau);

struct ContrastiveTerm {
  num::Tensor loss;      // scalar
  bool empty = false;    // no positive pairs; loss is a constant 0
  std::size_t anchored_terms = 0;
};
ContrastiveTerm contrastive_loss(num::Tensor y, const PairBatch& batch,
                                 double tau);

// Value versions over plain embeddings; candidates must be in batch order.
double contrastive_pair_loss(std::span<const CharEmbedding> candidates,
                             std::size_t anchor, std::size_t positive,
                             double tau);
double contrastive_loss(std::span<const CharEmbedding> candidates,
                        const PairBatch& batch, double tau, bool* empty = nullptr);

// Mean negative log-likelihood per target position after SOS (through EOS),
// PAD positions skipped.
num::Tensor asr_loss(num::Tensor asr_logprobs, const std::vector<int>& target);

num::Tensor total_loss(num::Tensor asr, num::Tensor con, double alpha);

struct LossValues {
  double asr = 0.0;
  double con = 0.0;
  double total = 0.0;
  double alpha = 0.0;
  std::size_t pair_count = 0;
  bool con_computed = false;
  bool no_positives = false;
};

}  // namespace scasr::contrast
