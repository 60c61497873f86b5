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

// Character representation export and cluster quality metrics.

#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "scasr/corpus.hpp"
#include "scasr/model.hpp"

namespace scasr::embed {

struct EmbeddingRow {
  std::string utterance_id;
  std::string accent_id;
  std::size_t position = 0;  // character index in the text
  char letter = 'a';
  std::vector<double> h;
};

struct EmbeddingDump {
  std::size_t hidden = 0;
  std::string checkpoint_id;
  std::vector<EmbeddingRow> rows;
};

inline constexpr std::size_t kDefaultExportLimit = 100;

// Seeded sample of `limit` utterances (all of them when there are fewer),
// run teacher-forced; one row per letter position.
EmbeddingDump export_embeddings(const std::vector<corpus::Utterance>& utterances,
                                const model::ModelParams& params,
                                std::size_t limit = kDefaultExportLimit,
                                std::uint64_t seed = 0);

struct Pca2 {
  std::vector<std::array<double, 2>> points;
  std::array<std::vector<double>, 2> components;
  std::array<double, 2> variances{};  // eigenvalues of the sample covariance
};

// Mean-centred projection onto the two leading principal directions, from a
// cyclic Jacobi eigen-solve of the covariance. Each direction is flipped so
// its first nonzero component is positive.
Pca2 pca2(const EmbeddingDump& dump);
Pca2 pca2(const std::vector<std::vector<double>>& data);

struct ClusterMetrics {
  double silhouette = 0.0;
  std::map<char, double> intra_class_similarity;
  std::optional<double> cross_accent_similarity;  // none without such pairs
  std::size_t cross_accent_pairs = 0;
};

// Silhouette over letter labels with cosine distance. Points whose class has
// a single member score 0. Needs two classes with at least two rows each.
ClusterMetrics cluster_metrics(const EmbeddingDump& dump);
double silhouette(const std::vector<std::vector<double>>& x,
                  const std::vector<int>& labels);

// "# hidden=H;count=N;checkpoint=ID" then
// utterance_id,accent_id,position,letter,h0..h{H-1}.
std::string dump_csv(const EmbeddingDump& dump);
// x,y,letter,accent
std::string pca_csv(const EmbeddingDump& dump, const Pca2& pca);

}  // namespace scasr::embed
