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

// Synthetic accented "speech". Every renderable character has a unit-norm
// prototype vector; an accent is an affine map x -> A x + b applied to every
// prototype it speaks, with A = I + strength * R. An utterance is the
// sequence of per-character frame runs plus noise, with two noise-only frames
// between words.

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "scasr/matrix.hpp"
#include "scasr/vocab.hpp"

namespace scasr::corpus {

using Prototypes = std::array<std::vector<double>, vocab::kNumRenderable>;

struct AccentProfile {
  std::string id;
  double strength = 0.0;
  Matrix transform;          // D x D
  std::vector<double> bias;  // D
  int min_duration = 3;
  int max_duration = 5;
  std::uint64_t seed = 0;
};

struct Utterance {
  std::string id;
  std::string accent_id;
  std::string split;  // train | validation | test
  std::string text;
  Matrix frames;  // T x D
  std::vector<int> target;  // SOS ... EOS
};

struct CorpusConfig {
  std::size_t dim = 20;
  std::size_t lexicon_size = 50;
  int word_min_len = 2;
  int word_max_len = 7;
  int sentence_min_words = 2;
  int sentence_max_words = 4;
  // Fraction of lexicon words that carry one apostrophe or hyphen.
  double punctuation_rate = 0.1;
  std::size_t train_accents = 5;
  std::size_t val_accents = 3;
  std::size_t test_accents = 5;
  std::size_t train_per_accent = 400;
  std::size_t val_per_accent = 100;
  std::size_t test_per_accent = 120;
  double train_strength = 0.3;
  double val_strength = 0.45;
  double test_strength = 0.45;
  double bias_scale = 0.5;
  int min_duration = 3;
  int max_duration = 5;
  double noise_sigma = 0.05;
  std::uint64_t seed = 1;
  std::size_t threads = 1;

  void validate() const;  // throws ConfigError
};

struct CorpusSplit {
  CorpusConfig config;
  Prototypes prototypes;
  std::vector<std::string> lexicon;
  std::vector<AccentProfile> accents;  // train, then validation, then test
  std::vector<std::string> train_accents;
  std::vector<std::string> val_accents;
  std::vector<std::string> test_accents;
  std::vector<Utterance> train;
  std::vector<Utterance> validation;
  std::vector<Utterance> test;

  const AccentProfile& accent(const std::string& id) const;
  const std::vector<Utterance>& split(const std::string& name) const;
};

// 29 unit-norm prototypes with pairwise cosine below 0.9. Throws
// GenerationError after 100 failed redraws.
Prototypes build_prototypes(std::uint64_t seed, std::size_t dim);

// A = I + strength * R, R Gaussian scaled to unit spectral norm (power
// iteration estimate); R is redrawn until cond(A) < 1e6.
AccentProfile make_accent(std::string id, std::size_t dim, double strength,
                          double bias_scale, int min_duration,
                          int max_duration, std::uint64_t seed);
AccentProfile identity_accent(std::size_t dim, int min_duration,
                              int max_duration);

Utterance render_utterance(const std::string& text, const AccentProfile& accent,
                           const Prototypes& prototypes, double noise_sigma,
                           std::uint64_t seed);

CorpusSplit generate_corpus(const CorpusConfig& config);

// The reserved voice used for same-sentence re-rendering. Its seed stream is
// disjoint from every corpus accent.
AccentProfile reserved_voice(const CorpusConfig& config, double strength);

// Root-mean-square over every frame cell.
double frame_rms(const std::vector<Utterance>& utterances);

// Estimated largest singular value by power iteration on M^T M.
double spectral_norm_estimate(const Matrix& m, int iterations = 100);
double condition_number(const Matrix& m);

// On-disk layout: <dir>/manifest.jsonl plus <dir>/frames/<id>.f64. Frames
// files carry a 3 x uint32 header (T, D, version) followed by T*D
// little-endian doubles.
inline constexpr std::uint32_t kFramesVersion = 1;
void write_frames(const std::filesystem::path& path, const Matrix& frames);
Matrix read_frames(const std::filesystem::path& path);

void write_corpus(const CorpusSplit& corpus, const std::filesystem::path& dir);
// Loads utterances from a manifest. Prototypes, lexicon and accent profiles
// are regenerated from config, which must match the one used to write.
CorpusSplit load_corpus(const std::filesystem::path& dir,
                        const CorpusConfig& config);
// Hash over the manifest text and every frames file, in manifest order.
std::string corpus_hash(const std::filesystem::path& dir);

}  // namespace scasr::corpus
