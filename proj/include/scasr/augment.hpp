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

// View builders for contrastive training: additive noise, spectrogram-style
// band/span masking and same-sentence re-rendering through a reserved voice.

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "scasr/corpus.hpp"
#include "scasr/matrix.hpp"
#include "scasr/rng.hpp"

namespace scasr::augment {

enum class ViewTag { kOriginal, kNoise, kSpecAug, kAltVoice, kCombined };

std::string_view tag_name(ViewTag tag);

struct AugmentConfig {
  double noise_prob = 0.5;
  double noise_scale = 0.3;  // fraction of corpus frame RMS
  double specaug_prob = 0.25;
  int freq_mask_width = 4;
  int time_mask_width = 4;
  double altvoice_prob = 0.5;
  double altvoice_strength = 0.3;

  // Throws ConfigError; dim is the feature dimension D.
  void validate(std::size_t dim) const;
};

// Named augmentation sets used by the experiment grid: none, noise, specaug,
// altvoice, all. Methods not in the set get probability 0.
AugmentConfig select_methods(const AugmentConfig& base, std::string_view set);
bool is_augmentation_set(std::string_view set);

struct View {
  Matrix frames;
  std::string source_utterance_id;
  ViewTag tag = ViewTag::kOriginal;
  std::vector<int> target;
  bool noised = false;
  bool masked = false;
  bool altvoice = false;
};

// Everything make_views needs besides the utterance.
struct ViewContext {
  const corpus::Prototypes* prototypes = nullptr;
  const corpus::AccentProfile* voice = nullptr;
  double frame_rms = 1.0;
  double noise_sigma = 0.05;
};

Matrix inject_noise(const Matrix& frames, double scale, double rms, Rng& rng);

// One feature band and one time span, each of uniform width in
// [0, max width] at a uniform offset, set to zero. The time width is capped
// at T - 1 for very short inputs.
Matrix spec_augment(const Matrix& frames, const AugmentConfig& cfg, Rng& rng);

View altvoice_render(const corpus::Utterance& utterance,
                     const corpus::AccentProfile& voice,
                     const corpus::Prototypes& prototypes, double noise_sigma,
                     std::uint64_t seed);

// Always returns the untouched original first. A noise/specaug copy of the
// original is added when either draw fires, and an alternate-voice view with
// probability altvoice_prob; noise and specaug are drawn independently for
// each copy.
std::vector<View> make_views(const corpus::Utterance& utterance,
                             const AugmentConfig& cfg, const ViewContext& ctx,
                             std::uint64_t seed);

}  // namespace scasr::augment
