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

#include "scasr/augment.hpp"

#include <algorithm>

#include "scasr/errors.hpp"

namespace scasr::augment {

std::string_view tag_name(ViewTag tag) {
  switch (tag) {
    case ViewTag::kOriginal: return "original";
    case ViewTag::kNoise: return "noise";
    case ViewTag::kSpecAug: return "specaug";
    case ViewTag::kAltVoice: return "altvoice";
    case ViewTag::kCombined: return "combined";
  }
  return "?";
}

void AugmentConfig::validate(std::size_t dim) const {
  auto prob = [](double p, const char* key) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw ConfigError(std::string("augment.") + key + ": must be in [0, 1]");
    }
  };
  prob(noise_prob, "noise_prob");
  prob(specaug_prob, "specaug_prob");
  prob(altvoice_prob, "altvoice_prob");
  if (!(noise_scale >= 0.0)) throw ConfigError("augment.noise_scale: must be >= 0");
  if (freq_mask_width < 0 || static_cast<std::size_t>(freq_mask_width) >= dim) {
    throw ConfigError("augment.freq_mask_width: must be in [0, D)");
  }
  if (time_mask_width < 0) {
    throw ConfigError("augment.time_mask_width: must be >= 0");
  }
  if (!(altvoice_strength >= 0.0)) {
    throw ConfigError("augment.altvoice_strength: must be >= 0");
  }
}

bool is_augmentation_set(std::string_view set) {
  return set == "none" || set == "noise" || set == "specaug" ||
         set == "altvoice" || set == "all";
}

AugmentConfig select_methods(const AugmentConfig& base, std::string_view set) {
  if (!is_augmentation_set(set)) {
    throw ConfigError("unknown augmentation set '" + std::string(set) + "'");
  }
  AugmentConfig cfg = base;
  const bool all = set == "all";
  if (!all && set != "noise") cfg.noise_prob = 0.0;
  if (!all && set != "specaug") cfg.specaug_prob = 0.0;
  if (!all && set != "altvoice") cfg.altvoice_prob = 0.0;
  return cfg;
}

Matrix inject_noise(const Matrix& frames, double scale, double rms, Rng& rng) {
  Matrix out = frames;
  if (scale == 0.0) return out;
  std::normal_distribution<double> normal(0.0, 1.0);
  const double s = scale * rms;
  for (double& x : out.data) x += s * normal(rng);
  return out;
}

Matrix spec_augment(const Matrix& frames, const AugmentConfig& cfg, Rng& rng) {
  Matrix out = frames;
  const int dim = static_cast<int>(frames.cols);
  const int len = static_cast<int>(frames.rows);
  const int fmax = std::min(cfg.freq_mask_width, std::max(dim - 1, 0));
  const int tmax = std::min(cfg.time_mask_width, std::max(len - 1, 0));

  const int fw = uniform_int(rng, 0, fmax);
  const int f0 = uniform_int(rng, 0, dim - fw);
  const int tw = uniform_int(rng, 0, tmax);
  const int t0 = uniform_int(rng, 0, len - tw);
  for (int t = 0; t < len; ++t) {
    for (int f = f0; f < f0 + fw; ++f) out(t, f) = 0.0;
  }
  for (int t = t0; t < t0 + tw; ++t) {
    for (int f = 0; f < dim; ++f) out(t, f) = 0.0;
  }
  return out;
}

View altvoice_render(const corpus::Utterance& utterance,
                     const corpus::AccentProfile& voice,
                     const corpus::Prototypes& prototypes, double noise_sigma,
                     std::uint64_t seed) {
  corpus::Utterance re =
      corpus::render_utterance(utterance.text, voice, prototypes, noise_sigma,
                               seed);
  View v;
  v.frames = std::move(re.frames);
  v.source_utterance_id = utterance.id;
  v.tag = ViewTag::kAltVoice;
  v.target = utterance.target;
  v.altvoice = true;
  return v;
}

namespace {

void apply_corruptions(View& v, bool noise, bool mask,
                       const AugmentConfig& cfg, const ViewContext& ctx,
                       Rng& rng) {
  if (noise) {
    v.frames = inject_noise(v.frames, cfg.noise_scale, ctx.frame_rms, rng);
    v.noised = true;
  }
  if (mask) {
    v.frames = spec_augment(v.frames, cfg, rng);
    v.masked = true;
  }
  const int kinds = int(v.noised) + int(v.masked) + int(v.altvoice);
  if (kinds > 1) {
    v.tag = ViewTag::kCombined;
  } else if (v.noised) {
    v.tag = ViewTag::kNoise;
  } else if (v.masked) {
    v.tag = ViewTag::kSpecAug;
  }
}

}  // namespace

std::vector<View> make_views(const corpus::Utterance& utterance,
                             const AugmentConfig& cfg, const ViewContext& ctx,
                             std::uint64_t seed) {
  Rng rng(seed);
  // All decisions first, so the decision stream does not depend on what the
  // transforms consume.
  const bool copy_noise = bernoulli(rng, cfg.noise_prob);
  const bool copy_mask = bernoulli(rng, cfg.specaug_prob);
  const bool alt = bernoulli(rng, cfg.altvoice_prob);
  const bool alt_noise = bernoulli(rng, cfg.noise_prob);
  const bool alt_mask = bernoulli(rng, cfg.specaug_prob);
  const std::uint64_t copy_seed = rng();
  const std::uint64_t alt_render_seed = rng();
  const std::uint64_t alt_seed = rng();

  std::vector<View> views;
  View orig;
  orig.frames = utterance.frames;
  orig.source_utterance_id = utterance.id;
  orig.target = utterance.target;
  views.push_back(orig);

  if (copy_noise || copy_mask) {
    Rng r(copy_seed);
    View v = orig;
    apply_corruptions(v, copy_noise, copy_mask, cfg, ctx, r);
    views.push_back(std::move(v));
  }
  if (alt) {
    if (ctx.prototypes == nullptr || ctx.voice == nullptr) {
      throw ContractError("make_views: altvoice needs prototypes and a voice");
    }
    View v = altvoice_render(utterance, *ctx.voice, *ctx.prototypes,
                             ctx.noise_sigma, alt_render_seed);
    Rng r(alt_seed);
    apply_corruptions(v, alt_noise, alt_mask, cfg, ctx, r);
    views.push_back(std::move(v));
  }
  return views;
}

}  // namespace scasr::augment
