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

// Two-stage training. Pretraining optimizes L_asr + alpha * L_con with
// alpha = 1 (proposed), L_asr alone (joint) or L_con alone
// (simclr_pretrain). Fine-tuning always optimizes L_asr alone.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "scasr/augment.hpp"
#include "scasr/contrast.hpp"
#include "scasr/corpus.hpp"
#include "scasr/decode.hpp"
#include "scasr/model.hpp"

namespace scasr::train {

enum class Stage { kPretrain, kFinetune };
enum class Mode { kProposed, kJoint, kSimclrPretrain };

std::string_view stage_name(Stage s);
std::string_view mode_name(Mode m);
Stage parse_stage(std::string_view s);  // throws ConfigError
Mode parse_mode(std::string_view s);

struct AdamHyper {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct TrainConfig {
  Stage stage = Stage::kPretrain;
  Mode mode = Mode::kProposed;
  double learning_rate = 2.83e-4;
  std::size_t batch_size = 16;
  std::size_t max_epochs = 10;
  std::size_t max_steps = 0;  // 0: no step budget beyond max_epochs
  std::size_t patience = 5;   // evaluations without improvement
  std::size_t eval_interval = 50;
  // Validation utterances used for the early-stopping metric; 0 = all.
  std::size_t val_limit = 0;
  AdamHyper adam;
  double tau = contrast::kDefaultTau;
  std::size_t pair_cap = contrast::kDefaultPairCap;
  std::uint64_t seed = 0;

  // 1 for proposed pretraining, 0 otherwise.
  double alpha() const;
  // Whether L_asr enters the objective (false only for simclr pretraining).
  bool uses_asr() const;
  void validate() const;  // throws ConfigError
  static TrainConfig pretrain_defaults();
  static TrainConfig finetune_defaults();
};

struct AdamState {
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  std::uint64_t t = 0;

  static AdamState zeros(const model::ModelParams& params);
  friend bool operator==(const AdamState&, const AdamState&) = default;
};

// One bias-corrected Adam update. Returns false and leaves everything
// untouched when any gradient is non-finite.
bool optimizer_step(model::ModelParams& params, AdamState& state,
                    const std::vector<std::vector<double>>& grads, double lr,
                    const AdamHyper& hyper = {});

// Loss and gradients for one batch of views. Every view contributes its
// teacher-forced recognition loss (averaged over views); letter positions
// of all views form the contrastive candidate set.
struct BatchResult {
  contrast::LossValues values;
  std::vector<std::vector<double>> grads;
};
BatchResult batch_loss(const model::ModelParams& params,
                       const std::vector<augment::View>& views,
                       double asr_weight, double alpha, double tau,
                       std::size_t pair_cap, std::uint64_t mining_seed,
                       bool with_grads);

struct HistoryRow {
  std::uint64_t step = 0;
  double asr = 0.0;
  std::optional<double> con;
  double total = 0.0;
  std::optional<double> val_metric;
};

std::string history_csv(const std::vector<HistoryRow>& rows);

struct TrainState {
  model::ModelParams params;
  AdamState adam;
  std::uint64_t step = 0;
  std::uint64_t epoch = 0;
  double best_metric = 0.0;
  bool has_best = false;
  std::uint64_t evals_without_improvement = 0;
  model::ModelParams best_params;
  std::string rng_state;

  friend bool operator==(const TrainState&, const TrainState&) = default;
};

std::string serialize_state(const TrainState& state);
TrainState deserialize_state(const std::string& bytes, const std::string& source);
void save_state(const TrainState& state, const std::filesystem::path& path);
TrainState load_state(const std::filesystem::path& path);

struct TrainData {
  const std::vector<corpus::Utterance>* train = nullptr;
  const std::vector<corpus::Utterance>* validation = nullptr;
  augment::ViewContext views;
};

// Builds the view context for a corpus (corpus RMS over train frames and
// the reserved alternate voice).
struct ViewResources {
  corpus::AccentProfile voice;
  double rms = 1.0;
};
ViewResources view_resources(const corpus::CorpusSplit& corpus,
                             const augment::AugmentConfig& cfg);
TrainData make_train_data(const corpus::CorpusSplit& corpus,
                          const ViewResources& res);

struct TrainResult {
  model::ModelParams best;  // best validation metric, not the last step
  std::vector<HistoryRow> history;
  TrainState final_state;
  std::string stop_reason;
  std::size_t rejected_steps = 0;
};

// Validation metric used for early stopping (lower is better): teacher-forced
// ASR loss while pretraining (contrastive loss for simclr_pretrain), greedy
// WER while fine-tuning.
double validation_metric(const model::ModelParams& params,
                         const std::vector<corpus::Utterance>& val,
                         const TrainConfig& cfg);

TrainResult train_stage(const TrainData& data,
                        const augment::AugmentConfig& augment_cfg,
                        const TrainConfig& cfg, const model::ModelParams& init);

// ---------------------------------------------------------------------------
// Experiment grid

struct MatrixConfig {
  std::vector<Mode> modes{Mode::kJoint, Mode::kProposed};
  std::vector<std::string> augmentations{"none", "noise", "specaug",
                                         "altvoice", "all"};
  std::vector<std::string> shots{"zero", "full"};
  std::vector<std::uint64_t> seeds{0};
  model::ModelConfig model;
  augment::AugmentConfig augment;
  TrainConfig pretrain = TrainConfig::pretrain_defaults();
  TrainConfig finetune = TrainConfig::finetune_defaults();
  TrainConfig fullshot = TrainConfig::finetune_defaults();
  decode::DecodeConfig decode;
  std::size_t holdout_per_accent = 100;
  // Pretrain learning rate per cell, keyed "mode/augmentation".
  std::map<std::string, double> pretrain_lr_overrides;
  std::size_t jobs = 1;

  void validate(const corpus::CorpusConfig& corpus) const;
};

// Per test accent: a seeded holdout of holdout_per_accent utterances used
// for evaluation, the remainder available for full-shot fine-tuning.
struct TestPartition {
  std::vector<corpus::Utterance> holdout;
  std::map<std::string, std::vector<corpus::Utterance>> held_in;
  std::map<std::string, std::vector<corpus::Utterance>> holdout_by_accent;
};
TestPartition partition_test(const corpus::CorpusSplit& corpus,
                             std::size_t holdout_per_accent,
                             std::uint64_t seed);

// The pretrain or finetune config a grid cell uses: stage and mode set, seed
// derived from the cell seed, per-cell learning-rate override applied.
TrainConfig stage_config(const MatrixConfig& cfg, Stage stage, Mode mode,
                         const std::string& augmentation, std::uint64_t seed);

// Fine-tunes `init` separately on each test accent's held-in utterances and
// scores that accent's holdout.
decode::EvalReport evaluate_full_shot(const corpus::CorpusSplit& corpus,
                                      const MatrixConfig& cfg,
                                      const TestPartition& part,
                                      const ViewResources& res,
                                      const model::ModelParams& init, Mode mode,
                                      const std::string& augmentation,
                                      std::uint64_t seed);

struct CellResult {
  Mode mode = Mode::kJoint;
  std::string augmentation;
  std::string shot;
  std::uint64_t seed = 0;
  bool failed = false;
  std::string error;
  decode::EvalReport report;
  model::ModelParams zero_shot_params;  // fine-tuned on seen accents
  std::vector<HistoryRow> pretrain_history;
  std::vector<HistoryRow> finetune_history;
};

std::vector<CellResult> run_experiment_matrix(const corpus::CorpusSplit& corpus,
                                              const MatrixConfig& cfg);

// Combined report keyed (mode, augmentation, shot, seed, accent); averages
// appear as accent "avg". Failed cells become one row with status=failed.
std::string matrix_csv(const std::vector<CellResult>& cells);
std::string matrix_table(const std::vector<CellResult>& cells);

}  // namespace scasr::train
