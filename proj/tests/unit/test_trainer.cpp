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

#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "scasr/errors.hpp"
#include "scasr/trainer.hpp"
#include "test_util.hpp"

namespace scasr::train {
namespace {

corpus::CorpusConfig tiny_corpus() {
  corpus::CorpusConfig c;
  c.train_per_accent = 2;
  c.val_per_accent = 2;
  c.test_per_accent = 4;
  return c;
}

model::ModelConfig tiny_model() {
  model::ModelConfig m;
  m.hidden = 8;
  m.embed = 4;
  m.proj = 4;
  return m;
}

TrainConfig quick(Stage stage, Mode mode) {
  TrainConfig c = stage == Stage::kPretrain ? TrainConfig::pretrain_defaults()
                                            : TrainConfig::finetune_defaults();
  c.stage = stage;
  c.mode = mode;
  c.learning_rate = 3e-3;
  c.batch_size = 4;
  c.max_epochs = 2;
  c.eval_interval = 2;
  c.patience = 100;
  return c;
}

struct World {
  corpus::CorpusSplit corpus = corpus::generate_corpus(tiny_corpus());
  augment::AugmentConfig aug;
  ViewResources res = view_resources(corpus, aug);
  TrainData data = make_train_data(corpus, res);
  model::ModelParams init = model::init_params(tiny_model(), 1);
};

model::ModelParams scalar_params(double x) {
  model::ModelParams p;
  p.tensors.push_back({"x", 1, Matrix(1, 1, x)});
  return p;
}

TEST(Config, Names) {
  EXPECT_EQ(parse_mode("joint"), Mode::kJoint);
  EXPECT_EQ(parse_mode("simclr_pretrain"), Mode::kSimclrPretrain);
  EXPECT_EQ(parse_mode("simclr"), Mode::kSimclrPretrain);
  EXPECT_EQ(mode_name(Mode::kProposed), "proposed");
  EXPECT_EQ(parse_stage("finetune"), Stage::kFinetune);
  EXPECT_THROW(parse_mode("maml"), ConfigError);
  EXPECT_THROW(parse_stage("warmup"), ConfigError);
}

TEST(Config, AlphaSchedule) {
  EXPECT_EQ(quick(Stage::kPretrain, Mode::kProposed).alpha(), 1.0);
  EXPECT_EQ(quick(Stage::kPretrain, Mode::kSimclrPretrain).alpha(), 1.0);
  EXPECT_EQ(quick(Stage::kPretrain, Mode::kJoint).alpha(), 0.0);
  EXPECT_EQ(quick(Stage::kFinetune, Mode::kProposed).alpha(), 0.0);
  EXPECT_FALSE(quick(Stage::kPretrain, Mode::kSimclrPretrain).uses_asr());
  EXPECT_TRUE(quick(Stage::kFinetune, Mode::kSimclrPretrain).uses_asr());
  EXPECT_EQ(TrainConfig::pretrain_defaults().learning_rate, 2.83e-4);
  EXPECT_EQ(TrainConfig::finetune_defaults().learning_rate, 8e-5);
}

TEST(Config, Validation) {
  TrainConfig c = quick(Stage::kPretrain, Mode::kProposed);
  EXPECT_NO_THROW(c.validate());
  c.learning_rate = NAN;
  EXPECT_THROW(c.validate(), ConfigError);
  c.learning_rate = -1.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = quick(Stage::kPretrain, Mode::kProposed);
  c.batch_size = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = quick(Stage::kPretrain, Mode::kProposed);
  c.tau = 0.0;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Adam, ZeroGradientsLeaveParamsUnchanged) {
  const auto p0 = model::init_params(tiny_model(), 2);
  auto p = p0;
  AdamState st = AdamState::zeros(p);
  std::vector<std::vector<double>> zero;
  for (const auto& t : p.tensors) zero.emplace_back(t.value.data.size(), 0.0);
  for (int i = 0; i < 3; ++i) ASSERT_TRUE(optimizer_step(p, st, zero, 1e-2));
  EXPECT_EQ(p, p0);
}

TEST(Adam, TwoStepsOnScalarQuadratic) {
  // f(x) = (x - 3)^2 from x = 1.
  auto p = scalar_params(1.0);
  AdamState st = AdamState::zeros(p);
  const double lr = 0.1, b1 = 0.9, b2 = 0.999, eps = 1e-8;
  double x = 1.0, m = 0.0, v = 0.0;
  for (int t = 1; t <= 2; ++t) {
    const double g = 2.0 * (x - 3.0);
    ASSERT_TRUE(optimizer_step(p, st, {{g}}, lr));
    m = b1 * m + (1 - b1) * g;
    v = b2 * v + (1 - b2) * g * g;
    const double mhat = m / (1 - std::pow(b1, t));
    const double vhat = v / (1 - std::pow(b2, t));
    x -= lr * mhat / (std::sqrt(vhat) + eps);
    EXPECT_NEAR(p[model::Param(0)](0, 0), x, 1e-12);
  }
  EXPECT_EQ(st.t, 2u);
}

TEST(Adam, FirstStepScalesLinearlyWithLr) {
  const auto p0 = model::init_params(tiny_model(), 3);
  Rng rng(4);
  std::vector<std::vector<double>> g;
  for (const auto& t : p0.tensors) g.push_back(testing::gaussian(t.value.data.size(), rng));
  auto a = p0, b = p0;
  AdamState sa = AdamState::zeros(a), sb = AdamState::zeros(b);
  optimizer_step(a, sa, g, 1e-3);
  optimizer_step(b, sb, g, 3e-3);
  for (std::size_t k = 0; k < p0.tensors.size(); ++k) {
    for (std::size_t i = 0; i < p0.tensors[k].value.data.size(); ++i) {
      const double da = a.tensors[k].value.data[i] - p0.tensors[k].value.data[i];
      const double db = b.tensors[k].value.data[i] - p0.tensors[k].value.data[i];
      ASSERT_NEAR(db, 3.0 * da, 1e-12);
    }
  }
}

TEST(Adam, NonFiniteGradientRejected) {
  auto p = scalar_params(1.0);
  AdamState st = AdamState::zeros(p);
  EXPECT_FALSE(optimizer_step(p, st, {{NAN}}, 0.1));
  EXPECT_FALSE(optimizer_step(p, st, {{INFINITY}}, 0.1));
  EXPECT_EQ(p[model::Param(0)](0, 0), 1.0);
  EXPECT_EQ(st.t, 0u);
  EXPECT_THROW(optimizer_step(p, st, {}, 0.1), ContractError);
}

TEST(Train, ZeroLearningRateLeavesParams) {
  World w;
  TrainConfig c = quick(Stage::kPretrain, Mode::kProposed);
  c.learning_rate = 0.0;
  const TrainResult r = train_stage(w.data, w.aug, c, w.init);
  EXPECT_EQ(r.final_state.params, w.init);
  EXPECT_GT(r.final_state.step, 0u);
}

TEST(Train, JointHistoryHasNoContrastiveTerm) {
  World w;
  const TrainResult r = train_stage(w.data, augment::select_methods(w.aug, "none"),
                                    quick(Stage::kPretrain, Mode::kJoint), w.init);
  ASSERT_GT(r.history.size(), 1u);
  for (const auto& row : r.history) {
    EXPECT_FALSE(row.con.has_value());
    EXPECT_EQ(row.total, row.asr);
  }
  const std::string csv = history_csv(r.history);
  EXPECT_EQ(csv.rfind("step,asr,con,total,val_metric\n", 0), 0u);
  EXPECT_NE(csv.find("\n1,"), std::string::npos);
}

TEST(Train, ProposedHistoryCarriesBothTerms) {
  World w;
  const TrainResult r = train_stage(w.data, w.aug, quick(Stage::kPretrain, Mode::kProposed),
                                    w.init);
  for (const auto& row : r.history) {
    ASSERT_TRUE(row.con.has_value());
    EXPECT_EQ(row.total, row.asr + *row.con);
  }
}

TEST(Train, LossDecreasesOnTenUtterances) {
  World w;
  std::vector<corpus::Utterance> ten(w.corpus.train.begin(), w.corpus.train.begin() + 10);
  TrainData d = w.data;
  d.train = &ten;
  TrainConfig c = quick(Stage::kPretrain, Mode::kJoint);
  c.batch_size = 10;
  c.max_epochs = 50;
  c.eval_interval = 50;
  c.seed = 0;
  const TrainResult r = train_stage(d, augment::select_methods(w.aug, "none"), c,
                                    model::init_params(model::ModelConfig{}, 0));
  ASSERT_EQ(r.history.size(), 51u);
  // Window means over steps 1-10, 11-20, ... fall strictly.
  double prev = INFINITY;
  for (std::size_t b = 1; b <= 41; b += 10) {
    double m = 0.0;
    for (std::size_t s = b; s < b + 10; ++s) m += r.history[s].asr / 10.0;
    EXPECT_LT(m, prev) << "window from step " << b;
    prev = m;
  }
  EXPECT_LT(r.history[50].asr, r.history[1].asr);
}

TEST(Train, ReturnsBestNotLast) {
  World w;
  TrainConfig c = quick(Stage::kPretrain, Mode::kJoint);
  c.learning_rate = 1.0;  // overshoots, so validation degrades
  c.max_epochs = 6;
  c.eval_interval = 1;
  const auto aug = augment::select_methods(w.aug, "none");
  const TrainResult r = train_stage(w.data, aug, c, w.init);
  std::size_t best_step = 0;
  double best = INFINITY;
  for (const auto& row : r.history) {
    if (row.val_metric && *row.val_metric < best) {
      best = *row.val_metric;
      best_step = row.step;
    }
  }
  ASSERT_LT(best_step, r.final_state.step);
  EXPECT_EQ(r.final_state.best_metric, best);
  EXPECT_NE(r.best, r.final_state.params);
  if (best_step == 0) {
    EXPECT_EQ(r.best, w.init);
  } else {
    TrainConfig upto = c;
    upto.max_steps = best_step;
    EXPECT_EQ(train_stage(w.data, aug, upto, w.init).final_state.params, r.best);
  }
}

TEST(Train, PatienceStopsEarly) {
  World w;
  TrainConfig c = quick(Stage::kPretrain, Mode::kJoint);
  c.learning_rate = 0.0;
  c.max_epochs = 20;
  c.eval_interval = 1;
  c.patience = 3;
  const TrainResult r = train_stage(w.data, augment::select_methods(w.aug, "none"), c, w.init);
  EXPECT_EQ(r.stop_reason, "patience");
  EXPECT_EQ(r.final_state.step, 3u);
}

TEST(Train, SameConfigSameHash) {
  World w;
  const auto c = quick(Stage::kPretrain, Mode::kProposed);
  const auto a = train_stage(w.data, w.aug, c, w.init);
  const auto b = train_stage(w.data, w.aug, c, w.init);
  EXPECT_EQ(a.best.hash(), b.best.hash());
  EXPECT_EQ(a.final_state, b.final_state);
  auto c2 = c;
  c2.seed = 99;
  EXPECT_NE(train_stage(w.data, w.aug, c2, w.init).final_state.params.hash(),
            a.final_state.params.hash());
}

TEST(Train, StateRoundTripIsBitIdentical) {
  World w;
  const auto r = train_stage(w.data, w.aug, quick(Stage::kPretrain, Mode::kProposed), w.init);
  const auto path = testing::scratch_dir("state") / "state.bin";
  save_state(r.final_state, path);
  const TrainState back = load_state(path);
  EXPECT_EQ(back, r.final_state);
  EXPECT_EQ(serialize_state(back), serialize_state(r.final_state));
  EXPECT_FALSE(back.rng_state.empty());
  std::string bytes = serialize_state(back);
  EXPECT_THROW(deserialize_state(bytes.substr(0, bytes.size() / 2), "x"), LoadError);
}

TEST(Train, FinetuneNeverMovesContrastiveHead) {
  World w;
  const auto r = train_stage(w.data, w.aug, quick(Stage::kFinetune, Mode::kProposed), w.init);
  EXPECT_EQ(r.final_state.params[model::kConW], w.init[model::kConW]);
  EXPECT_EQ(r.final_state.params[model::kConB], w.init[model::kConB]);
  EXPECT_NE(r.final_state.params[model::kAsrW], w.init[model::kAsrW]);
  for (const auto& row : r.history) EXPECT_FALSE(row.con.has_value());
}

TEST(Train, SimclrOptimizesContrastiveOnly) {
  World w;
  const auto r =
      train_stage(w.data, w.aug, quick(Stage::kPretrain, Mode::kSimclrPretrain), w.init);
  EXPECT_EQ(r.final_state.params[model::kAsrW], w.init[model::kAsrW]);
  EXPECT_EQ(r.final_state.params[model::kAsrB], w.init[model::kAsrB]);
  EXPECT_NE(r.final_state.params[model::kConW], w.init[model::kConW]);
  for (const auto& row : r.history) {
    ASSERT_TRUE(row.con.has_value());
    EXPECT_EQ(row.total, *row.con);
  }
}

TEST(Train, NonFiniteInitIsDivergence) {
  World w;
  auto bad = w.init;
  bad[model::kEncWx].data[0] = NAN;
  EXPECT_THROW(train_stage(w.data, w.aug, quick(Stage::kPretrain, Mode::kProposed), bad),
               DivergenceError);
}

TEST(Partition, DisjointSeededHoldout) {
  World w;
  const TestPartition p = partition_test(w.corpus, 3, 7);
  EXPECT_EQ(p.holdout.size(), 5u * 3u);
  std::set<std::string> hold, rest;
  for (const auto& u : p.holdout) hold.insert(u.id);
  for (const auto& [acc, us] : p.held_in) {
    EXPECT_EQ(us.size(), 1u);
    EXPECT_EQ(p.holdout_by_accent.at(acc).size(), 3u);
    for (const auto& u : us) {
      EXPECT_EQ(u.accent_id, acc);
      rest.insert(u.id);
    }
  }
  for (const auto& id : rest) EXPECT_FALSE(hold.count(id)) << id;
  EXPECT_EQ(hold.size() + rest.size(), w.corpus.test.size());
  std::vector<std::string> again;
  for (const auto& u : partition_test(w.corpus, 3, 7).holdout) again.push_back(u.id);
  std::vector<std::string> first;
  for (const auto& u : p.holdout) first.push_back(u.id);
  EXPECT_EQ(again, first);
}

MatrixConfig tiny_matrix() {
  MatrixConfig m;
  m.modes = {Mode::kJoint, Mode::kProposed};
  m.augmentations = {"none", "noise"};
  m.shots = {"zero", "full"};
  m.seeds = {0};
  m.model = tiny_model();
  m.holdout_per_accent = 2;
  m.pretrain = quick(Stage::kPretrain, Mode::kProposed);
  m.pretrain.max_epochs = 1;
  m.finetune = quick(Stage::kFinetune, Mode::kProposed);
  m.finetune.max_epochs = 1;
  m.fullshot = m.finetune;
  m.decode.beam_size = 2;
  return m;
}

TEST(Matrix, TwoByTwoEmitsEightCells) {
  World w;
  const auto cells = run_experiment_matrix(w.corpus, tiny_matrix());
  ASSERT_EQ(cells.size(), 8u);
  for (const auto& c : cells) {
    EXPECT_FALSE(c.failed) << c.error;
    EXPECT_EQ(c.report.accents.size(), 5u);
    EXPECT_EQ(c.report.metadata.at("shot"), c.shot);
  }
  const std::string csv = matrix_csv(cells);
  EXPECT_EQ(csv.rfind("mode,augmentation,shot,seed,accent,n_utts,wer,status,error\n", 0), 0u);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 8 * 6);
  EXPECT_FALSE(matrix_table(cells).empty());
}

TEST(Matrix, SingleCellIsPlainJointTraining) {
  World w;
  MatrixConfig m = tiny_matrix();
  m.modes = {Mode::kJoint};
  m.augmentations = {"none"};
  m.shots = {"zero"};
  const auto cells = run_experiment_matrix(w.corpus, m);
  ASSERT_EQ(cells.size(), 1u);
  ASSERT_FALSE(cells[0].failed);
  const auto part = partition_test(w.corpus, 2, w.corpus.config.seed);
  const auto aug = augment::select_methods(m.augment, "none");
  const auto init = model::init_params(m.model, derive_seed(0, "init"));
  const auto pre = train_stage(w.data, aug, stage_config(m, Stage::kPretrain, Mode::kJoint, "none", 0), init);
  const auto ft = train_stage(w.data, aug, stage_config(m, Stage::kFinetune, Mode::kJoint, "none", 0), pre.best);
  EXPECT_EQ(cells[0].zero_shot_params, ft.best);
  EXPECT_EQ(cells[0].report.macro_wer,
            decode::evaluate_split(part.holdout, ft.best, m.decode).macro_wer);
}

TEST(Matrix, PoisonedCellIsIsolated) {
  World w;
  MatrixConfig m = tiny_matrix();
  m.augmentations = {"none"};
  m.shots = {"zero"};
  m.pretrain_lr_overrides["proposed/none"] = NAN;
  m.jobs = 2;
  const auto cells = run_experiment_matrix(w.corpus, m);
  ASSERT_EQ(cells.size(), 2u);
  EXPECT_EQ(cells[0].mode, Mode::kJoint);
  EXPECT_FALSE(cells[0].failed) << cells[0].error;
  EXPECT_TRUE(cells[1].failed);
  EXPECT_NE(cells[1].error.find("learning_rate"), std::string::npos) << cells[1].error;
  const std::string csv = matrix_csv(cells);
  EXPECT_NE(csv.find(",failed,"), std::string::npos);
}

TEST(Matrix, JobsDoNotChangeResults) {
  World w;
  MatrixConfig m = tiny_matrix();
  m.shots = {"zero"};
  const auto serial = matrix_csv(run_experiment_matrix(w.corpus, m));
  m.jobs = 3;
  EXPECT_EQ(matrix_csv(run_experiment_matrix(w.corpus, m)), serial);
}

TEST(Matrix, Validation) {
  World w;
  MatrixConfig m = tiny_matrix();
  m.holdout_per_accent = 4;  // nothing left for full-shot
  EXPECT_THROW(run_experiment_matrix(w.corpus, m), ConfigError);
  m = tiny_matrix();
  m.augmentations = {"tts"};
  EXPECT_THROW(run_experiment_matrix(w.corpus, m), ConfigError);
}

}  // namespace
}  // namespace scasr::train
