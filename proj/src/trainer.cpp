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

#include "scasr/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>
#include <thread>

#include "scasr/errors.hpp"
#include "scasr/io.hpp"
#include "scasr/rng.hpp"

namespace scasr::train {

using num::Graph;
using num::Shape;
using num::Tensor;

std::string_view stage_name(Stage s) {
  return s == Stage::kPretrain ? "pretrain" : "finetune";
}

std::string_view mode_name(Mode m) {
  switch (m) {
    case Mode::kProposed: return "proposed";
    case Mode::kJoint: return "joint";
    case Mode::kSimclrPretrain: return "simclr_pretrain";
  }
  return "?";
}

Stage parse_stage(std::string_view s) {
  if (s == "pretrain") return Stage::kPretrain;
  if (s == "finetune") return Stage::kFinetune;
  throw ConfigError("unknown stage '" + std::string(s) + "'");
}

Mode parse_mode(std::string_view s) {
  if (s == "proposed") return Mode::kProposed;
  if (s == "joint") return Mode::kJoint;
  if (s == "simclr_pretrain" || s == "simclr") return Mode::kSimclrPretrain;
  throw ConfigError("unknown mode '" + std::string(s) + "'");
}

// ---------------------------------------------------------------------------
// TrainConfig

double TrainConfig::alpha() const {
  if (stage == Stage::kFinetune) return 0.0;
  return mode == Mode::kJoint ? 0.0 : 1.0;
}

bool TrainConfig::uses_asr() const {
  return !(stage == Stage::kPretrain && mode == Mode::kSimclrPretrain);
}

void TrainConfig::validate() const {
  const std::string prefix = std::string(stage_name(stage)) + ".";
  if (!std::isfinite(learning_rate) || learning_rate < 0.0) {
    throw ConfigError(prefix + "learning_rate: must be finite and >= 0");
  }
  if (batch_size == 0) throw ConfigError(prefix + "batch_size: must be >= 1");
  if (max_epochs == 0) throw ConfigError(prefix + "max_epochs: must be >= 1");
  if (eval_interval == 0) {
    throw ConfigError(prefix + "eval_interval: must be >= 1");
  }
  if (patience == 0) throw ConfigError(prefix + "patience: must be >= 1");
  if (!(tau > 0.0)) throw ConfigError(prefix + "tau: must be > 0");
  if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0) ||
      !(adam.beta2 >= 0.0 && adam.beta2 < 1.0) || !(adam.eps > 0.0)) {
    throw ConfigError(prefix + "adam: need beta in [0, 1) and eps > 0");
  }
}

TrainConfig TrainConfig::pretrain_defaults() {
  TrainConfig c;
  c.stage = Stage::kPretrain;
  c.learning_rate = 2.83e-4;
  return c;
}

TrainConfig TrainConfig::finetune_defaults() {
  TrainConfig c;
  c.stage = Stage::kFinetune;
  c.learning_rate = 8e-5;
  return c;
}

// ---------------------------------------------------------------------------
// Adam

AdamState AdamState::zeros(const model::ModelParams& params) {
  AdamState s;
  for (const auto& t : params.tensors) {
    s.m.emplace_back(t.value.data.size(), 0.0);
    s.v.emplace_back(t.value.data.size(), 0.0);
  }
  return s;
}

bool optimizer_step(model::ModelParams& params, AdamState& state,
                    const std::vector<std::vector<double>>& grads, double lr,
                    const AdamHyper& hyper) {
  if (grads.size() != params.tensors.size()) {
    throw ContractError("optimizer_step: gradient count mismatch");
  }
  for (const auto& g : grads) {
    for (double x : g) {
      if (!std::isfinite(x)) return false;
    }
  }
  if (state.m.empty()) state = AdamState::zeros(params);
  state.t += 1;
  const double t = static_cast<double>(state.t);
  const double c1 = 1.0 - std::pow(hyper.beta1, t);
  const double c2 = 1.0 - std::pow(hyper.beta2, t);
  for (std::size_t k = 0; k < grads.size(); ++k) {
    auto& p = params.tensors[k].value.data;
    auto& m = state.m[k];
    auto& v = state.v[k];
    const auto& g = grads[k];
    if (g.size() != p.size()) {
      throw ContractError("optimizer_step: gradient shape mismatch for " +
                          params.tensors[k].name);
    }
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = hyper.beta1 * m[i] + (1.0 - hyper.beta1) * g[i];
      v[i] = hyper.beta2 * v[i] + (1.0 - hyper.beta2) * g[i] * g[i];
      const double mhat = m[i] / c1;
      const double vhat = v[i] / c2;
      p[i] -= lr * mhat / (std::sqrt(vhat) + hyper.eps);
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// Batch objective

BatchResult batch_loss(const model::ModelParams& params,
                       const std::vector<augment::View>& views,
                       double asr_weight, double alpha, double tau,
                       std::size_t pair_cap, std::uint64_t mining_seed,
                       bool with_grads) {
  if (views.empty()) throw ContractError("batch_loss: no views");
  Graph g;
  model::BoundParams bound = model::bind(g, params, with_grads);
  std::vector<Tensor> asr_terms;
  std::vector<Tensor> cand_rows;
  std::vector<int> labels;
  const bool need_con = alpha != 0.0;
  for (const auto& v : views) {
    model::ForwardResult fr = model::forward_teacher_forced(
        bound, model::frames_tensor(g, v.frames), v.target);
    asr_terms.push_back(
        num::reshape(contrast::asr_loss(fr.asr_logprobs, v.target), Shape{1, 1}));
    if (need_con) {
      std::vector<std::size_t> rows;
      for (std::size_t i = 0; i < fr.length; ++i) {
        if (vocab::is_letter(v.target[i + 1])) {
          rows.push_back(i);
          labels.push_back(v.target[i + 1]);
        }
      }
      if (!rows.empty()) cand_rows.push_back(num::gather_rows(fr.proj, rows));
    }
  }
  Tensor asr = num::mean(num::concat_rows(asr_terms));

  BatchResult out;
  out.values.alpha = alpha;
  out.values.asr = asr.item();
  Tensor total = asr;
  if (need_con) {
    contrast::ContrastiveTerm con;
    if (labels.empty()) {
      con.loss = g.scalar(0.0);
      con.empty = true;
    } else {
      const contrast::PairBatch batch =
          contrast::mine_pairs(labels, pair_cap, mining_seed);
      con = contrast::contrastive_loss(num::concat_rows(cand_rows), batch, tau);
      out.values.pair_count = batch.positive_pairs.size();
    }
    out.values.con = con.loss.item();
    out.values.con_computed = true;
    out.values.no_positives = con.empty;
    total = asr_weight != 0.0
                ? contrast::total_loss(num::scale(asr, asr_weight), con.loss, alpha)
                : num::scale(con.loss, alpha);
  } else if (asr_weight != 1.0) {
    total = num::scale(asr, asr_weight);
  }
  out.values.total = total.item();
  if (with_grads) {
    g.backward(total);
    out.grads = model::collect_grads(bound);
  }
  return out;
}

std::string history_csv(const std::vector<HistoryRow>& rows) {
  std::ostringstream os;
  os << "step,asr,con,total,val_metric\n";
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return std::string(buf);
  };
  for (const auto& r : rows) {
    os << r.step << ',' << num(r.asr) << ',' << (r.con ? num(*r.con) : "")
       << ',' << num(r.total) << ','
       << (r.val_metric ? num(*r.val_metric) : "") << '\n';
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Train state

namespace {

constexpr char kStateMagic[8] = {'S', 'C', 'A', 'S', 'R', 'S', 'T', 'A'};
constexpr std::uint32_t kStateVersion = 1;

}  // namespace

std::string serialize_state(const TrainState& s) {
  io::ByteWriter w;
  w.raw(kStateMagic, sizeof kStateMagic);
  w.u32(kStateVersion);
  w.str(model::serialize(s.params));
  w.u64(s.adam.t);
  w.u32(static_cast<std::uint32_t>(s.adam.m.size()));
  for (std::size_t k = 0; k < s.adam.m.size(); ++k) {
    w.u64(s.adam.m[k].size());
    w.f64s(s.adam.m[k]);
    w.f64s(s.adam.v[k]);
  }
  w.u64(s.step);
  w.u64(s.epoch);
  w.f64(s.best_metric);
  w.u32(s.has_best ? 1 : 0);
  w.u64(s.evals_without_improvement);
  w.str(s.best_params.tensors.empty() ? std::string()
                                      : model::serialize(s.best_params));
  w.str(s.rng_state);
  return w.bytes();
}

TrainState deserialize_state(const std::string& bytes,
                             const std::string& source) {
  io::ByteReader r(bytes, source);
  if (r.raw(sizeof kStateMagic) != std::string(kStateMagic, sizeof kStateMagic)) {
    throw LoadError(source + ": not a train state file");
  }
  if (r.u32() != kStateVersion) throw LoadError(source + ": bad version");
  TrainState s;
  s.params = model::deserialize(r.str(), source + "[params]");
  s.adam.t = r.u64();
  const std::uint32_t n = r.u32();
  for (std::uint32_t k = 0; k < n; ++k) {
    const std::size_t len = r.u64();
    s.adam.m.push_back(r.f64s(len));
    s.adam.v.push_back(r.f64s(len));
  }
  s.step = r.u64();
  s.epoch = r.u64();
  s.best_metric = r.f64();
  s.has_best = r.u32() != 0;
  s.evals_without_improvement = r.u64();
  const std::string best = r.str();
  if (!best.empty()) s.best_params = model::deserialize(best, source + "[best]");
  s.rng_state = r.str();
  if (!r.done()) throw LoadError(source + ": trailing bytes");
  return s;
}

void save_state(const TrainState& state, const std::filesystem::path& path) {
  io::write_file(path, serialize_state(state));
}

TrainState load_state(const std::filesystem::path& path) {
  return deserialize_state(io::read_file(path), path.string());
}

// ---------------------------------------------------------------------------
// Stage loop

ViewResources view_resources(const corpus::CorpusSplit& corpus,
                             const augment::AugmentConfig& cfg) {
  ViewResources r;
  r.voice = corpus::reserved_voice(corpus.config, cfg.altvoice_strength);
  r.rms = corpus::frame_rms(corpus.train);
  return r;
}

TrainData make_train_data(const corpus::CorpusSplit& corpus,
                          const ViewResources& res) {
  TrainData d;
  d.train = &corpus.train;
  d.validation = &corpus.validation;
  d.views.prototypes = &corpus.prototypes;
  d.views.voice = &res.voice;
  d.views.frame_rms = res.rms;
  d.views.noise_sigma = corpus.config.noise_sigma;
  return d;
}

namespace {

std::vector<augment::View> original_views(
    const std::vector<corpus::Utterance>& utts, std::size_t begin,
    std::size_t end) {
  std::vector<augment::View> views;
  for (std::size_t i = begin; i < end; ++i) {
    augment::View v;
    v.frames = utts[i].frames;
    v.source_utterance_id = utts[i].id;
    v.target = utts[i].target;
    views.push_back(std::move(v));
  }
  return views;
}

std::vector<corpus::Utterance> sample_validation(
    const std::vector<corpus::Utterance>& val, std::size_t limit,
    std::uint64_t seed) {
  if (limit == 0 || limit >= val.size()) return val;
  std::vector<std::size_t> idx(val.size());
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(derive_seed(seed, "val-sample"));
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(limit);
  std::sort(idx.begin(), idx.end());
  std::vector<corpus::Utterance> out;
  for (std::size_t i : idx) out.push_back(val[i]);
  return out;
}

}  // namespace

double validation_metric(const model::ModelParams& params,
                         const std::vector<corpus::Utterance>& val,
                         const TrainConfig& cfg) {
  if (val.empty()) throw ContractError("validation split is empty");
  if (cfg.stage == Stage::kFinetune) {
    decode::DecodeConfig greedy{1, 0.0, 0};
    return decode::evaluate_split(val, params, greedy).macro_wer;
  }
  if (cfg.uses_asr()) {
    double acc = 0.0;
    for (std::size_t i = 0; i < val.size(); ++i) {
      acc += batch_loss(params, original_views(val, i, i + 1), 1.0, 0.0,
                        cfg.tau, cfg.pair_cap, 0, false)
                 .values.asr;
    }
    return acc / static_cast<double>(val.size());
  }
  double acc = 0.0;
  std::size_t batches = 0;
  for (std::size_t b = 0; b < val.size(); b += cfg.batch_size) {
    const std::size_t e = std::min(val.size(), b + cfg.batch_size);
    acc += batch_loss(params, original_views(val, b, e), 0.0, 1.0, cfg.tau,
                      cfg.pair_cap, derive_seed(cfg.seed, "val-mining", b),
                      false)
               .values.con;
    ++batches;
  }
  return acc / static_cast<double>(batches);
}

TrainResult train_stage(const TrainData& data,
                        const augment::AugmentConfig& augment_cfg,
                        const TrainConfig& cfg,
                        const model::ModelParams& init) {
  cfg.validate();
  if (data.train == nullptr || data.train->empty()) {
    throw ContractError("train_stage: empty training set");
  }
  if (data.validation == nullptr || data.validation->empty()) {
    throw ContractError("train_stage: empty validation set");
  }
  const auto& train = *data.train;
  const std::vector<corpus::Utterance> val =
      sample_validation(*data.validation, cfg.val_limit, cfg.seed);
  const double alpha = cfg.alpha();
  const double asr_weight = cfg.uses_asr() ? 1.0 : 0.0;

  TrainResult out;
  TrainState& st = out.final_state;
  st.params = init;
  st.adam = AdamState::zeros(init);
  Rng rng(derive_seed(cfg.seed, std::string("order/") +
                                    std::string(stage_name(cfg.stage))));

  auto evaluate = [&](HistoryRow* row) -> bool {
    const double metric = validation_metric(st.params, val, cfg);
    if (row) row->val_metric = metric;
    if (!st.has_best || metric < st.best_metric) {
      st.best_metric = metric;
      st.best_params = st.params;
      st.has_best = true;
      st.evals_without_improvement = 0;
    } else {
      ++st.evals_without_improvement;
    }
    return st.evals_without_improvement >= cfg.patience;
  };

  try {
    HistoryRow row0;
    row0.step = 0;
    const std::size_t n0 = std::min<std::size_t>(val.size(), cfg.batch_size);
    const auto v0 = batch_loss(st.params, original_views(val, 0, n0),
                               asr_weight, alpha, cfg.tau, cfg.pair_cap,
                               derive_seed(cfg.seed, "mining", 0), false)
                        .values;
    row0.asr = v0.asr;
    if (v0.con_computed) row0.con = v0.con;
    row0.total = v0.total;
    evaluate(&row0);
    out.history.push_back(row0);
  } catch (const NonFiniteError& err) {
    throw DivergenceError(std::string(stage_name(cfg.stage)) +
                          " initial evaluation: " + err.what());
  }

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  bool stop = false;
  bool evaluated_last = true;
  out.stop_reason = "max_epochs";
  for (std::size_t epoch = 0; epoch < cfg.max_epochs && !stop; ++epoch) {
    st.epoch = epoch;
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t b = 0; b < order.size() && !stop; b += cfg.batch_size) {
      if (cfg.max_steps && st.step >= cfg.max_steps) {
        out.stop_reason = "max_steps";
        stop = true;
        break;
      }
      const std::size_t e = std::min(order.size(), b + cfg.batch_size);
      std::vector<augment::View> views;
      for (std::size_t j = b; j < e; ++j) {
        auto vs = augment::make_views(
            train[order[j]], augment_cfg, data.views,
            derive_seed(cfg.seed, "views", st.step * cfg.batch_size + (j - b)));
        for (auto& v : vs) views.push_back(std::move(v));
      }
      BatchResult res;
      try {
        res = batch_loss(st.params, views, asr_weight, alpha, cfg.tau,
                         cfg.pair_cap, derive_seed(cfg.seed, "mining", st.step + 1),
                         true);
      } catch (const NonFiniteError& err) {
        throw DivergenceError(std::string(stage_name(cfg.stage)) + " step " +
                              std::to_string(st.step + 1) + ": " + err.what());
      }
      if (!optimizer_step(st.params, st.adam, res.grads, cfg.learning_rate,
                          cfg.adam)) {
        ++out.rejected_steps;
      }
      ++st.step;
      HistoryRow row;
      row.step = st.step;
      row.asr = res.values.asr;
      if (res.values.con_computed) row.con = res.values.con;
      row.total = res.values.total;
      evaluated_last = false;
      if (st.step % cfg.eval_interval == 0) {
        try {
          if (evaluate(&row)) {
            out.stop_reason = "patience";
            stop = true;
          }
        } catch (const NonFiniteError& err) {
          throw DivergenceError(std::string("validation at step ") +
                                std::to_string(st.step) + ": " + err.what());
        }
        evaluated_last = true;
      }
      out.history.push_back(row);
    }
  }
  if (!evaluated_last) {
    try {
      evaluate(&out.history.back());
    } catch (const NonFiniteError& err) {
      throw DivergenceError(std::string("final validation: ") + err.what());
    }
  }
  std::ostringstream rs;
  rs << rng;
  st.rng_state = rs.str();
  out.best = st.best_params;
  return out;
}

// ---------------------------------------------------------------------------
// Experiment grid

void MatrixConfig::validate(const corpus::CorpusConfig& corpus) const {
  if (modes.empty()) throw ConfigError("matrix.modes: empty");
  if (augmentations.empty()) throw ConfigError("matrix.augmentations: empty");
  for (const auto& a : augmentations) {
    if (!augment::is_augmentation_set(a)) {
      throw ConfigError("matrix.augmentations: unknown set '" + a + "'");
    }
  }
  if (shots.empty()) throw ConfigError("matrix.shots: empty");
  for (const auto& s : shots) {
    if (s != "zero" && s != "full") {
      throw ConfigError("matrix.shots: unknown shot '" + s + "'");
    }
  }
  if (seeds.empty()) throw ConfigError("matrix.seeds: empty");
  if (holdout_per_accent == 0 || holdout_per_accent > corpus.test_per_accent) {
    throw ConfigError("matrix.holdout_per_accent: must be in [1, test_per_accent]");
  }
  if (std::find(shots.begin(), shots.end(), "full") != shots.end() &&
      holdout_per_accent >= corpus.test_per_accent) {
    throw ConfigError(
        "matrix.holdout_per_accent: full-shot needs test utterances beyond "
        "the holdout");
  }
  if (jobs == 0) throw ConfigError("matrix.jobs: must be >= 1");
  model.validate();
  augment.validate(corpus.dim);
  decode.validate();
}

TestPartition partition_test(const corpus::CorpusSplit& corpus,
                             std::size_t holdout_per_accent,
                             std::uint64_t seed) {
  TestPartition p;
  for (const auto& acc : corpus.test_accents) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < corpus.test.size(); ++i) {
      if (corpus.test[i].accent_id == acc) idx.push_back(i);
    }
    Rng rng(derive_seed(seed, "holdout/" + acc));
    std::shuffle(idx.begin(), idx.end(), rng);
    const std::size_t k = std::min(holdout_per_accent, idx.size());
    std::vector<std::size_t> hold(idx.begin(), idx.begin() + k);
    std::vector<std::size_t> rest(idx.begin() + k, idx.end());
    std::sort(hold.begin(), hold.end());
    std::sort(rest.begin(), rest.end());
    for (std::size_t i : hold) {
      p.holdout.push_back(corpus.test[i]);
      p.holdout_by_accent[acc].push_back(corpus.test[i]);
    }
    for (std::size_t i : rest) p.held_in[acc].push_back(corpus.test[i]);
  }
  return p;
}

TrainConfig stage_config(const MatrixConfig& cfg, Stage stage, Mode mode,
                         const std::string& augmentation, std::uint64_t seed) {
  TrainConfig out = stage == Stage::kPretrain ? cfg.pretrain : cfg.finetune;
  out.stage = stage;
  out.mode = mode;
  out.seed = derive_seed(out.seed, std::string(stage_name(stage)), seed);
  if (stage == Stage::kPretrain) {
    const std::string key = std::string(mode_name(mode)) + "/" + augmentation;
    if (auto it = cfg.pretrain_lr_overrides.find(key);
        it != cfg.pretrain_lr_overrides.end()) {
      out.learning_rate = it->second;
    }
  }
  return out;
}

decode::EvalReport evaluate_full_shot(const corpus::CorpusSplit& corpus,
                                      const MatrixConfig& cfg,
                                      const TestPartition& part,
                                      const ViewResources& res,
                                      const model::ModelParams& init, Mode mode,
                                      const std::string& augmentation,
                                      std::uint64_t seed) {
  const augment::AugmentConfig aug =
      augment::select_methods(cfg.augment, augmentation);
  const TrainData data = make_train_data(corpus, res);
  std::vector<decode::UtteranceResult> all;
  for (const auto& [acc, held_in] : part.held_in) {
    if (held_in.empty()) {
      throw ContractError("no held-in utterances for accent " + acc);
    }
    TrainData acc_data = data;
    acc_data.train = &held_in;
    acc_data.validation = &held_in;
    TrainConfig fs = cfg.fullshot;
    fs.stage = Stage::kFinetune;
    fs.mode = mode;
    fs.seed = derive_seed(cfg.fullshot.seed, "fullshot/" + acc, seed);
    TrainResult fs_res = train_stage(acc_data, aug, fs, init);
    auto rep = decode::evaluate_split(part.holdout_by_accent.at(acc),
                                      fs_res.best, cfg.decode);
    for (auto& u : rep.utterances) all.push_back(std::move(u));
  }
  return decode::aggregate(std::move(all));
}

namespace {

struct GroupSpec {
  Mode mode;
  std::string augmentation;
  std::uint64_t seed;
};

std::vector<CellResult> run_group(const corpus::CorpusSplit& corpus,
                                  const MatrixConfig& cfg,
                                  const ViewResources& res,
                                  const TestPartition& part,
                                  const GroupSpec& g) {
  std::vector<CellResult> cells;
  for (const auto& shot : cfg.shots) {
    CellResult c;
    c.mode = g.mode;
    c.augmentation = g.augmentation;
    c.shot = shot;
    c.seed = g.seed;
    c.report.metadata = {{"mode", std::string(mode_name(g.mode))},
                         {"augmentation", g.augmentation},
                         {"shot", shot},
                         {"seed", std::to_string(g.seed)}};
    cells.push_back(std::move(c));
  }
  try {
    const augment::AugmentConfig aug =
        augment::select_methods(cfg.augment, g.augmentation);
    const TrainData data = make_train_data(corpus, res);

    const TrainConfig pre =
        stage_config(cfg, Stage::kPretrain, g.mode, g.augmentation, g.seed);
    const TrainConfig ft =
        stage_config(cfg, Stage::kFinetune, g.mode, g.augmentation, g.seed);

    const model::ModelParams init =
        model::init_params(cfg.model, derive_seed(g.seed, "init"));
    TrainResult pre_res = train_stage(data, aug, pre, init);
    TrainResult ft_res = train_stage(data, aug, ft, pre_res.best);

    for (auto& c : cells) {
      c.zero_shot_params = ft_res.best;
      c.pretrain_history = pre_res.history;
      c.finetune_history = ft_res.history;
      auto meta = c.report.metadata;
      try {
        if (c.shot == "zero") {
          c.report =
              decode::evaluate_split(part.holdout, ft_res.best, cfg.decode);
        } else {
          c.report = evaluate_full_shot(corpus, cfg, part, res, ft_res.best,
                                        g.mode, g.augmentation, g.seed);
        }
      } catch (const std::exception& e) {
        c.failed = true;
        c.error = e.what();
      }
      c.report.metadata = meta;
    }
  } catch (const std::exception& e) {
    for (auto& c : cells) {
      c.failed = true;
      c.error = e.what();
    }
  }
  return cells;
}

}  // namespace

std::vector<CellResult> run_experiment_matrix(const corpus::CorpusSplit& corpus,
                                              const MatrixConfig& cfg) {
  cfg.validate(corpus.config);
  const ViewResources res = view_resources(corpus, cfg.augment);
  const TestPartition part =
      partition_test(corpus, cfg.holdout_per_accent, corpus.config.seed);

  std::vector<GroupSpec> groups;
  for (Mode m : cfg.modes) {
    for (const auto& a : cfg.augmentations) {
      for (std::uint64_t s : cfg.seeds) groups.push_back({m, a, s});
    }
  }
  std::vector<std::vector<CellResult>> results(groups.size());
  const std::size_t jobs = std::min(cfg.jobs, groups.size());
  if (jobs <= 1) {
    for (std::size_t i = 0; i < groups.size(); ++i) {
      results[i] = run_group(corpus, cfg, res, part, groups[i]);
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < jobs; ++t) {
      pool.emplace_back([&] {
        for (std::size_t i; (i = next.fetch_add(1)) < groups.size();) {
          results[i] = run_group(corpus, cfg, res, part, groups[i]);
        }
      });
    }
    for (auto& th : pool) th.join();
  }
  std::vector<CellResult> cells;
  for (auto& r : results) {
    for (auto& c : r) cells.push_back(std::move(c));
  }
  return cells;
}

namespace {

std::string sanitize(std::string s) {
  for (char& c : s) {
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  }
  return s;
}

std::string fixed6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

std::string matrix_csv(const std::vector<CellResult>& cells) {
  std::ostringstream os;
  os << "mode,augmentation,shot,seed,accent,n_utts,wer,status,error\n";
  for (const auto& c : cells) {
    const std::string key = std::string(mode_name(c.mode)) + "," +
                            c.augmentation + "," + c.shot + "," +
                            std::to_string(c.seed) + ",";
    if (c.failed) {
      os << key << "-,,,failed," << sanitize(c.error) << '\n';
      continue;
    }
    std::size_t total = 0;
    for (const auto& a : c.report.accents) {
      os << key << a.accent << ',' << a.n_utts << ',' << fixed6(a.wer)
         << ",ok,\n";
      total += a.n_utts;
    }
    os << key << "avg," << total << ',' << fixed6(c.report.macro_wer)
       << ",ok,\n";
  }
  return os.str();
}

std::string matrix_table(const std::vector<CellResult>& cells) {
  std::ostringstream os;
  std::vector<std::pair<std::string, std::uint64_t>> groups;
  for (const auto& c : cells) {
    std::pair<std::string, std::uint64_t> k{c.shot, c.seed};
    if (std::find(groups.begin(), groups.end(), k) == groups.end()) {
      groups.push_back(k);
    }
  }
  for (const auto& [shot, seed] : groups) {
    os << "== " << shot << "-shot, seed " << seed << " (WER %) ==\n";
    std::vector<std::string> names;
    std::vector<const decode::EvalReport*> reports;
    decode::EvalReport failed;
    for (const auto& c : cells) {
      if (c.shot != shot || c.seed != seed) continue;
      names.push_back(std::string(mode_name(c.mode)) + "+" + c.augmentation);
      reports.push_back(c.failed ? &failed : &c.report);
    }
    os << decode::render_table(names, reports);
    for (const auto& c : cells) {
      if (c.shot == shot && c.seed == seed && c.failed) {
        os << "  failed: " << mode_name(c.mode) << "+" << c.augmentation
           << ": " << c.error << '\n';
      }
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace scasr::train
