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

#include "scasr/cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <sstream>

#include "scasr/embed.hpp"
#include "scasr/errors.hpp"
#include "scasr/io.hpp"
#include "scasr/rng.hpp"

namespace scasr::cli {

namespace fs = std::filesystem;

fs::path output_root(const config::ExperimentConfig& cfg) {
  if (const char* env = std::getenv(kOutputRootEnv); env && *env) {
    return fs::path(env);
  }
  return cfg.output_dir;
}

namespace {

constexpr const char* kResolvedConfig = "config.resolved.ini";

struct Options {
  std::string config;
  std::string stage;
  std::string mode = "proposed";
  std::string init;
  std::string aug = "none";
  std::string checkpoint;
  std::string split = "test";
  std::string shot = "zero";
  std::size_t limit = embed::kDefaultExportLimit;
  std::size_t jobs = 0;
  std::uint64_t seed = 0;
  bool seed_set = false;
};

config::ExperimentConfig load(const Options& o) {
  config::ExperimentConfig cfg = config::load_config(o.config);
  cfg.validate();
  return cfg;
}

fs::path corpus_dir(const config::ExperimentConfig& cfg) {
  return output_root(cfg) / "corpus";
}

corpus::CorpusSplit open_corpus(const config::ExperimentConfig& cfg) {
  const fs::path dir = corpus_dir(cfg);
  if (!fs::exists(dir / "manifest.jsonl")) {
    throw IoError("no corpus at " + dir.string() + "; run gen-corpus first");
  }
  return corpus::load_corpus(dir, cfg.corpus);
}

void echo_config(const config::ExperimentConfig& cfg, const fs::path& dir) {
  io::write_file(dir / kResolvedConfig, config::render_config(cfg));
}

std::uint64_t run_seed(const config::ExperimentConfig& cfg, const Options& o) {
  return o.seed_set ? o.seed : cfg.matrix.seeds.front();
}

int cmd_gen_corpus(const Options& o, std::ostream& out) {
  const auto cfg = load(o);
  const fs::path dir = corpus_dir(cfg);
  const corpus::CorpusSplit c = corpus::generate_corpus(cfg.corpus);
  corpus::write_corpus(c, dir);
  echo_config(cfg, dir);
  out << "corpus: " << c.train.size() << " train, " << c.validation.size()
      << " validation, " << c.test.size() << " test utterances\n"
      << "hash: " << corpus::corpus_hash(dir) << '\n'
      << "written to " << dir.string() << '\n';
  return kExitOk;
}

int cmd_train(const Options& o, std::ostream& out) {
  const train::Stage stage = train::parse_stage(o.stage);
  const train::Mode mode = train::parse_mode(o.mode);
  if (stage == train::Stage::kFinetune && o.init.empty()) {
    throw UsageError("--stage finetune requires --init CHECKPOINT");
  }
  if (!augment::is_augmentation_set(o.aug)) {
    throw UsageError("unknown augmentation set '" + o.aug + "'");
  }
  const auto cfg = load(o);
  const corpus::CorpusSplit c = open_corpus(cfg);
  const std::uint64_t seed = run_seed(cfg, o);
  const model::ModelParams init =
      o.init.empty()
          ? model::init_params(cfg.matrix.model, derive_seed(seed, "init"))
          : model::load_checkpoint(o.init, cfg.matrix.model);
  const train::TrainConfig tc =
      train::stage_config(cfg.matrix, stage, mode, o.aug, seed);
  const train::ViewResources res = train::view_resources(c, cfg.matrix.augment);
  const train::TrainResult r =
      train::train_stage(train::make_train_data(c, res),
                         augment::select_methods(cfg.matrix.augment, o.aug), tc,
                         init);
  const fs::path dir = output_root(cfg) / "train" /
                       (std::string(train::stage_name(stage)) + "-" +
                        std::string(train::mode_name(mode)) + "-" + o.aug);
  model::save_checkpoint(r.best, dir / "best.ckpt");
  io::write_file(dir / "history.csv", train::history_csv(r.history));
  train::save_state(r.final_state, dir / "state.bin");
  echo_config(cfg, dir);
  out << "steps: " << r.final_state.step << " (" << r.stop_reason << ")\n"
      << "best validation metric: " << r.final_state.best_metric << '\n'
      << "checkpoint: " << (dir / "best.ckpt").string() << '\n';
  return kExitOk;
}

int cmd_eval(const Options& o, std::ostream& out) {
  if (o.split != "validation" && o.split != "test") {
    throw UsageError("--split must be validation or test");
  }
  if (o.shot != "zero" && o.shot != "full") {
    throw UsageError("--shot must be zero or full");
  }
  if (o.shot == "full" && o.split != "test") {
    throw UsageError("full-shot evaluation needs --split test");
  }
  const auto cfg = load(o);
  const model::ModelParams params =
      model::load_checkpoint(o.checkpoint, cfg.matrix.model);
  const corpus::CorpusSplit c = open_corpus(cfg);
  decode::EvalReport report;
  if (o.split == "validation") {
    report = decode::evaluate_split(c.validation, params, cfg.matrix.decode);
  } else {
    const train::TestPartition part = train::partition_test(
        c, cfg.matrix.holdout_per_accent, cfg.corpus.seed);
    if (o.shot == "zero") {
      report = decode::evaluate_split(part.holdout, params, cfg.matrix.decode);
    } else {
      const train::Mode mode = train::parse_mode(o.mode);
      report = train::evaluate_full_shot(
          c, cfg.matrix, part, train::view_resources(c, cfg.matrix.augment),
          params, mode, o.aug, run_seed(cfg, o));
    }
  }
  report.metadata = {{"checkpoint", params.hash()},
                     {"split", o.split},
                     {"shot", o.shot}};
  const fs::path dir = output_root(cfg) / "eval" / (o.split + "-" + o.shot);
  const std::string table = decode::render_table({"WER"}, {&report});
  io::write_file(dir / "report.csv", report.to_csv());
  io::write_file(dir / "table.txt", table);
  echo_config(cfg, dir);
  out << table;
  return kExitOk;
}

int cmd_export(const Options& o, std::ostream& out) {
  if (o.split != "train" && o.split != "validation" && o.split != "test") {
    throw UsageError("--split must be train, validation or test");
  }
  const auto cfg = load(o);
  const model::ModelParams params =
      model::load_checkpoint(o.checkpoint, cfg.matrix.model);
  const corpus::CorpusSplit c = open_corpus(cfg);
  const embed::EmbeddingDump dump = embed::export_embeddings(
      c.split(o.split), params, o.limit, run_seed(cfg, o));
  const embed::Pca2 pca = embed::pca2(dump);
  const embed::ClusterMetrics m = embed::cluster_metrics(dump);
  std::ostringstream ms;
  ms << "rows=" << dump.rows.size() << '\n'
     << "silhouette=" << m.silhouette << '\n'
     << "cross_accent_similarity="
     << (m.cross_accent_similarity ? std::to_string(*m.cross_accent_similarity)
                                   : std::string("none"))
     << '\n';
  for (const auto& [letter, s] : m.intra_class_similarity) {
    ms << "intra." << letter << '=' << s << '\n';
  }
  const fs::path dir = output_root(cfg) / "embeddings" / o.split;
  io::write_file(dir / "dump.csv", embed::dump_csv(dump));
  io::write_file(dir / "pca.csv", embed::pca_csv(dump, pca));
  io::write_file(dir / "metrics.txt", ms.str());
  echo_config(cfg, dir);
  out << ms.str();
  return kExitOk;
}

int cmd_matrix(const Options& o, std::ostream& out) {
  auto cfg = load(o);
  if (o.jobs) cfg.matrix.jobs = o.jobs;
  const corpus::CorpusSplit c = open_corpus(cfg);
  const auto cells = train::run_experiment_matrix(c, cfg.matrix);
  const fs::path dir = output_root(cfg) / "matrix";
  const std::string table = train::matrix_table(cells);
  io::write_file(dir / "report.csv", train::matrix_csv(cells));
  io::write_file(dir / "table.txt", table);
  echo_config(cfg, dir);
  out << table;
  std::size_t failed = 0;
  for (const auto& cell : cells) failed += cell.failed ? 1 : 0;
  out << cells.size() - failed << " cells ok, " << failed << " failed\n";
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err) {
  CLI::App app("Accent-robust speech recognition with character contrastive "
               "pretraining on a synthetic corpus",
               "scasr");
  app.require_subcommand(1);
  Options o;
  auto add_config = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "Experiment config file")->required();
  };
  auto add_seed = [&](CLI::App* sub) {
    sub->add_option("--seed", o.seed, "Run seed (default: first matrix seed)")
        ->each([&](const std::string&) { o.seed_set = true; });
  };

  CLI::App* gen = app.add_subcommand("gen-corpus", "Render the synthetic corpus");
  add_config(gen);

  CLI::App* tr = app.add_subcommand("train", "Run one training stage");
  add_config(tr);
  tr->add_option("--stage", o.stage, "pretrain or finetune")->required();
  tr->add_option("--mode", o.mode, "proposed, joint or simclr_pretrain");
  tr->add_option("--init", o.init, "Checkpoint to start from");
  tr->add_option("--aug", o.aug, "Augmentation set");
  add_seed(tr);

  CLI::App* ev = app.add_subcommand("eval", "Decode a split and score WER");
  add_config(ev);
  ev->add_option("--checkpoint", o.checkpoint, "Model checkpoint")->required();
  ev->add_option("--split", o.split, "validation or test");
  ev->add_option("--shot", o.shot, "zero or full");
  ev->add_option("--mode", o.mode, "Mode recorded for full-shot fine-tuning");
  ev->add_option("--aug", o.aug, "Augmentation set for full-shot fine-tuning");
  add_seed(ev);

  CLI::App* ex = app.add_subcommand("export-embeddings",
                                    "Dump character representations");
  add_config(ex);
  ex->add_option("--checkpoint", o.checkpoint, "Model checkpoint")->required();
  ex->add_option("--split", o.split, "train, validation or test");
  ex->add_option("--limit", o.limit, "Number of sampled utterances");
  add_seed(ex);

  CLI::App* mx = app.add_subcommand("matrix", "Run the experiment grid");
  add_config(mx);
  mx->add_option("--jobs", o.jobs, "Cells run in parallel (default from config)");

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*gen) return cmd_gen_corpus(o, out);
    if (*tr) return cmd_train(o, out);
    if (*ev) return cmd_eval(o, out);
    if (*ex) return cmd_export(o, out);
    if (*mx) return cmd_matrix(o, out);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}

int run(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, std::cout, std::cerr);
}

}  // namespace scasr::cli
