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

// Experiment configuration: a sectioned key = value text file.
//
//   [corpus]
//   seed = 7
//   [pretrain]
//   learning_rate = 1e-3
//
// Sections: corpus, augment, model, pretrain, finetune, fullshot, decode,
// matrix, output. '#' and ';' start comments. Unknown sections or keys are
// rejected by name.

#pragma once

#include <filesystem>
#include <string>

#include "scasr/augment.hpp"
#include "scasr/corpus.hpp"
#include "scasr/decode.hpp"
#include "scasr/model.hpp"
#include "scasr/trainer.hpp"

namespace scasr::config {

struct ExperimentConfig {
  corpus::CorpusConfig corpus;
  train::MatrixConfig matrix;  // also holds model, augment, stages, decode
  std::filesystem::path output_dir = "out";

  // Cross-section checks (model.dim must match corpus.dim, etc.).
  void validate() const;
};

// Defaults with any sections the text overrides. Throws ConfigError.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);
// Every key with its value, in a form parse_config reads back unchanged.
std::string render_config(const ExperimentConfig& cfg);

}  // namespace scasr::config
