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

// scasr command line:
//
//   scasr gen-corpus        --config FILE
//   scasr train             --config FILE --stage S --mode M [--init CKPT]
//   scasr eval              --config FILE --checkpoint CKPT [--split] [--shot]
//   scasr export-embeddings --config FILE --checkpoint CKPT [--limit N]
//   scasr matrix            --config FILE [--jobs N]
//
// Outputs go under the config's [output] dir, or under $SCASR_OUTPUT_ROOT
// when that is set. Exit codes: 0 ok, 2 usage or config, 3 runtime.

#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "scasr/config.hpp"

namespace scasr::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitRuntime = 3;

inline constexpr const char* kOutputRootEnv = "SCASR_OUTPUT_ROOT";

std::filesystem::path output_root(const config::ExperimentConfig& cfg);

int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err);
int run(int argc, char** argv);

}  // namespace scasr::cli
