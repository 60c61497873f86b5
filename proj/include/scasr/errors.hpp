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

#pragma once

#include <stdexcept>
#include <string>

namespace scasr {

// Every library failure derives from Error so the CLI can map it to an exit
// code. ConfigError and UsageError map to 2, everything else to 3.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define SCASR_DEFINE_ERROR(Name)              \
  class Name : public Error {                 \
   public:                                    \
    explicit Name(const std::string& what)    \
        : Error(std::string(#Name ": ") + what) {} \
  }

SCASR_DEFINE_ERROR(DimensionError);
SCASR_DEFINE_ERROR(DomainError);
SCASR_DEFINE_ERROR(DegenerateVectorError);
SCASR_DEFINE_ERROR(ContractError);
SCASR_DEFINE_ERROR(NonFiniteError);
SCASR_DEFINE_ERROR(VocabularyError);
SCASR_DEFINE_ERROR(GenerationError);
SCASR_DEFINE_ERROR(ConfigError);
SCASR_DEFINE_ERROR(UsageError);
SCASR_DEFINE_ERROR(InsufficientBatchError);
SCASR_DEFINE_ERROR(DivergenceError);
SCASR_DEFINE_ERROR(UndefinedMetricError);
SCASR_DEFINE_ERROR(DegenerateDataError);
SCASR_DEFINE_ERROR(MetricError);
SCASR_DEFINE_ERROR(LoadError);
SCASR_DEFINE_ERROR(IoError);

#undef SCASR_DEFINE_ERROR

}  // namespace scasr
