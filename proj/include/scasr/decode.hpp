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

// Beam-search decoding and word error rate.
//
// A hypothesis y is scored as  sum_i log P(y_i | x, y_<i) + lambda * sqrt(wc)
// where wc is the number of space-delimited words in the detokenized
// sequence. During search the bonus uses the current prefix; finished
// hypotheses use their complete sequence.

#pragma once

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "scasr/corpus.hpp"
#include "scasr/model.hpp"

namespace scasr::decode {

// Autoregressive scorer behind the search. States are opaque handles
// returned by the model.
class SequenceModel {
 public:
  virtual ~SequenceModel() = default;
  virtual int initial_state() = 0;
  // Log-probabilities over the vocabulary for the token after `prev`, plus
  // the state reached after consuming it.
  virtual std::pair<int, std::vector<double>> step(int state, int prev) = 0;
};

// Wraps the encoder-decoder for one utterance.
class NetworkModel : public SequenceModel {
 public:
  NetworkModel(const model::ModelParams& params, const Matrix& frames);
  int initial_state() override;
  std::pair<int, std::vector<double>> step(int state, int prev) override;

 private:
  std::unique_ptr<num::Graph> graph_;
  model::BoundParams bound_;
  model::EncoderCache cache_;
  std::vector<num::Tensor> states_;
};

struct BeamHypothesis {
  std::vector<int> tokens;  // starts with SOS
  double logprob = 0.0;
  int state = 0;
  bool finished = false;
};

struct DecodeResult {
  std::vector<int> tokens;  // SOS ... [EOS]
  double logprob = 0.0;
  double score = 0.0;
};

std::size_t word_count(const std::vector<int>& tokens);
double hypothesis_score(const std::vector<int>& tokens, double logprob,
                        double lambda);

DecodeResult beam_search(SequenceModel& model, std::size_t beam_size,
                         double lambda, std::size_t max_len);
DecodeResult beam_search(const Matrix& frames, const model::ModelParams& params,
                         std::size_t beam_size, double lambda,
                         std::size_t max_len);
// Argmax per step, lowest index on ties, until EOS or max_len tokens.
DecodeResult greedy_decode(SequenceModel& model, std::size_t max_len);

// Word-level Levenshtein distance with unit costs.
std::size_t word_edit_distance(const std::vector<std::string>& ref,
                               const std::vector<std::string>& hyp);
std::vector<std::string> split_words(const std::string& s);
// 100 * edits / reference words. Throws UndefinedMetricError for an empty
// reference.
double wer(const std::string& reference, const std::string& hypothesis);

struct DecodeConfig {
  std::size_t beam_size = 5;
  double lambda = 0.1;
  // 0 means 2 * (reference characters + 1).
  std::size_t max_len = 0;

  void validate() const;
};

struct UtteranceResult {
  std::string id;
  std::string accent_id;
  std::string reference;
  std::string hypothesis;
  std::size_t errors = 0;
  std::size_t ref_words = 0;
};

struct AccentWer {
  std::string accent;
  std::size_t n_utts = 0;
  std::size_t errors = 0;
  std::size_t ref_words = 0;
  double wer = 0.0;
};

struct EvalReport {
  std::map<std::string, std::string> metadata;  // mode, augmentation, shot...
  std::vector<AccentWer> accents;  // sorted by accent id
  double macro_wer = 0.0;          // unweighted mean over accents
  std::vector<UtteranceResult> utterances;

  const AccentWer& accent(const std::string& id) const;
  std::string to_csv() const;
};

// Build an EvalReport from per-utterance results: per-accent WER is total
// edits over total reference words.
EvalReport aggregate(std::vector<UtteranceResult> results);

using Transcriber = std::function<std::string(const corpus::Utterance&)>;
EvalReport evaluate_split(const std::vector<corpus::Utterance>& utterances,
                          const Transcriber& transcribe);
EvalReport evaluate_split(const std::vector<corpus::Utterance>& utterances,
                          const model::ModelParams& params,
                          const DecodeConfig& cfg);

// Text table: one row per accent and an Avg. row, one column per report.
std::string render_table(const std::vector<std::string>& column_names,
                         const std::vector<const EvalReport*>& reports);

}  // namespace scasr::decode
