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

#include "scasr/decode.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include "scasr/errors.hpp"
#include "scasr/vocab.hpp"

namespace scasr::decode {

NetworkModel::NetworkModel(const model::ModelParams& params,
                           const Matrix& frames)
    : graph_(std::make_unique<num::Graph>()) {
  bound_ = model::bind(*graph_, params, /*trainable=*/false);
  cache_ = model::make_cache(
      model::encode(bound_, model::frames_tensor(*graph_, frames)));
  states_.push_back(model::initial_state(*graph_, params.config));
}

int NetworkModel::initial_state() { return 0; }

std::pair<int, std::vector<double>> NetworkModel::step(int state, int prev) {
  model::StepResult r =
      model::decode_step(bound_, cache_, prev, states_.at(state));
  states_.push_back(r.h);
  return {static_cast<int>(states_.size() - 1), r.logprobs.to_vector()};
}

std::size_t word_count(const std::vector<int>& tokens) {
  return split_words(vocab::detokenize(tokens)).size();
}

double hypothesis_score(const std::vector<int>& tokens, double logprob,
                        double lambda) {
  return logprob +
         lambda * std::sqrt(static_cast<double>(word_count(tokens)));
}

namespace {

struct Candidate {
  std::vector<int> tokens;
  double logprob;
  double score;
  int state;
};

// Higher score first; ties go to the shorter, then lexicographically
// smaller token sequence.
bool better(const Candidate& a, const Candidate& b) {
  if (a.score != b.score) return a.score > b.score;
  if (a.tokens.size() != b.tokens.size()) {
    return a.tokens.size() < b.tokens.size();
  }
  return a.tokens < b.tokens;
}

}  // namespace

DecodeResult beam_search(SequenceModel& model, std::size_t beam_size,
                         double lambda, std::size_t max_len) {
  if (beam_size < 1) throw ContractError("beam_size must be >= 1");
  if (!(lambda >= 0.0)) throw ContractError("lambda must be >= 0");
  if (max_len < 1) throw ContractError("max_len must be >= 1");

  std::vector<BeamHypothesis> active{
      {{vocab::kSos}, 0.0, model.initial_state(), false}};
  std::vector<Candidate> finished;
  std::vector<Candidate> cands;
  for (std::size_t len = 1; len <= max_len && !active.empty(); ++len) {
    cands.clear();
    for (const auto& hyp : active) {
      auto [next_state, logprobs] = model.step(hyp.state, hyp.tokens.back());
      for (int v = 0; v < static_cast<int>(logprobs.size()); ++v) {
        Candidate c;
        c.tokens = hyp.tokens;
        c.tokens.push_back(v);
        c.logprob = hyp.logprob + logprobs[v];
        c.score = hypothesis_score(c.tokens, c.logprob, lambda);
        c.state = next_state;
        cands.push_back(std::move(c));
      }
    }
    const std::size_t keep = std::min(beam_size, cands.size());
    std::partial_sort(cands.begin(), cands.begin() + keep, cands.end(), better);
    active.clear();
    for (std::size_t i = 0; i < keep; ++i) {
      Candidate& c = cands[i];
      if (c.tokens.back() == vocab::kEos || len == max_len) {
        finished.push_back(std::move(c));
      } else {
        active.push_back({std::move(c.tokens), c.logprob, c.state, false});
      }
    }
  }
  const Candidate& best = *std::min_element(
      finished.begin(), finished.end(),
      [](const Candidate& a, const Candidate& b) { return better(a, b); });
  return {best.tokens, best.logprob, best.score};
}

DecodeResult beam_search(const Matrix& frames, const model::ModelParams& params,
                         std::size_t beam_size, double lambda,
                         std::size_t max_len) {
  NetworkModel m(params, frames);
  return beam_search(m, beam_size, lambda, max_len);
}

DecodeResult greedy_decode(SequenceModel& model, std::size_t max_len) {
  if (max_len < 1) throw ContractError("max_len must be >= 1");
  DecodeResult r;
  r.tokens = {vocab::kSos};
  int state = model.initial_state();
  for (std::size_t len = 1; len <= max_len; ++len) {
    auto [next, logprobs] = model.step(state, r.tokens.back());
    const auto it = std::max_element(logprobs.begin(), logprobs.end());
    const int tok = static_cast<int>(it - logprobs.begin());
    r.tokens.push_back(tok);
    r.logprob += *it;
    state = next;
    if (tok == vocab::kEos) break;
  }
  r.score = r.logprob;
  return r;
}

std::vector<std::string> split_words(const std::string& s) {
  std::vector<std::string> words;
  std::istringstream in(s);
  std::string w;
  while (in >> w) words.push_back(w);
  return words;
}

std::size_t word_edit_distance(const std::vector<std::string>& ref,
                               const std::vector<std::string>& hyp) {
  // Two-row DP over the (ref.size()+1) x (hyp.size()+1) table.
  std::vector<std::size_t> prev(hyp.size() + 1), cur(hyp.size() + 1);
  for (std::size_t j = 0; j <= hyp.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= ref.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= hyp.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
      cur[j] = std::min({sub, prev[j] + 1, cur[j - 1] + 1});
    }
    std::swap(prev, cur);
  }
  return prev[hyp.size()];
}

double wer(const std::string& reference, const std::string& hypothesis) {
  const auto ref = split_words(reference);
  if (ref.empty()) throw UndefinedMetricError("empty reference");
  const auto hyp = split_words(hypothesis);
  return 100.0 * static_cast<double>(word_edit_distance(ref, hyp)) /
         static_cast<double>(ref.size());
}

void DecodeConfig::validate() const {
  if (beam_size < 1) throw ConfigError("decode.beam_size: must be >= 1");
  if (!(lambda >= 0.0)) throw ConfigError("decode.lambda: must be >= 0");
}

const AccentWer& EvalReport::accent(const std::string& id) const {
  for (const auto& a : accents) {
    if (a.accent == id) return a;
  }
  throw ContractError("report has no accent " + id);
}

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

std::string EvalReport::to_csv() const {
  std::ostringstream os;
  os << '#';
  bool first = true;
  for (const auto& [k, v] : metadata) {
    os << (first ? " " : ";") << k << '=' << v;
    first = false;
  }
  os << '\n' << "accent,n_utts,wer\n";
  std::size_t total = 0;
  for (const auto& a : accents) {
    os << a.accent << ',' << a.n_utts << ',' << fmt(a.wer) << '\n';
    total += a.n_utts;
  }
  os << "avg," << total << ',' << fmt(macro_wer) << '\n';
  return os.str();
}

EvalReport aggregate(std::vector<UtteranceResult> results) {
  EvalReport r;
  std::map<std::string, AccentWer> by_accent;
  for (const auto& u : results) {
    auto& a = by_accent[u.accent_id];
    a.accent = u.accent_id;
    a.n_utts += 1;
    a.errors += u.errors;
    a.ref_words += u.ref_words;
  }
  double acc = 0.0;
  for (auto& [id, a] : by_accent) {
    a.wer = 100.0 * static_cast<double>(a.errors) /
            static_cast<double>(a.ref_words);
    acc += a.wer;
    r.accents.push_back(a);
  }
  if (!r.accents.empty()) r.macro_wer = acc / static_cast<double>(r.accents.size());
  r.utterances = std::move(results);
  return r;
}

EvalReport evaluate_split(const std::vector<corpus::Utterance>& utterances,
                          const Transcriber& transcribe) {
  if (utterances.empty()) throw ContractError("evaluate_split: no utterances");
  std::vector<UtteranceResult> results;
  results.reserve(utterances.size());
  for (const auto& u : utterances) {
    UtteranceResult r;
    r.id = u.id;
    r.accent_id = u.accent_id;
    r.reference = u.text;
    r.hypothesis = transcribe(u);
    const auto ref = split_words(r.reference);
    if (ref.empty()) throw UndefinedMetricError("utterance " + u.id);
    r.ref_words = ref.size();
    r.errors = word_edit_distance(ref, split_words(r.hypothesis));
    results.push_back(std::move(r));
  }
  return aggregate(std::move(results));
}

EvalReport evaluate_split(const std::vector<corpus::Utterance>& utterances,
                          const model::ModelParams& params,
                          const DecodeConfig& cfg) {
  cfg.validate();
  return evaluate_split(utterances, [&](const corpus::Utterance& u) {
    const std::size_t max_len =
        cfg.max_len ? cfg.max_len : 2 * (u.text.size() + 1);
    NetworkModel m(params, u.frames);
    DecodeResult d = beam_search(m, cfg.beam_size, cfg.lambda, max_len);
    return vocab::detokenize(d.tokens);
  });
}

std::string render_table(const std::vector<std::string>& column_names,
                         const std::vector<const EvalReport*>& reports) {
  std::set<std::string> ids;
  for (const auto* r : reports) {
    for (const auto& a : r->accents) ids.insert(a.accent);
  }
  std::size_t w = 8;
  for (const auto& c : column_names) w = std::max(w, c.size() + 2);
  std::ostringstream os;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%-10s", "Accent");
  os << buf;
  for (const auto& c : column_names) {
    std::snprintf(buf, sizeof buf, "%*s", static_cast<int>(w), c.c_str());
    os << buf;
  }
  os << '\n';
  auto cell = [&](double v) {
    std::snprintf(buf, sizeof buf, "%*.2f", static_cast<int>(w), v);
    os << buf;
  };
  for (const auto& id : ids) {
    std::snprintf(buf, sizeof buf, "%-10s", id.c_str());
    os << buf;
    for (const auto* r : reports) {
      const AccentWer* found = nullptr;
      for (const auto& a : r->accents) {
        if (a.accent == id) found = &a;
      }
      if (found) {
        cell(found->wer);
      } else {
        std::snprintf(buf, sizeof buf, "%*s", static_cast<int>(w), "-");
        os << buf;
      }
    }
    os << '\n';
  }
  std::snprintf(buf, sizeof buf, "%-10s", "Avg.");
  os << buf;
  for (const auto* r : reports) cell(r->macro_wer);
  os << '\n';
  return os.str();
}

}  // namespace scasr::decode
