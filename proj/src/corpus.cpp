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

#include "scasr/corpus.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>
#include <thread>

#include "scasr/errors.hpp"
#include "scasr/io.hpp"
#include "scasr/rng.hpp"

namespace scasr::corpus {

namespace {

std::vector<double> gaussian_vector(Rng& rng, std::size_t n) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = normal(rng);
  return v;
}

double norm(std::span<const double> v) {
  double ss = 0.0;
  for (double x : v) ss += x * x;
  return std::sqrt(ss);
}

double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

std::string padded(std::size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04zu", i);
  return buf;
}

}  // namespace

void CorpusConfig::validate() const {
  auto fail = [](const std::string& key, const std::string& why) {
    throw ConfigError("corpus." + key + ": " + why);
  };
  if (dim < 8) fail("dim", "must be >= 8");
  if (lexicon_size == 0) fail("lexicon_size", "must be positive");
  if (word_min_len < 1 || word_max_len < word_min_len) {
    fail("word_min_len", "need 1 <= word_min_len <= word_max_len");
  }
  if (sentence_min_words < 1 || sentence_max_words < sentence_min_words) {
    fail("sentence_min_words",
         "need 1 <= sentence_min_words <= sentence_max_words");
  }
  if (punctuation_rate < 0.0 || punctuation_rate > 1.0) {
    fail("punctuation_rate", "must be in [0, 1]");
  }
  if (punctuation_rate > 0.0 && word_max_len < 3) {
    fail("punctuation_rate", "punctuated words need word_max_len >= 3");
  }
  double capacity = 0.0;
  for (int len = word_min_len; len <= word_max_len; ++len) {
    capacity += std::pow(26.0, len);
  }
  if (static_cast<double>(lexicon_size) > capacity / 2) {
    fail("lexicon_size", "too large for the word length range");
  }
  if (train_accents == 0 || val_accents == 0 || test_accents == 0) {
    fail("train_accents", "every split needs at least one accent");
  }
  if (train_per_accent == 0 || val_per_accent == 0 || test_per_accent == 0) {
    fail("train_per_accent", "every accent needs at least one sentence");
  }
  if (train_strength < 0 || val_strength < 0 || test_strength < 0) {
    fail("train_strength", "accent strengths must be >= 0");
  }
  if (bias_scale < 0) fail("bias_scale", "must be >= 0");
  if (min_duration < 1 || max_duration < min_duration) {
    fail("min_duration", "need 1 <= min_duration <= max_duration");
  }
  if (!(noise_sigma >= 0)) fail("noise_sigma", "must be >= 0");
  if (threads == 0) fail("threads", "must be >= 1");
}

const AccentProfile& CorpusSplit::accent(const std::string& id) const {
  for (const auto& a : accents) {
    if (a.id == id) return a;
  }
  throw ContractError("unknown accent " + id);
}

const std::vector<Utterance>& CorpusSplit::split(const std::string& name) const {
  if (name == "train") return train;
  if (name == "validation") return validation;
  if (name == "test") return test;
  throw UsageError("unknown split '" + name + "'");
}

Prototypes build_prototypes(std::uint64_t seed, std::size_t dim) {
  if (dim < 8) throw GenerationError("prototype dimension must be >= 8");
  Rng rng(derive_seed(seed, "prototypes"));
  for (int attempt = 0; attempt < 100; ++attempt) {
    Prototypes protos;
    for (auto& p : protos) {
      p = gaussian_vector(rng, dim);
      const double n = norm(p);
      for (double& x : p) x /= n;
    }
    bool ok = true;
    for (std::size_t i = 0; i < protos.size() && ok; ++i) {
      for (std::size_t j = i + 1; j < protos.size(); ++j) {
        if (dot(protos[i], protos[j]) >= 0.9) {
          ok = false;
          break;
        }
      }
    }
    if (ok) return protos;
  }
  throw GenerationError("no prototype set with pairwise cosine < 0.9 after "
                        "100 draws");
}

double spectral_norm_estimate(const Matrix& m, int iterations) {
  std::vector<double> v(m.cols, 1.0 / std::sqrt(static_cast<double>(m.cols)));
  std::vector<double> mv(m.rows);
  double sigma = 0.0;
  for (int it = 0; it < iterations; ++it) {
    for (std::size_t r = 0; r < m.rows; ++r) mv[r] = dot(m.row(r), v);
    std::fill(v.begin(), v.end(), 0.0);
    for (std::size_t r = 0; r < m.rows; ++r) {
      for (std::size_t c = 0; c < m.cols; ++c) v[c] += m(r, c) * mv[r];
    }
    const double n = norm(v);
    if (n == 0.0) return 0.0;
    sigma = std::sqrt(n);
    for (double& x : v) x /= n;
  }
  return sigma;
}

double condition_number(const Matrix& m) {
  Eigen::MatrixXd e(m.rows, m.cols);
  for (std::size_t r = 0; r < m.rows; ++r) {
    for (std::size_t c = 0; c < m.cols; ++c) e(r, c) = m(r, c);
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(e);
  const auto& s = svd.singularValues();
  if (s(s.size() - 1) == 0.0) return INFINITY;
  return s(0) / s(s.size() - 1);
}

AccentProfile make_accent(std::string id, std::size_t dim, double strength,
                          double bias_scale, int min_duration,
                          int max_duration, std::uint64_t seed) {
  AccentProfile a;
  a.id = std::move(id);
  a.strength = strength;
  a.min_duration = min_duration;
  a.max_duration = max_duration;
  a.seed = seed;
  Rng rng(seed);
  for (int attempt = 0; attempt < 100; ++attempt) {
    Matrix r(dim, dim);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (double& x : r.data) x = normal(rng);
    const double s = spectral_norm_estimate(r);
    a.transform = Matrix(dim, dim);
    for (std::size_t i = 0; i < dim; ++i) {
      for (std::size_t j = 0; j < dim; ++j) {
        a.transform(i, j) = (i == j ? 1.0 : 0.0) + strength * r(i, j) / s;
      }
    }
    auto dir = gaussian_vector(rng, dim);
    const double n = norm(dir);
    a.bias.resize(dim);
    for (std::size_t i = 0; i < dim; ++i) {
      a.bias[i] = bias_scale * strength * dir[i] / n;
    }
    if (condition_number(a.transform) < 1e6) return a;
  }
  throw GenerationError("accent " + a.id + ": no well-conditioned transform");
}

AccentProfile identity_accent(std::size_t dim, int min_duration,
                              int max_duration) {
  AccentProfile a;
  a.id = "identity";
  a.transform = Matrix(dim, dim);
  for (std::size_t i = 0; i < dim; ++i) a.transform(i, i) = 1.0;
  a.bias.assign(dim, 0.0);
  a.min_duration = min_duration;
  a.max_duration = max_duration;
  return a;
}

Utterance render_utterance(const std::string& text, const AccentProfile& accent,
                           const Prototypes& prototypes, double noise_sigma,
                           std::uint64_t seed) {
  if (text.empty()) throw VocabularyError("empty utterance text");
  const std::size_t dim = accent.bias.size();
  Utterance u;
  u.text = text;
  u.accent_id = accent.id;
  u.target = vocab::encode_target(text);  // validates every character

  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> rows;
  auto emit_noise_frame = [&](std::vector<double>& base) {
    for (std::size_t d = 0; d < dim; ++d) {
      rows.push_back(base[d] + noise_sigma * normal(rng));
    }
  };
  std::vector<double> zero(dim, 0.0);
  std::vector<double> clean(dim);
  for (char c : text) {
    const int label = vocab::index_of(c);
    if (label == vocab::kSpace) {
      emit_noise_frame(zero);
      emit_noise_frame(zero);
      continue;
    }
    const auto& p = prototypes[label];
    for (std::size_t i = 0; i < dim; ++i) {
      clean[i] = dot(accent.transform.row(i), p) + accent.bias[i];
    }
    const int len = uniform_int(rng, accent.min_duration, accent.max_duration);
    for (int f = 0; f < len; ++f) emit_noise_frame(clean);
  }
  u.frames.rows = rows.size() / dim;
  u.frames.cols = dim;
  u.frames.data = std::move(rows);
  return u;
}

namespace {

std::vector<std::string> build_lexicon(const CorpusConfig& cfg) {
  Rng rng(derive_seed(cfg.seed, "lexicon"));
  std::set<std::string> seen;
  std::vector<std::string> words;
  while (words.size() < cfg.lexicon_size) {
    const int len = uniform_int(rng, cfg.word_min_len, cfg.word_max_len);
    std::string w;
    for (int i = 0; i < len; ++i) {
      w.push_back(static_cast<char>('a' + uniform_int(rng, 0, 25)));
    }
    if (bernoulli(rng, cfg.punctuation_rate) && len >= 3) {
      const int pos = uniform_int(rng, 1, len - 2);
      w[pos] = bernoulli(rng, 0.5) ? '\'' : '-';
    }
    if (seen.insert(w).second) words.push_back(w);
  }
  return words;
}

std::string sample_sentence(const CorpusConfig& cfg,
                            const std::vector<std::string>& lexicon,
                            std::uint64_t seed) {
  Rng rng(seed);
  const int n = uniform_int(rng, cfg.sentence_min_words, cfg.sentence_max_words);
  std::string s;
  for (int i = 0; i < n; ++i) {
    if (i) s.push_back(' ');
    s += lexicon[uniform_int(rng, 0, static_cast<int>(lexicon.size()) - 1)];
  }
  return s;
}

struct SplitSpec {
  const char* split;
  const char* prefix;
  std::size_t accents;
  std::size_t per_accent;
  double strength;
};

std::vector<SplitSpec> split_specs(const CorpusConfig& cfg) {
  return {{"train", "train", cfg.train_accents, cfg.train_per_accent,
           cfg.train_strength},
          {"validation", "val", cfg.val_accents, cfg.val_per_accent,
           cfg.val_strength},
          {"test", "test", cfg.test_accents, cfg.test_per_accent,
           cfg.test_strength}};
}

// Everything except the rendered utterances.
CorpusSplit skeleton(const CorpusConfig& cfg) {
  cfg.validate();
  CorpusSplit c;
  c.config = cfg;
  c.prototypes = build_prototypes(cfg.seed, cfg.dim);
  c.lexicon = build_lexicon(cfg);
  for (const auto& spec : split_specs(cfg)) {
    for (std::size_t k = 0; k < spec.accents; ++k) {
      std::string id = spec.prefix + std::to_string(k);
      c.accents.push_back(make_accent(
          id, cfg.dim, spec.strength, cfg.bias_scale, cfg.min_duration,
          cfg.max_duration, derive_seed(cfg.seed, std::string("accent/") + id)));
      auto& ids = spec.split == std::string("train") ? c.train_accents
                  : spec.split == std::string("validation") ? c.val_accents
                                                           : c.test_accents;
      ids.push_back(id);
    }
  }
  return c;
}

std::vector<Utterance>& split_ref(CorpusSplit& c, const std::string& name) {
  if (name == "train") return c.train;
  if (name == "validation") return c.validation;
  return c.test;
}

}  // namespace

AccentProfile reserved_voice(const CorpusConfig& config, double strength) {
  return make_accent("voice", config.dim, strength, config.bias_scale,
                     config.min_duration, config.max_duration,
                     derive_seed(config.seed, "reserved-voice"));
}

CorpusSplit generate_corpus(const CorpusConfig& config) {
  CorpusSplit c = skeleton(config);

  struct Job {
    std::vector<Utterance>* out;
    std::size_t slot;
    const AccentProfile* accent;
    std::size_t index;
  };
  std::vector<Job> jobs;
  for (const auto& spec : split_specs(config)) {
    auto& out = split_ref(c, spec.split);
    out.resize(spec.accents * spec.per_accent);
    std::size_t slot = 0;
    for (std::size_t k = 0; k < spec.accents; ++k) {
      const auto& acc = c.accent(spec.prefix + std::to_string(k));
      for (std::size_t j = 0; j < spec.per_accent; ++j) {
        jobs.push_back({&out, slot++, &acc, j});
      }
    }
  }

  auto run = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const Job& job = jobs[i];
      const std::string& id = job.accent->id;
      const std::string text = sample_sentence(
          config, c.lexicon, derive_seed(config.seed, "text/" + id, job.index));
      Utterance u = render_utterance(
          text, *job.accent, c.prototypes, config.noise_sigma,
          derive_seed(config.seed, "render/" + id, job.index));
      u.id = id + "_" + padded(job.index);
      (*job.out)[job.slot] = std::move(u);
    }
  };
  const std::size_t nthreads = std::min(config.threads, jobs.size());
  if (nthreads <= 1) {
    run(0, jobs.size());
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (jobs.size() + nthreads - 1) / nthreads;
    for (std::size_t t = 0; t < nthreads; ++t) {
      const std::size_t b = t * chunk;
      const std::size_t e = std::min(jobs.size(), b + chunk);
      if (b < e) pool.emplace_back(run, b, e);
    }
    for (auto& th : pool) th.join();
  }
  for (const auto& spec : split_specs(config)) {
    for (auto& u : split_ref(c, spec.split)) u.split = spec.split;
  }
  return c;
}

double frame_rms(const std::vector<Utterance>& utterances) {
  double ss = 0.0;
  std::size_t n = 0;
  for (const auto& u : utterances) {
    for (double x : u.frames.data) ss += x * x;
    n += u.frames.data.size();
  }
  if (n == 0) throw ContractError("frame_rms over no frames");
  return std::sqrt(ss / static_cast<double>(n));
}

void write_frames(const std::filesystem::path& path, const Matrix& frames) {
  io::ByteWriter w;
  w.u32(static_cast<std::uint32_t>(frames.rows));
  w.u32(static_cast<std::uint32_t>(frames.cols));
  w.u32(kFramesVersion);
  w.f64s(frames.data);
  io::write_file(path, w.bytes());
}

Matrix read_frames(const std::filesystem::path& path) {
  io::ByteReader r(io::read_file(path), path.string());
  Matrix m;
  m.rows = r.u32();
  m.cols = r.u32();
  const std::uint32_t version = r.u32();
  if (version != kFramesVersion) {
    throw LoadError(path.string() + ": unsupported frames version " +
                    std::to_string(version));
  }
  m.data = r.f64s(m.rows * m.cols);
  if (!r.done()) throw LoadError(path.string() + ": trailing bytes");
  return m;
}

void write_corpus(const CorpusSplit& corpus, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir / "frames");
  std::ostringstream manifest;
  for (const auto* split : {&corpus.train, &corpus.validation, &corpus.test}) {
    for (const auto& u : *split) {
      const std::string rel = "frames/" + u.id + ".f64";
      write_frames(dir / rel, u.frames);
      nlohmann::json rec = {{"id", u.id},
                            {"accent_id", u.accent_id},
                            {"split", u.split},
                            {"text", u.text},
                            {"frames_path", rel}};
      manifest << rec.dump() << '\n';
    }
  }
  io::write_file(dir / "manifest.jsonl", manifest.str());
}

CorpusSplit load_corpus(const std::filesystem::path& dir,
                        const CorpusConfig& config) {
  CorpusSplit c = skeleton(config);
  std::istringstream in(io::read_file(dir / "manifest.jsonl"));
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw LoadError("manifest line " + std::to_string(lineno) + ": " +
                      e.what());
    }
    Utterance u;
    try {
      u.id = rec.at("id").get<std::string>();
      u.accent_id = rec.at("accent_id").get<std::string>();
      u.split = rec.at("split").get<std::string>();
      u.text = rec.at("text").get<std::string>();
      u.frames = read_frames(dir / rec.at("frames_path").get<std::string>());
    } catch (const nlohmann::json::exception& e) {
      throw LoadError("manifest line " + std::to_string(lineno) + ": " +
                      e.what());
    }
    if (u.frames.cols != config.dim) {
      throw LoadError("utterance " + u.id + " has frame dim " +
                      std::to_string(u.frames.cols) + ", config says " +
                      std::to_string(config.dim));
    }
    u.target = vocab::encode_target(u.text);
    if (u.split != "train" && u.split != "validation" && u.split != "test") {
      throw LoadError("utterance " + u.id + " has unknown split " + u.split);
    }
    split_ref(c, u.split).push_back(std::move(u));
  }
  return c;
}

std::string corpus_hash(const std::filesystem::path& dir) {
  const std::string manifest = io::read_file(dir / "manifest.jsonl");
  std::uint64_t h = io::fnv1a(manifest);
  std::istringstream in(manifest);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto rec = nlohmann::json::parse(line);
    h = io::fnv1a(io::read_file(dir / rec.at("frames_path").get<std::string>()),
                  h);
  }
  return io::hex64(h);
}

}  // namespace scasr::corpus
