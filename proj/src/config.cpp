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

#include "scasr/config.hpp"

#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <set>
#include <sstream>

#include "scasr/errors.hpp"
#include "scasr/io.hpp"

namespace scasr::config {

namespace {

using Cfg = ExperimentConfig;

struct Field {
  std::string section;
  std::string key;
  std::function<void(Cfg&, const std::string&)> set;
  std::function<std::string(const Cfg&)> get;
};

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(v);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::uint64_t to_u64(const std::string& name, const std::string& v) {
  std::uint64_t x = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw ConfigError(name + ": expected a non-negative integer, got '" + v + "'");
  }
  return x;
}

int to_int(const std::string& name, const std::string& v) {
  int x = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw ConfigError(name + ": expected an integer, got '" + v + "'");
  }
  return x;
}

double to_double(const std::string& name, const std::string& v) {
  char* end = nullptr;
  const double x = std::strtod(v.c_str(), &end);
  if (v.empty() || end != v.c_str() + v.size()) {
    throw ConfigError(name + ": expected a number, got '" + v + "'");
  }
  return x;
}

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& s : items) out += (out.empty() ? "" : ", ") + s;
  return out;
}

template <typename Get>
Field size_field(std::string section, std::string key, Get ref) {
  const std::string name = section + "." + key;
  return {section, key,
          [=](Cfg& c, const std::string& v) { ref(c) = to_u64(name, v); },
          [=](const Cfg& c) { return std::to_string(ref(const_cast<Cfg&>(c))); }};
}

template <typename Get>
Field int_field(std::string section, std::string key, Get ref) {
  const std::string name = section + "." + key;
  return {section, key,
          [=](Cfg& c, const std::string& v) { ref(c) = to_int(name, v); },
          [=](const Cfg& c) { return std::to_string(ref(const_cast<Cfg&>(c))); }};
}

template <typename Get>
Field double_field(std::string section, std::string key, Get ref) {
  const std::string name = section + "." + key;
  return {section, key,
          [=](Cfg& c, const std::string& v) { ref(c) = to_double(name, v); },
          [=](const Cfg& c) { return fmt_double(ref(const_cast<Cfg&>(c))); }};
}

using StageRef = train::TrainConfig& (*)(Cfg&);

void add_stage(std::vector<Field>& f, const std::string& s, StageRef st) {
  f.push_back(double_field(s, "learning_rate", [st](Cfg& c) -> double& { return st(c).learning_rate; }));
  f.push_back(size_field(s, "batch_size", [st](Cfg& c) -> std::size_t& { return st(c).batch_size; }));
  f.push_back(size_field(s, "max_epochs", [st](Cfg& c) -> std::size_t& { return st(c).max_epochs; }));
  f.push_back(size_field(s, "max_steps", [st](Cfg& c) -> std::size_t& { return st(c).max_steps; }));
  f.push_back(size_field(s, "patience", [st](Cfg& c) -> std::size_t& { return st(c).patience; }));
  f.push_back(size_field(s, "eval_interval", [st](Cfg& c) -> std::size_t& { return st(c).eval_interval; }));
  f.push_back(size_field(s, "val_limit", [st](Cfg& c) -> std::size_t& { return st(c).val_limit; }));
  f.push_back(double_field(s, "beta1", [st](Cfg& c) -> double& { return st(c).adam.beta1; }));
  f.push_back(double_field(s, "beta2", [st](Cfg& c) -> double& { return st(c).adam.beta2; }));
  f.push_back(double_field(s, "eps", [st](Cfg& c) -> double& { return st(c).adam.eps; }));
  f.push_back(double_field(s, "tau", [st](Cfg& c) -> double& { return st(c).tau; }));
  f.push_back(size_field(s, "pair_cap", [st](Cfg& c) -> std::size_t& { return st(c).pair_cap; }));
  f.push_back(size_field(s, "seed", [st](Cfg& c) -> std::uint64_t& { return st(c).seed; }));
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    std::vector<Field> f;
    const std::string c = "corpus";
#define CORPUS(kind, name) \
  f.push_back(kind##_field(c, #name, [](Cfg& x) -> auto& { return x.corpus.name; }))
    CORPUS(size, dim);
    CORPUS(size, lexicon_size);
    CORPUS(int, word_min_len);
    CORPUS(int, word_max_len);
    CORPUS(int, sentence_min_words);
    CORPUS(int, sentence_max_words);
    CORPUS(double, punctuation_rate);
    CORPUS(size, train_accents);
    CORPUS(size, val_accents);
    CORPUS(size, test_accents);
    CORPUS(size, train_per_accent);
    CORPUS(size, val_per_accent);
    CORPUS(size, test_per_accent);
    CORPUS(double, train_strength);
    CORPUS(double, val_strength);
    CORPUS(double, test_strength);
    CORPUS(double, bias_scale);
    CORPUS(int, min_duration);
    CORPUS(int, max_duration);
    CORPUS(double, noise_sigma);
    CORPUS(size, seed);
    CORPUS(size, threads);
#undef CORPUS
    const std::string a = "augment";
#define AUG(kind, name) \
  f.push_back(kind##_field(a, #name, [](Cfg& x) -> auto& { return x.matrix.augment.name; }))
    AUG(double, noise_prob);
    AUG(double, noise_scale);
    AUG(double, specaug_prob);
    AUG(int, freq_mask_width);
    AUG(int, time_mask_width);
    AUG(double, altvoice_prob);
    AUG(double, altvoice_strength);
#undef AUG
    const std::string m = "model";
    f.push_back(size_field(m, "dim", [](Cfg& x) -> auto& { return x.matrix.model.dim; }));
    f.push_back(size_field(m, "hidden", [](Cfg& x) -> auto& { return x.matrix.model.hidden; }));
    f.push_back(size_field(m, "embed", [](Cfg& x) -> auto& { return x.matrix.model.embed; }));
    f.push_back(size_field(m, "proj", [](Cfg& x) -> auto& { return x.matrix.model.proj; }));

    add_stage(f, "pretrain", [](Cfg& x) -> train::TrainConfig& { return x.matrix.pretrain; });
    add_stage(f, "finetune", [](Cfg& x) -> train::TrainConfig& { return x.matrix.finetune; });
    add_stage(f, "fullshot", [](Cfg& x) -> train::TrainConfig& { return x.matrix.fullshot; });

    const std::string d = "decode";
    f.push_back(size_field(d, "beam_size", [](Cfg& x) -> auto& { return x.matrix.decode.beam_size; }));
    f.push_back(double_field(d, "lambda", [](Cfg& x) -> auto& { return x.matrix.decode.lambda; }));
    f.push_back(size_field(d, "max_len", [](Cfg& x) -> auto& { return x.matrix.decode.max_len; }));

    const std::string x = "matrix";
    f.push_back({x, "modes",
                 [](Cfg& cfg, const std::string& v) {
                   cfg.matrix.modes.clear();
                   for (const auto& s : split_list(v)) {
                     cfg.matrix.modes.push_back(train::parse_mode(s));
                   }
                 },
                 [](const Cfg& cfg) {
                   std::vector<std::string> names;
                   for (auto mo : cfg.matrix.modes) {
                     names.emplace_back(train::mode_name(mo));
                   }
                   return join(names);
                 }});
    f.push_back({x, "augmentations",
                 [](Cfg& cfg, const std::string& v) {
                   cfg.matrix.augmentations = split_list(v);
                 },
                 [](const Cfg& cfg) { return join(cfg.matrix.augmentations); }});
    f.push_back({x, "shots",
                 [](Cfg& cfg, const std::string& v) {
                   cfg.matrix.shots = split_list(v);
                 },
                 [](const Cfg& cfg) { return join(cfg.matrix.shots); }});
    f.push_back({x, "seeds",
                 [](Cfg& cfg, const std::string& v) {
                   cfg.matrix.seeds.clear();
                   for (const auto& s : split_list(v)) {
                     cfg.matrix.seeds.push_back(to_u64("matrix.seeds", s));
                   }
                 },
                 [](const Cfg& cfg) {
                   std::vector<std::string> s;
                   for (auto v : cfg.matrix.seeds) s.push_back(std::to_string(v));
                   return join(s);
                 }});
    f.push_back(size_field(x, "holdout_per_accent", [](Cfg& c2) -> auto& { return c2.matrix.holdout_per_accent; }));
    f.push_back(size_field(x, "jobs", [](Cfg& c2) -> auto& { return c2.matrix.jobs; }));
    // "mode/aug: lr, mode/aug: lr"
    f.push_back({x, "pretrain_lr_overrides",
                 [](Cfg& cfg, const std::string& v) {
                   cfg.matrix.pretrain_lr_overrides.clear();
                   for (const auto& item : split_list(v)) {
                     const auto colon = item.find(':');
                     if (colon == std::string::npos) {
                       throw ConfigError(
                           "matrix.pretrain_lr_overrides: expected mode/aug: lr");
                     }
                     cfg.matrix.pretrain_lr_overrides[trim(item.substr(0, colon))] =
                         to_double("matrix.pretrain_lr_overrides",
                                   trim(item.substr(colon + 1)));
                   }
                 },
                 [](const Cfg& cfg) {
                   std::vector<std::string> s;
                   for (const auto& [k, v] : cfg.matrix.pretrain_lr_overrides) {
                     s.push_back(k + ": " + fmt_double(v));
                   }
                   return join(s);
                 }});

    f.push_back({"output", "dir",
                 [](Cfg& cfg, const std::string& v) { cfg.output_dir = v; },
                 [](const Cfg& cfg) { return cfg.output_dir.string(); }});
    return f;
  }();
  return table;
}

}  // namespace

void ExperimentConfig::validate() const {
  corpus.validate();
  if (matrix.model.dim != corpus.dim) {
    throw ConfigError("model.dim: " + std::to_string(matrix.model.dim) +
                      " does not match corpus.dim " + std::to_string(corpus.dim));
  }
  matrix.model.validate();
  matrix.augment.validate(corpus.dim);
  matrix.pretrain.validate();
  matrix.finetune.validate();
  matrix.fullshot.validate();
  matrix.decode.validate();
  matrix.validate(corpus);
}

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg;
  std::set<std::string> sections;
  for (const auto& f : fields()) sections.insert(f.section);
  std::istringstream in(text);
  std::string line;
  std::string section;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find_first_of("#;");
    std::string s = trim(hash == std::string::npos ? line : line.substr(0, hash));
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') {
        throw ConfigError("line " + std::to_string(lineno) + ": bad section header");
      }
      section = trim(s.substr(1, s.size() - 2));
      if (!sections.count(section)) {
        throw ConfigError("unknown section '" + section + "'");
      }
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(s.substr(0, eq));
    const std::string value = trim(s.substr(eq + 1));
    if (section.empty()) {
      throw ConfigError("key '" + key + "' outside any section");
    }
    const Field* found = nullptr;
    for (const auto& f : fields()) {
      if (f.section == section && f.key == key) found = &f;
    }
    if (!found) throw ConfigError("unknown key '" + section + "." + key + "'");
    found->set(cfg, value);
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = io::read_file(path);
  } catch (const Error& e) {
    throw ConfigError(std::string("cannot read config: ") + e.what());
  }
  return parse_config(text);
}

std::string render_config(const ExperimentConfig& cfg) {
  std::ostringstream os;
  std::string section;
  for (const auto& f : fields()) {
    if (f.section != section) {
      if (!section.empty()) os << '\n';
      section = f.section;
      os << '[' << section << "]\n";
    }
    os << f.key << " = " << f.get(cfg) << '\n';
  }
  return os.str();
}

}  // namespace scasr::config
