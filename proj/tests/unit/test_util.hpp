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

#include <cmath>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "scasr/rng.hpp"
#include "scasr/tensor.hpp"

namespace scasr::testing {

struct Input {
  num::Shape shape;
  std::vector<double> values;
};

inline std::vector<double> gaussian(std::size_t n, Rng& rng, double sd = 1.0) {
  std::normal_distribution<double> d(0.0, sd);
  std::vector<double> v(n);
  for (double& x : v) x = d(rng);
  return v;
}

inline std::vector<double> uniform(std::size_t n, Rng& rng, double lo,
                                   double hi) {
  std::uniform_real_distribution<double> d(lo, hi);
  std::vector<double> v(n);
  for (double& x : v) x = d(rng);
  return v;
}

using Builder =
    std::function<num::Tensor(num::Graph&, const std::vector<num::Tensor>&)>;

// ||analytic - numeric|| / max(||analytic||, ||numeric||) per input, using
// central differences. Returns the worst input.
inline double gradcheck(const Builder& build, const std::vector<Input>& inputs,
                        double step = 1e-6) {
  std::vector<std::vector<double>> analytic;
  {
    num::Graph g;
    std::vector<num::Tensor> vars;
    for (const auto& in : inputs) vars.push_back(g.variable(in.shape, in.values));
    g.backward(build(g, vars));
    for (const auto& v : vars) {
      analytic.emplace_back(v.grad().begin(), v.grad().end());
    }
  }
  auto eval = [&](std::size_t which, std::size_t idx, double delta) {
    num::Graph g;
    std::vector<num::Tensor> vars;
    for (std::size_t k = 0; k < inputs.size(); ++k) {
      std::vector<double> vals = inputs[k].values;
      if (k == which) vals[idx] += delta;
      vars.push_back(g.constant(inputs[k].shape, std::move(vals)));
    }
    return build(g, vars).item();
  };
  double worst = 0.0;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    double diff = 0.0, na = 0.0, nn = 0.0;
    for (std::size_t i = 0; i < inputs[k].values.size(); ++i) {
      const double numeric =
          (eval(k, i, step) - eval(k, i, -step)) / (2.0 * step);
      diff += (numeric - analytic[k][i]) * (numeric - analytic[k][i]);
      na += analytic[k][i] * analytic[k][i];
      nn += numeric * numeric;
    }
    const double denom = std::sqrt(std::max(na, nn));
    const double rel = denom > 0.0 ? std::sqrt(diff) / denom : std::sqrt(diff);
    worst = std::max(worst, rel);
  }
  return worst;
}

// Fresh directory under the build tree's temp area.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("scasr_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace scasr::testing
