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

#include "scasr/embed.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "scasr/errors.hpp"
#include "scasr/rng.hpp"

namespace scasr::embed {

EmbeddingDump export_embeddings(const std::vector<corpus::Utterance>& utterances,
                                const model::ModelParams& params,
                                std::size_t limit, std::uint64_t seed) {
  std::vector<std::size_t> idx(utterances.size());
  std::iota(idx.begin(), idx.end(), 0);
  if (limit < idx.size()) {
    Rng rng(derive_seed(seed, "embed-sample"));
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(limit);
    std::sort(idx.begin(), idx.end());
  }
  EmbeddingDump dump;
  dump.hidden = params.config.hidden;
  dump.checkpoint_id = params.hash();
  for (std::size_t k : idx) {
    const auto& u = utterances[k];
    num::Graph g;
    const model::BoundParams bound = model::bind(g, params, false);
    const model::ForwardResult fr = model::forward_teacher_forced(
        bound, model::frames_tensor(g, u.frames), u.target);
    const std::size_t H = fr.h.shape().cols();
    const auto& h = fr.h.data();
    for (std::size_t i = 0; i < fr.length; ++i) {
      const int tok = u.target[i + 1];
      if (!vocab::is_letter(tok)) continue;
      EmbeddingRow row;
      row.utterance_id = u.id;
      row.accent_id = u.accent_id;
      row.position = i;
      row.letter = vocab::char_of(tok);
      row.h.assign(h.begin() + i * H, h.begin() + (i + 1) * H);
      dump.rows.push_back(std::move(row));
    }
  }
  return dump;
}

namespace {

using Dense = std::vector<std::vector<double>>;

// Cyclic Jacobi rotations on a symmetric matrix. Returns eigenvalues; the
// columns of v are the eigenvectors.
std::vector<double> jacobi_eigen(Dense a, Dense& v) {
  const std::size_t n = a.size();
  v.assign(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) v[i][i] = 1.0;
  double total = 0.0;
  for (const auto& r : a) {
    for (double x : r) total += x * x;
  }
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) off += a[p][q] * a[p][q];
    }
    if (off <= 1e-30 * total || off == 0.0) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (a[p][q] == 0.0) continue;
        const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a[k][p], akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a[p][k], aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v[k][p], vkq = v[k][q];
          v[k][p] = c * vkp - s * vkq;
          v[k][q] = s * vkp + c * vkq;
        }
      }
    }
  }
  std::vector<double> eig(n);
  for (std::size_t i = 0; i < n; ++i) eig[i] = a[i][i];
  return eig;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

Dense unit_rows(const Dense& x) {
  Dense u = x;
  for (auto& r : u) {
    const double n = std::sqrt(dot(r, r));
    if (!(n > num::kNormEpsilon)) {
      throw DegenerateVectorError("embedding with zero norm");
    }
    for (double& v : r) v /= n;
  }
  return u;
}

}  // namespace

Pca2 pca2(const std::vector<std::vector<double>>& data) {
  const std::size_t n = data.size();
  if (n < 3) throw DegenerateDataError("pca2 needs at least 3 rows");
  const std::size_t d = data[0].size();
  if (d < 2) throw DegenerateDataError("pca2 needs at least 2 columns");
  std::vector<double> mu(d, 0.0);
  for (const auto& r : data) {
    if (r.size() != d) throw DimensionError("pca2: ragged rows");
    for (std::size_t j = 0; j < d; ++j) mu[j] += r[j];
  }
  for (double& m : mu) m /= static_cast<double>(n);
  Dense cov(d, std::vector<double>(d, 0.0));
  for (const auto& r : data) {
    for (std::size_t i = 0; i < d; ++i) {
      const double ci = r[i] - mu[i];
      for (std::size_t j = i; j < d; ++j) cov[i][j] += ci * (r[j] - mu[j]);
    }
  }
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = i; j < d; ++j) {
      cov[i][j] /= static_cast<double>(n - 1);
      cov[j][i] = cov[i][j];
    }
  }
  Dense vecs;
  const std::vector<double> eig = jacobi_eigen(cov, vecs);
  std::vector<std::size_t> order(d);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return eig[a] > eig[b]; });
  const double top = eig[order[0]];
  if (!(top > 0.0) || !(eig[order[1]] > 1e-12 * top)) {
    throw DegenerateDataError("pca2: data has rank < 2");
  }
  Pca2 out;
  for (int c = 0; c < 2; ++c) {
    std::vector<double> w(d);
    for (std::size_t i = 0; i < d; ++i) w[i] = vecs[i][order[c]];
    for (double x : w) {
      if (x != 0.0) {
        if (x < 0.0) {
          for (double& y : w) y = -y;
        }
        break;
      }
    }
    out.components[c] = std::move(w);
    out.variances[c] = eig[order[c]];
  }
  out.points.reserve(n);
  std::vector<double> centred(d);
  for (const auto& r : data) {
    for (std::size_t j = 0; j < d; ++j) centred[j] = r[j] - mu[j];
    out.points.push_back({dot(centred, out.components[0]),
                          dot(centred, out.components[1])});
  }
  return out;
}

Pca2 pca2(const EmbeddingDump& dump) {
  std::vector<std::vector<double>> data;
  data.reserve(dump.rows.size());
  for (const auto& r : dump.rows) data.push_back(r.h);
  return pca2(data);
}

double silhouette(const std::vector<std::vector<double>>& x,
                  const std::vector<int>& labels) {
  if (x.size() != labels.size()) {
    throw DimensionError("silhouette: label count mismatch");
  }
  std::map<int, std::size_t> sizes;
  for (int l : labels) ++sizes[l];
  std::size_t usable = 0;
  for (const auto& [l, c] : sizes) usable += c >= 2 ? 1 : 0;
  if (usable < 2) {
    throw MetricError("silhouette needs two classes with at least two rows");
  }
  const Dense u = unit_rows(x);
  std::vector<int> cls;
  std::map<int, std::size_t> slot;
  for (const auto& [l, c] : sizes) slot.emplace(l, slot.size());
  for (int l : labels) cls.push_back(static_cast<int>(slot[l]));
  std::vector<std::size_t> count(slot.size(), 0);
  for (int c : cls) ++count[c];

  const std::size_t n = u.size();
  double total = 0.0;
  std::vector<double> sums(slot.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (count[cls[i]] < 2) continue;  // singleton: s = 0
    std::fill(sums.begin(), sums.end(), 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      sums[cls[j]] += 1.0 - dot(u[i], u[j]);
    }
    const double a = sums[cls[i]] / static_cast<double>(count[cls[i]] - 1);
    double b = INFINITY;
    for (std::size_t c = 0; c < sums.size(); ++c) {
      if (static_cast<int>(c) == cls[i]) continue;
      b = std::min(b, sums[c] / static_cast<double>(count[c]));
    }
    const double m = std::max(a, b);
    if (m > 0.0) total += (b - a) / m;
  }
  return total / static_cast<double>(n);
}

ClusterMetrics cluster_metrics(const EmbeddingDump& dump) {
  std::vector<std::vector<double>> x;
  std::vector<int> labels;
  for (const auto& r : dump.rows) {
    x.push_back(r.h);
    labels.push_back(r.letter);
  }
  ClusterMetrics m;
  m.silhouette = silhouette(x, labels);
  const Dense u = unit_rows(x);
  std::map<char, std::pair<double, std::size_t>> intra;
  double cross = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    for (std::size_t j = i + 1; j < u.size(); ++j) {
      if (labels[i] != labels[j]) continue;
      const double s = dot(u[i], u[j]);
      auto& acc = intra[dump.rows[i].letter];
      acc.first += s;
      acc.second += 1;
      if (dump.rows[i].accent_id != dump.rows[j].accent_id) {
        cross += s;
        ++m.cross_accent_pairs;
      }
    }
  }
  for (const auto& [letter, acc] : intra) {
    m.intra_class_similarity[letter] =
        acc.first / static_cast<double>(acc.second);
  }
  if (m.cross_accent_pairs > 0) {
    m.cross_accent_similarity =
        cross / static_cast<double>(m.cross_accent_pairs);
  }
  return m;
}

namespace {

std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string dump_csv(const EmbeddingDump& dump) {
  std::ostringstream os;
  os << "# hidden=" << dump.hidden << ";count=" << dump.rows.size()
     << ";checkpoint=" << dump.checkpoint_id << '\n';
  os << "utterance_id,accent_id,position,letter";
  for (std::size_t j = 0; j < dump.hidden; ++j) os << ",h" << j;
  os << '\n';
  for (const auto& r : dump.rows) {
    os << r.utterance_id << ',' << r.accent_id << ',' << r.position << ','
       << r.letter;
    for (double v : r.h) os << ',' << g17(v);
    os << '\n';
  }
  return os.str();
}

std::string pca_csv(const EmbeddingDump& dump, const Pca2& pca) {
  if (pca.points.size() != dump.rows.size()) {
    throw DimensionError("pca_csv: projection does not match dump");
  }
  std::ostringstream os;
  os << "x,y,letter,accent\n";
  for (std::size_t i = 0; i < dump.rows.size(); ++i) {
    os << g17(pca.points[i][0]) << ',' << g17(pca.points[i][1]) << ','
       << dump.rows[i].letter << ',' << dump.rows[i].accent_id << '\n';
  }
  return os.str();
}

}  // namespace scasr::embed
