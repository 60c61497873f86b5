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

#include "scasr/vocab.hpp"

#include <cmath>

#include "scasr/errors.hpp"
#include "scasr/matrix.hpp"

namespace scasr {

double frobenius_distance(const Matrix& a, const Matrix& b) {
  if (a.rows != b.rows || a.cols != b.cols) {
    throw DimensionError("frobenius_distance: shape mismatch");
  }
  double ss = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const double d = a.data[i] - b.data[i];
    ss += d * d;
  }
  return std::sqrt(ss);
}

namespace vocab {

int index_of(char c) {
  if (c >= 'a' && c <= 'z') return c - 'a';
  switch (c) {
    case ' ': return kSpace;
    case '\'': return kApostrophe;
    case '-': return kHyphen;
    default: break;
  }
  throw VocabularyError(std::string("character '") + c +
                        "' is not in the vocabulary");
}

char char_of(int label) {
  if (is_letter(label)) return static_cast<char>('a' + label);
  switch (label) {
    case kSpace: return ' ';
    case kApostrophe: return '\'';
    case kHyphen: return '-';
    default: break;
  }
  throw VocabularyError("label " + std::to_string(label) +
                        " has no character form");
}

std::string label_name(int label) {
  switch (label) {
    case kSos: return "<sos>";
    case kEos: return "<eos>";
    case kPad: return "<pad>";
    case kUnk: return "<unk>";
    default: break;
  }
  if (label < 0 || label >= kSize) {
    throw VocabularyError("label " + std::to_string(label) + " out of range");
  }
  return std::string(1, char_of(label));
}

std::vector<int> encode_target(std::string_view text) {
  std::vector<int> out;
  out.reserve(text.size() + 2);
  out.push_back(kSos);
  for (char c : text) out.push_back(index_of(c));
  out.push_back(kEos);
  return out;
}

std::string detokenize(std::span<const int> labels) {
  std::string s;
  for (int l : labels) {
    if (l >= 0 && l < kNumRenderable) s.push_back(char_of(l));
  }
  return s;
}

}  // namespace vocab
}  // namespace scasr
