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

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace scasr::vocab {

// 26 letters followed by 7 non-letter labels.
inline constexpr int kSize = 33;
inline constexpr int kNumLetters = 26;
inline constexpr int kSpace = 26;
inline constexpr int kApostrophe = 27;
inline constexpr int kHyphen = 28;
inline constexpr int kSos = 29;
inline constexpr int kEos = 30;
inline constexpr int kPad = 31;
inline constexpr int kUnk = 32;
// Labels that can appear in text and therefore have an acoustic prototype.
inline constexpr int kNumRenderable = 29;

inline constexpr bool is_letter(int label) {
  return label >= 0 && label < kNumLetters;
}

// Throws VocabularyError for characters outside a-z, space, ' and -.
int index_of(char c);
// Printable form; special labels render as <sos>, <eos>, <pad>, <unk>.
std::string label_name(int label);
char char_of(int label);  // only for renderable labels

// SOS + characters + EOS.
std::vector<int> encode_target(std::string_view text);
// Drops SOS/EOS/PAD/UNK and joins the rest.
std::string detokenize(std::span<const int> labels);

}  // namespace scasr::vocab
