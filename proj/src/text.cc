// Copyright 2026 The trajmotion Authors
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

#include "trajmotion/text.h"

#include <cctype>
#include <cmath>
#include <cstdint>

#include "trajmotion/errors.h"

namespace trajmotion {
namespace {

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace

TextEncoder::TextEncoder(std::vector<std::string> vocabulary, int embed_dim)
    : embed_dim_(embed_dim) {
  if (embed_dim < 1) throw ConfigError("text embedding dimension must be positive");
  vocabulary_.push_back("<unk>");
  for (auto& word : vocabulary) {
    if (word.empty() || index_.count(word)) continue;
    index_[word] = static_cast<int>(vocabulary_.size());
    vocabulary_.push_back(std::move(word));
  }
  table_.resize(static_cast<Eigen::Index>(vocabulary_.size()), embed_dim);
  const double scale = std::sqrt(3.0);
  for (size_t i = 0; i < vocabulary_.size(); ++i) {
    std::uint64_t state = fnv1a(vocabulary_[i]);
    for (int d = 0; d < embed_dim; ++d) {
      const double u = static_cast<double>(splitmix64(state) >> 11) * 0x1.0p-53;
      table_(static_cast<Eigen::Index>(i), d) = scale * (2.0 * u - 1.0);
    }
  }
}

std::vector<int> TextEncoder::tokenize(const std::string& prompt, bool strict) const {
  std::vector<int> ids;
  std::string word;
  auto flush = [&] {
    if (word.empty()) return;
    auto it = index_.find(word);
    if (it != index_.end()) {
      ids.push_back(it->second);
    } else if (strict) {
      throw TokenizerError("word '" + word + "' is not in the vocabulary");
    } else {
      ids.push_back(kUnknownToken);
    }
    word.clear();
  };
  for (char c : prompt) {
    if (std::isalpha(static_cast<unsigned char>(c))) {
      word.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    } else {
      flush();
    }
  }
  flush();
  return ids;
}

TextCondition TextEncoder::encode(const std::vector<int>& token_ids) const {
  TextCondition out;
  out.token_ids = token_ids;
  out.embedding = Eigen::VectorXd::Zero(embed_dim_);
  if (token_ids.empty()) return out;
  for (int id : token_ids) {
    if (id < 0 || id >= static_cast<int>(vocabulary_.size())) {
      throw TokenizerError("token id out of range");
    }
    out.embedding += table_.row(id).transpose();
  }
  out.embedding /= static_cast<double>(token_ids.size());
  return out;
}

TextCondition TextEncoder::encode(const std::string& prompt, bool strict) const {
  return encode(tokenize(prompt, strict));
}

}  // namespace trajmotion
