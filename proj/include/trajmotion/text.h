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

#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

namespace trajmotion {

struct TextCondition {
  std::vector<int> token_ids;
  Eigen::VectorXd embedding;
};

// Frozen bag-of-words embedder over a closed vocabulary. Each token maps to a
// fixed pseudo-random vector derived from a hash of its spelling; a prompt is
// the mean of its token vectors. The empty prompt maps to the zero vector.
class TextEncoder {
 public:
  static constexpr int kUnknownToken = 0;

  TextEncoder(std::vector<std::string> vocabulary, int embed_dim);

  int embed_dim() const { return embed_dim_; }
  const std::vector<std::string>& vocabulary() const { return vocabulary_; }

  // Lowercases and splits on anything that is not a letter. Unknown words
  // throw TokenizerError when `strict`, otherwise map to kUnknownToken.
  std::vector<int> tokenize(const std::string& prompt, bool strict = true) const;

  TextCondition encode(const std::vector<int>& token_ids) const;
  TextCondition encode(const std::string& prompt, bool strict = true) const;

 private:
  std::vector<std::string> vocabulary_;  // index 0 is "<unk>"
  std::unordered_map<std::string, int> index_;
  int embed_dim_;
  Eigen::MatrixXd table_;  // (vocabulary size) x embed_dim
};

}  // namespace trajmotion
