// Copyright 2026 The Text2Scene Authors.
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

#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "text2scene/autograd.hpp"
#include "text2scene/layers.hpp"

namespace text2scene {

inline constexpr int kDefaultMaxTokens = 50;

// Lowercases, drops punctuation and splits on whitespace. Apostrophes are
// removed without splitting ("mike's" -> "mikes"). Throws invalid-argument
// when nothing remains.
std::vector<std::string> tokenize(std::string_view text);

/// Word list with a reserved unknown-word id 0.
class WordVocabulary {
 public:
  static constexpr int kUnk = 0;
  static constexpr const char* kUnkToken = "<unk>";

  WordVocabulary();
  explicit WordVocabulary(const std::vector<std::string>& words);

  int add(const std::string& word);
  int id(std::string_view word) const;  // kUnk when absent
  const std::string& word(int id) const { return words_.at(id); }
  int size() const { return static_cast<int>(words_.size()); }
  const std::vector<std::string>& words() const { return words_; }

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, int> lookup_;
};

struct TokenSeq {
  std::vector<int> ids;
  std::vector<std::string> words;
  bool truncated = false;
};

// Tokenizes and maps to ids, keeping at most max_tokens words.
TokenSeq to_token_seq(std::string_view text, const WordVocabulary& vocab,
                      int max_tokens = kDefaultMaxTokens);

struct WordEmbeddings {
  WordVocabulary vocab;
  int dim = 0;
  // Row-major [vocab.size(), dim]; row 0 is the unk vector.
  std::vector<double> table;
};

/// Reads "word v1 v2 ..." lines. The dimension comes from the first line.
/// When `restrict_to` is non-empty only those words are kept. The unk row
/// is the mean of every loaded vector.
WordEmbeddings load_embeddings(const std::filesystem::path& path,
                               const std::vector<std::string>& restrict_to = {});
WordEmbeddings parse_embeddings(std::string_view text,
                                const std::vector<std::string>& restrict_to = {});

struct TextFeatures {
  // [M, 2H + E]: rows are [forward; backward; embedding].
  nn::Var features;
  // [2H]: final forward state and final backward state.
  nn::Var last_hidden;
  int length = 0;
};

/// Single-layer bidirectional GRU over word embeddings.
class TextEncoder {
 public:
  TextEncoder() = default;
  TextEncoder(nn::ParameterStore& store, const std::string& name, int vocab_size,
              int embedding_dim, int hidden_size, nn::Rng& rng);

  // Copies pretrained vectors into the embedding table.
  void load_embeddings(const WordEmbeddings& embeddings);

  TextFeatures encode(const std::vector<int>& ids) const;

  int hidden_size() const { return forward_.hidden_size; }
  int embedding_dim() const { return embedding_.dim(1); }
  int vocab_size() const { return embedding_.dim(0); }
  int feature_width() const { return 2 * hidden_size() + embedding_dim(); }
  const nn::Var& embedding() const { return embedding_; }
  const nn::GruCell& forward_cell() const { return forward_; }
  const nn::GruCell& backward_cell() const { return backward_; }

 private:
  nn::Var embedding_;
  nn::GruCell forward_;
  nn::GruCell backward_;
};

}  // namespace text2scene
