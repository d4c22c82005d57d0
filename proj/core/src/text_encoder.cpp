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
#include "text2scene/text_encoder.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "text2scene/error.hpp"

namespace text2scene {

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string current;
  for (const char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isspace(c)) {
      if (!current.empty()) out.push_back(std::move(current));
      current.clear();
    } else if (c >= 0x80 || std::isalnum(c)) {
      current.push_back(static_cast<char>(std::tolower(c)));
    } else if (c != '\'') {
      // Other punctuation separates words ("left,right" -> two tokens).
      if (!current.empty()) out.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) out.push_back(std::move(current));
  require(!out.empty(), ErrorCode::kInvalidArgument, "text contains no words");
  return out;
}

WordVocabulary::WordVocabulary() { add(kUnkToken); }

WordVocabulary::WordVocabulary(const std::vector<std::string>& words) : WordVocabulary() {
  for (const auto& w : words) add(w);
}

int WordVocabulary::add(const std::string& word) {
  auto it = lookup_.find(word);
  if (it != lookup_.end()) return it->second;
  const int id = size();
  words_.push_back(word);
  lookup_.emplace(word, id);
  return id;
}

int WordVocabulary::id(std::string_view word) const {
  auto it = lookup_.find(std::string(word));
  return it == lookup_.end() ? kUnk : it->second;
}

TokenSeq to_token_seq(std::string_view text, const WordVocabulary& vocab, int max_tokens) {
  require(max_tokens >= 1, ErrorCode::kInvalidArgument, "max_tokens must be positive");
  TokenSeq seq;
  seq.words = tokenize(text);
  if (static_cast<int>(seq.words.size()) > max_tokens) {
    seq.words.resize(max_tokens);
    seq.truncated = true;
  }
  for (const auto& w : seq.words) seq.ids.push_back(vocab.id(w));
  return seq;
}

WordEmbeddings parse_embeddings(std::string_view text, const std::vector<std::string>& restrict_to) {
  const std::unordered_set<std::string> keep(restrict_to.begin(), restrict_to.end());
  WordEmbeddings e;
  std::vector<double> rows;
  std::vector<double> mean;
  std::size_t loaded = 0;
  std::istringstream in{std::string(text)};
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    std::istringstream fields(line);
    std::string word;
    if (!(fields >> word)) continue;
    std::vector<double> v;
    double x = 0;
    while (fields >> x) v.push_back(x);
    require(fields.eof(), ErrorCode::kParseError,
            "embeddings:" + std::to_string(number) + ": non-numeric value");
    if (e.dim == 0) {
      require(!v.empty(), ErrorCode::kParseError, "embeddings:1: no vector values");
      e.dim = static_cast<int>(v.size());
      mean.assign(e.dim, 0.0);
    }
    require(static_cast<int>(v.size()) == e.dim, ErrorCode::kParseError,
            "embeddings:" + std::to_string(number) + ": expected " + std::to_string(e.dim) +
                " values, got " + std::to_string(v.size()));
    for (int i = 0; i < e.dim; ++i) mean[i] += v[i];
    ++loaded;
    if (!keep.empty() && !keep.count(word)) continue;
    if (word == WordVocabulary::kUnkToken) continue;
    const int before = e.vocab.size();
    if (e.vocab.add(word) != before) continue;  // first occurrence wins
    rows.insert(rows.end(), v.begin(), v.end());
  }
  require(loaded > 0, ErrorCode::kParseError, "embedding file holds no vectors");
  for (auto& m : mean) m /= static_cast<double>(loaded);
  e.table = mean;
  e.table.insert(e.table.end(), rows.begin(), rows.end());
  return e;
}

WordEmbeddings load_embeddings(const std::filesystem::path& path,
                               const std::vector<std::string>& restrict_to) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::kIoError, "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_embeddings(ss.str(), restrict_to);
  } catch (const Error& err) {
    fail(err.code(), path.string() + ": " + err.what());
  }
}

TextEncoder::TextEncoder(nn::ParameterStore& store, const std::string& name, int vocab_size,
                         int embedding_dim, int hidden_size, nn::Rng& rng)
    : forward_(store, name + ".forward", embedding_dim, hidden_size, rng),
      backward_(store, name + ".backward", embedding_dim, hidden_size, rng) {
  embedding_ = store.create_uniform(name + ".embedding", {vocab_size, embedding_dim}, 0.5, rng);
}

void TextEncoder::load_embeddings(const WordEmbeddings& embeddings) {
  require(embeddings.dim == embedding_dim() && embeddings.vocab.size() == vocab_size(),
          ErrorCode::kInvalidArgument,
          "embedding table is [" + std::to_string(embeddings.vocab.size()) + ", " +
              std::to_string(embeddings.dim) + "], encoder expects [" +
              std::to_string(vocab_size()) + ", " + std::to_string(embedding_dim()) + "]");
  embedding_.mutable_value() = embeddings.table;
}

TextFeatures TextEncoder::encode(const std::vector<int>& ids) const {
  require(!ids.empty(), ErrorCode::kInvalidArgument, "encode: empty token sequence");
  for (int id : ids) {
    require(id >= 0 && id < vocab_size(), ErrorCode::kInvalidArgument,
            "encode: token id " + std::to_string(id) + " outside embedding table");
  }
  const int m = static_cast<int>(ids.size());
  const int e = embedding_dim();
  const nn::Var x = nn::gather_rows(embedding_, ids);
  std::vector<nn::Var> words(m);
  for (int i = 0; i < m; ++i) words[i] = nn::reshape(nn::slice(x, i, i + 1), {e});

  std::vector<nn::Var> fwd(m), bwd(m);
  nn::Var h = nn::Var::zeros({hidden_size()});
  for (int i = 0; i < m; ++i) fwd[i] = h = forward_.step(words[i], h);
  h = nn::Var::zeros({hidden_size()});
  for (int i = m - 1; i >= 0; --i) bwd[i] = h = backward_.step(words[i], h);

  std::vector<nn::Var> rows;
  rows.reserve(3 * m);
  for (int i = 0; i < m; ++i) {
    rows.push_back(fwd[i]);
    rows.push_back(bwd[i]);
    rows.push_back(words[i]);
  }
  TextFeatures out;
  out.length = m;
  out.features = nn::reshape(nn::concat(rows), {m, feature_width()});
  out.last_hidden = nn::concat({fwd[m - 1], bwd[0]});
  return out;
}

}  // namespace text2scene
