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
#include <cmath>

#include "doctest.h"
#include "gradcheck.hpp"
#include "text2scene/error.hpp"
#include "text2scene/text_encoder.hpp"

using namespace text2scene;

TEST_CASE("tokenize") {
  CHECK(tokenize("Mike's dog,  is HAPPY!") ==
        std::vector<std::string>{"mikes", "dog", "is", "happy"});
  CHECK(tokenize("left,right") == std::vector<std::string>{"left", "right"});
  CHECK_THROWS_AS(tokenize(" ..! "), Error);
  CHECK_THROWS_AS(tokenize(""), Error);
}

TEST_CASE("word vocabulary and token sequences") {
  WordVocabulary v({"a", "dog", "a"});
  CHECK(v.size() == 3);
  CHECK(v.id("dog") == 2);
  CHECK(v.id("cat") == WordVocabulary::kUnk);
  const TokenSeq s = to_token_seq("A cat and a dog", v, 4);
  CHECK(s.truncated);
  CHECK(s.ids == std::vector<int>{1, 0, 0, 1});
  CHECK(!to_token_seq("a dog", v).truncated);
  CHECK_THROWS_AS(to_token_seq("a", v, 0), Error);
}

TEST_CASE("embedding files") {
  const WordEmbeddings e = parse_embeddings("dog 1 2\ncat 3 4\ndog 9 9\nsun 5 0\n", {"dog", "sun"});
  CHECK(e.dim == 2);
  CHECK(e.vocab.words() == std::vector<std::string>{"<unk>", "dog", "sun"});
  // The unk row is the mean of all four loaded lines.
  CHECK(e.table[0] == doctest::Approx(4.5));
  CHECK(e.table[1] == doctest::Approx(3.75));
  CHECK(e.table[2] == 1);
  CHECK(e.table[5] == 0);
  CHECK_THROWS_AS(parse_embeddings("a 1 2\nb 1\n"), Error);
  CHECK_THROWS_AS(parse_embeddings("a 1 x\n"), Error);
  CHECK_THROWS_AS(parse_embeddings("\n"), Error);
  CHECK_THROWS_AS(load_embeddings("/nonexistent/vectors.txt"), Error);
}

TEST_CASE("bidirectional encoder layout") {
  nn::Rng rng(5);
  nn::ParameterStore store;
  TextEncoder enc(store, "text", 6, 3, 4, rng);
  CHECK(enc.feature_width() == 11);
  const std::vector<int> ids{1, 4, 2};
  const TextFeatures f = enc.encode(ids);
  CHECK(f.features.shape() == nn::Shape{3, 11});
  CHECK(f.last_hidden.shape() == nn::Shape{8});

  // Recompute both directions with the cells directly.
  const auto word = [&](int id) {
    std::vector<double> v(enc.embedding().value().begin() + id * 3,
                          enc.embedding().value().begin() + id * 3 + 3);
    return nn::Var::constant({3}, v);
  };
  std::vector<nn::Var> fwd(3), bwd(3);
  nn::Var h = nn::Var::zeros({4});
  for (int i = 0; i < 3; ++i) fwd[i] = h = enc.forward_cell().step(word(ids[i]), h);
  h = nn::Var::zeros({4});
  for (int i = 2; i >= 0; --i) bwd[i] = h = enc.backward_cell().step(word(ids[i]), h);
  for (int i = 0; i < 3; ++i) {
    for (int k = 0; k < 4; ++k) {
      CHECK(f.features[i * 11 + k] == doctest::Approx(fwd[i][k]));
      CHECK(f.features[i * 11 + 4 + k] == doctest::Approx(bwd[i][k]));
    }
    for (int k = 0; k < 3; ++k) CHECK(f.features[i * 11 + 8 + k] == doctest::Approx(word(ids[i])[k]));
  }
  for (int k = 0; k < 4; ++k) {
    CHECK(f.last_hidden[k] == doctest::Approx(fwd[2][k]));
    CHECK(f.last_hidden[4 + k] == doctest::Approx(bwd[0][k]));
  }
  CHECK_THROWS_AS(enc.encode({}), Error);
  CHECK_THROWS_AS(enc.encode({6}), Error);
}

TEST_CASE("encoder gradients") {
  nn::Rng rng(9);
  nn::ParameterStore store;
  TextEncoder enc(store, "text", 5, 3, 3, rng);
  const auto r = testing::check_gradients(
      [&] { return nn::sum(nn::square(enc.encode({1, 3, 2, 3}).features)); }, store.trainable(),
      1e-6, 12);
  CHECK(r.max_relative_error < 1e-4);
}

TEST_CASE("pretrained vectors load into the table") {
  nn::Rng rng(2);
  nn::ParameterStore store;
  const WordEmbeddings e = parse_embeddings("dog 1 2\nsun 3 4\n");
  TextEncoder enc(store, "text", 3, 2, 2, rng);
  enc.load_embeddings(e);
  CHECK(enc.embedding().value() == std::vector<double>{2, 3, 1, 2, 3, 4});
  TextEncoder wrong(store, "other", 4, 2, 2, rng);
  CHECK_THROWS_AS(wrong.load_embeddings(e), Error);
}
