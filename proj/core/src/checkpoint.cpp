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
#include "text2scene/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "json.hpp"
#include "text2scene/error.hpp"

namespace text2scene {

using nlohmann::json;

namespace {

constexpr char kMagic[8] = {'T', '2', 'S', 'C', 'K', 'P', 'T', '1'};

static_assert(std::endian::native == std::endian::little,
              "checkpoints are stored little-endian");

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Text2SceneModel& model,
                     const CheckpointMeta& meta) {
  KeyValues model_kv;
  model.config().write(model_kv);
  const Vocabulary& vocab = model.vocab();
  json categories = json::array(), persons = json::array(), stuff = json::array();
  for (int i = Vocabulary::kNumSpecial; i < vocab.size(); ++i) {
    categories.push_back(vocab.name(i));
    if (vocab.is_person(i)) persons.push_back(vocab.name(i));
    if (vocab.is_stuff(i)) stuff.push_back(vocab.name(i));
  }
  json params = json::array();
  for (const auto& [name, v] : model.parameters().entries()) {
    params.push_back({{"name", name}, {"shape", v.shape()}});
  }
  const json header = {
      {"task", std::string(to_string(model.config().task))},
      {"model", model_kv.serialize()},
      {"vocabulary", {{"categories", categories}, {"persons", persons}, {"stuff", stuff}}},
      {"words", model.words().words()},
      {"parameters", params},
      {"meta",
       {{"config_hash", meta.config_hash},
        {"seed", meta.seed},
        {"epoch", meta.epoch},
        {"metrics", meta.metrics},
        {"config", meta.config_snapshot}}},
  };
  const std::string text = header.dump();

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  // Write to a sibling file first so an interrupted save never leaves a
  // truncated checkpoint behind.
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    require(out.good(), ErrorCode::kIoError, "cannot write checkpoint " + tmp.string());
    out.write(kMagic, sizeof kMagic);
    const std::uint64_t length = text.size();
    out.write(reinterpret_cast<const char*>(&length), sizeof length);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const auto& [name, v] : model.parameters().entries()) {
      out.write(reinterpret_cast<const char*>(v.value().data()),
                static_cast<std::streamsize>(v.size() * sizeof(double)));
    }
    require(out.good(), ErrorCode::kIoError, "failed writing checkpoint " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorCode::kIoError, "cannot open checkpoint " + path.string());
  const auto corrupt = [&](const std::string& what) {
    fail(ErrorCode::kParseError, "checkpoint " + path.string() + ": " + what);
  };
  char magic[sizeof kMagic];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0) corrupt("bad magic");
  std::uint64_t length = 0;
  in.read(reinterpret_cast<char*>(&length), sizeof length);
  if (!in || length > (1ULL << 32)) corrupt("bad header length");
  std::string text(length, '\0');
  in.read(text.data(), static_cast<std::streamsize>(length));
  if (!in) corrupt("truncated header");

  LoadedCheckpoint result;
  try {
    const json header = json::parse(text);
    const TaskKind task = parse_task(header.at("task").get<std::string>());
    const ModelConfig config =
        ModelConfig::read(KeyValues::parse(header.at("model").get<std::string>(), "checkpoint"),
                          task);
    const json& v = header.at("vocabulary");
    Vocabulary vocab = Vocabulary::custom(task, v.at("categories").get<std::vector<std::string>>(),
                                          v.at("persons").get<std::vector<std::string>>(),
                                          v.at("stuff").get<std::vector<std::string>>());
    WordVocabulary words(header.at("words").get<std::vector<std::string>>());
    const json& m = header.at("meta");
    result.meta.config_hash = m.at("config_hash").get<std::string>();
    result.meta.seed = m.at("seed").get<std::uint64_t>();
    result.meta.epoch = m.at("epoch").get<int>();
    result.meta.metrics = m.at("metrics").get<std::map<std::string, double>>();
    result.meta.config_snapshot = m.at("config").get<std::string>();
    result.model = std::make_unique<Text2SceneModel>(config, std::move(vocab), std::move(words),
                                                     result.meta.seed);

    const auto& entries = result.model->parameters().entries();
    const json& params = header.at("parameters");
    if (params.size() != entries.size()) {
      corrupt("stores " + std::to_string(params.size()) + " tensors, model has " +
              std::to_string(entries.size()));
    }
    for (std::size_t i = 0; i < entries.size(); ++i) {
      const auto& [name, var] = entries[i];
      const std::string stored = params[i].at("name").get<std::string>();
      const auto shape = params[i].at("shape").get<nn::Shape>();
      if (stored != name || shape != var.shape()) {
        corrupt("tensor " + std::to_string(i) + " is " + stored + nn::shape_string(shape) +
                ", model expects " + name + nn::shape_string(var.shape()));
      }
      auto& values = const_cast<nn::Var&>(var).mutable_value();
      in.read(reinterpret_cast<char*>(values.data()),
              static_cast<std::streamsize>(values.size() * sizeof(double)));
      if (!in) corrupt("truncated tensor data");
    }
  } catch (const json::exception& e) {
    corrupt(std::string("malformed header: ") + e.what());
  }
  in.peek();
  if (!in.eof()) corrupt("trailing bytes");
  return result;
}

}  // namespace text2scene
