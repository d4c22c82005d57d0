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
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "fixtures.hpp"
#include "text2scene/patch_embedding.hpp"
#include "text2scene/scene_io.hpp"
#include "text2scene_cli/cli.hpp"

using namespace text2scene;
namespace cli = text2scene::cli;

namespace {

struct Result {
  int code = 0;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  Result r;
  r.code = cli::run(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string field(const std::string& text, const std::string& line_prefix, const std::string& key) {
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind(line_prefix, 0) != 0) continue;
    const auto at = line.find(" " + key + "=");
    if (at == std::string::npos) continue;
    const auto begin = at + key.size() + 2;
    return line.substr(begin, line.find(' ', begin) - begin);
  }
  return {};
}

}  // namespace

TEST_CASE("usage errors exit with status 2") {
  CHECK(run({}).code == cli::kExitUsage);
  CHECK(run({"frobnicate"}).code == cli::kExitUsage);
  CHECK(run({"train", "--no-such-flag"}).code == cli::kExitUsage);
  CHECK(run({"train", "--task", "abstract"}).code == cli::kExitUsage);
  CHECK(run({"train", "--task", "abstract", "--data", "x", "--out", "y", "--set", "novalue"}).code ==
        cli::kExitUsage);
  CHECK(run({"--help"}).code == cli::kExitOk);
}

TEST_CASE("preprocess, train, generate, evaluate and inspect") {
  testing::TempDir dir;
  testing::write_abstract_fixture(dir / "raw", {.scenes = 12, .seed = 5});

  Result r = run({"preprocess", "--task", "abstract", "--data", (dir / "raw").string(), "--out",
                  (dir / "data").string()});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  CHECK(std::filesystem::exists(dir / "data" / "run.json"));
  const SceneFile train_file = read_scene_file(dir / "data" / "train.scn");
  CHECK(train_file.records.size() + read_scene_file(dir / "data" / "test.scn").records.size() +
            read_scene_file(dir / "data" / "val.scn").records.size() ==
        12);

  r = run({"train", "--task", "abstract", "--data", (dir / "data" / "train.scn").string(), "--out",
           (dir / "run").string(), "--epochs", "1", "--batch-size", "4", "--max-steps", "2",
           "--seed", "3"});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  CHECK(std::filesystem::exists(dir / "run" / "best.ckpt"));
  CHECK(std::filesystem::exists(dir / "run" / "train_log.jsonl"));
  CHECK(std::filesystem::exists(dir / "run" / "config.txt"));

  std::ofstream(dir / "input.txt") << "mike is happy and kicking.\n\nthere is a dog.\n";
  r = run({"generate", "--task", "abstract", "--checkpoint", (dir / "run" / "best.ckpt").string(),
           "--input", (dir / "input.txt").string(), "--out", (dir / "gen").string(),
           "--max-objects", "3", "--attention", (dir / "att.jsonl").string()});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const SceneFile gen = read_scene_file(dir / "gen" / "scenes.scn");
  CHECK(gen.records.size() == 2);
  CHECK(gen.header.seed == 3);
  CHECK(gen.header.config_hash.size() == 16);
  CHECK(std::filesystem::exists(dir / "gen" / "gen-0000.png"));
  CHECK(std::filesystem::exists(dir / "gen" / "gen-0001.png"));

  const std::string test_scn = (dir / "data" / "test.scn").string();
  r = run({"evaluate", test_scn, test_scn});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  CHECK(field(r.out, "corpus", "u_obj_precision") == "1.000000");
  CHECK(field(r.out, "corpus", "u_obj_recall") == "1.000000");
  CHECK(field(r.out, "corpus", "u_coord") == "1.000000");
  CHECK(r.out.rfind("# text2scene.metrics", 0) == 0);

  r = run({"inspect", (dir / "att.jsonl").string(), "--top-k", "2"});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  CHECK(r.out.find("kicking") != std::string::npos);

  std::ofstream(dir / "empty.txt") << "\n  \n";
  r = run({"generate", "--task", "abstract", "--checkpoint", (dir / "run" / "best.ckpt").string(),
           "--input", (dir / "empty.txt").string(), "--out", (dir / "gen2").string()});
  CHECK(r.code == cli::kExitUsage);

  // A missing path is a usage error; an unreadable file is a runtime failure.
  r = run({"generate", "--task", "abstract", "--checkpoint", (dir / "nope.ckpt").string(),
           "--input", (dir / "input.txt").string(), "--out", (dir / "gen3").string()});
  CHECK(r.code == cli::kExitUsage);
  std::ofstream(dir / "junk.ckpt") << "junk";
  r = run({"generate", "--task", "abstract", "--checkpoint", (dir / "junk.ckpt").string(),
           "--input", (dir / "input.txt").string(), "--out", (dir / "gen3").string()});
  CHECK(r.code == cli::kExitFailure);
  CHECK(!r.err.empty());
}

TEST_CASE("retrieve from a saved index") {
  testing::TempDir dir;
  const Vocabulary v = Vocabulary::for_task(TaskKind::kComposite);
  PatchIndex index;
  index.add(4, v.index("dog"), {0, 0, 1});
  index.add(9, v.index("dog"), {1, 0, 0});
  index.add(2, v.index("sky"), {1, 0, 0});
  index.save(dir / "index.tsv", v);
  Result r = run({"retrieve", "--index", (dir / "index.tsv").string(), "--category", "dog",
                  "--vector", "0.9,0,0.1"});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  CHECK(r.out.find("retrieved 9 ") != std::string::npos);
  r = run({"retrieve", "--index", (dir / "index.tsv").string(), "--category", "cat", "--patch", "4"});
  CHECK(r.code == cli::kExitFailure);
}
