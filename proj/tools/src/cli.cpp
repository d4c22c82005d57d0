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
#include "text2scene_cli/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "text2scene/checkpoint.hpp"
#include "text2scene/config.hpp"
#include "text2scene/datasets.hpp"
#include "text2scene/error.hpp"
#include "text2scene/inference.hpp"
#include "text2scene/metrics.hpp"
#include "text2scene/scene_io.hpp"
#include "text2scene/training.hpp"

namespace text2scene::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Invalid invocations detected after flag parsing; reported with exit 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string config;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  std::string task;

  std::string data;
  std::string captions;
  std::string val;
  std::string out;
  std::string assets;
  std::string patch_db;
  std::string patch_index;
  std::string embeddings;
  std::string checkpoint;
  std::string input;
  std::string attention;
  std::string images;
  std::string category;
  std::string vector;
  std::optional<std::int64_t> patch;
  std::optional<int> epochs;
  std::optional<int> batch_size;
  std::optional<long> max_steps;
  std::optional<double> learning_rate;
  std::optional<int> max_objects;
  bool no_render = false;
  int top_k = 3;
  std::vector<std::string> positional;
};

// Effective configuration: defaults < config file < dedicated flags < --set.
struct RunConfig {
  KeyValues kv;
  std::string hash;
  std::uint64_t seed = 0;
  bool explicit_seed = false;
};

void set_if(KeyValues& kv, const std::string& key, const std::string& value) {
  if (!value.empty()) kv.set(key, value);
}

template <typename T>
void set_if(KeyValues& kv, const std::string& key, const std::optional<T>& value) {
  if (value) {
    std::ostringstream s;
    s.precision(17);
    s << *value;
    kv.set(key, s.str());
  }
}

RunConfig make_config(const Options& o) {
  RunConfig rc;
  if (!o.config.empty()) {
    if (!fs::is_regular_file(o.config)) throw UsageError("config file not found: " + o.config);
    rc.kv = KeyValues::load(o.config);
  }
  set_if(rc.kv, "task", o.task);
  set_if(rc.kv, "seed", o.seed);
  set_if(rc.kv, "data.path", o.data);
  set_if(rc.kv, "data.captions", o.captions);
  set_if(rc.kv, "data.val", o.val);
  set_if(rc.kv, "data.assets", o.assets);
  set_if(rc.kv, "data.patch_db", o.patch_db);
  set_if(rc.kv, "data.patch_index", o.patch_index);
  set_if(rc.kv, "data.embeddings", o.embeddings);
  set_if(rc.kv, "data.images", o.images);
  set_if(rc.kv, "checkpoint", o.checkpoint);
  set_if(rc.kv, "output.dir", o.out);
  set_if(rc.kv, "train.epochs", o.epochs);
  set_if(rc.kv, "train.batch_size", o.batch_size);
  set_if(rc.kv, "train.max_steps", o.max_steps);
  set_if(rc.kv, "optimizer.learning_rate", o.learning_rate);
  set_if(rc.kv, "generate.max_objects", o.max_objects);
  for (const auto& s : o.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) throw UsageError("--set expects KEY=VALUE, got '" + s + "'");
    auto trim = [](std::string v) {
      const auto b = v.find_first_not_of(" \t");
      const auto e = v.find_last_not_of(" \t");
      return b == std::string::npos ? std::string() : v.substr(b, e - b + 1);
    };
    rc.kv.set(trim(s.substr(0, eq)), trim(s.substr(eq + 1)));
  }
  rc.explicit_seed = rc.kv.has("seed");
  rc.seed = static_cast<std::uint64_t>(rc.kv.get_int("seed", 0));
  rc.kv.set("seed", std::to_string(rc.seed));
  rc.hash = fnv1a_hex(rc.kv.serialize());
  return rc;
}

TaskKind require_task(const RunConfig& rc) {
  const auto name = rc.kv.get("task");
  if (!name) throw UsageError("no task given (use --task or 'task' in the config)");
  try {
    return parse_task(*name);
  } catch (const Error&) {
    throw UsageError("unknown task '" + *name + "'");
  }
}

std::string require_key(const RunConfig& rc, const std::string& key, const std::string& flag) {
  const auto v = rc.kv.get(key);
  if (!v || v->empty()) throw UsageError("missing " + flag + " (config key '" + key + "')");
  return *v;
}

fs::path require_path(const RunConfig& rc, const std::string& key, const std::string& flag) {
  const fs::path p = require_key(rc, key, flag);
  if (!fs::exists(p)) throw UsageError(flag + ": no such file or directory: " + p.string());
  return p;
}

std::optional<fs::path> optional_path(const RunConfig& rc, const std::string& key,
                                      const std::string& flag) {
  const auto v = rc.kv.get(key);
  if (!v || v->empty()) return std::nullopt;
  if (!fs::exists(*v)) throw UsageError(flag + ": no such file or directory: " + *v);
  return fs::path(*v);
}

void write_run_info(const fs::path& path, const RunConfig& rc, const std::string& what) {
  std::ofstream(path) << json{{"format", "text2scene.run"}, {"output", what},
                              {"config_hash", rc.hash}, {"seed", rc.seed}}
                             .dump(2)
                      << "\n";
}

std::vector<TrainingExample> examples_from_scene_file(const SceneFile& file) {
  std::vector<TrainingExample> out;
  for (const auto& r : file.records) {
    TrainingExample e;
    e.id = r.id;
    e.caption = r.caption;
    e.scene = r.scene;
    out.push_back(std::move(e));
  }
  return out;
}

// A scene file, or for the abstract task a raw dataset directory.
std::vector<TrainingExample> load_examples(const fs::path& path, TaskKind task) {
  if (fs::is_directory(path)) {
    if (task != TaskKind::kAbstract) {
      throw UsageError("only abstract training data can be read from a dataset directory");
    }
    return parse_abstract(path).examples;
  }
  const SceneFile file = read_scene_file(path);
  require(file.header.task == task, ErrorCode::kInvalidArgument,
          path.string() + " holds " + std::string(to_string(file.header.task)) + " scenes");
  return examples_from_scene_file(file);
}

std::shared_ptr<const AssetLibrary> load_assets(const std::optional<fs::path>& manifest,
                                                const Vocabulary& vocab) {
  return std::make_shared<const AssetLibrary>(manifest ? AssetLibrary::load(*manifest, vocab)
                                                       : AssetLibrary::synthetic(vocab));
}

std::shared_ptr<CanvasBuilder> make_builder(const ModelConfig& config, const Vocabulary& vocab,
                                            const RunConfig& rc,
                                            std::shared_ptr<const PatchStore> patches) {
  auto builder = std::make_shared<CanvasBuilder>(config.task, vocab, config.canvas);
  if (config.task == TaskKind::kAbstract) {
    builder->set_assets(load_assets(optional_path(rc, "data.assets", "--assets"), vocab));
  }
  if (patches) builder->set_patches(std::move(patches));
  return builder;
}

// Commands ---------------------------------------------------------------------

int cmd_preprocess(const Options& o, std::ostream& out, std::ostream& err) {
  const RunConfig rc = make_config(o);
  const TaskKind task = require_task(rc);
  const fs::path data = require_path(rc, "data.path", "--data");
  const fs::path dir = require_key(rc, "output.dir", "--out");
  const Vocabulary vocab = Vocabulary::for_task(task);

  std::vector<TrainingExample> examples;
  SplitSpec split;
  if (task == TaskKind::kAbstract) {
    AbstractCorpus corpus = parse_abstract(data);
    if (corpus.dropped_empty) err << "dropped " << corpus.dropped_empty << " empty scenes\n";
    examples = std::move(corpus.examples);
    split = abstract_split(examples.size());
  } else {
    const fs::path captions = require_path(rc, "data.captions", "--captions");
    if (task == TaskKind::kLayout) {
      LayoutCorpus corpus = parse_layout(data, captions);
      for (const auto& w : corpus.warnings) err << "warning: " << w << "\n";
      examples = std::move(corpus.examples);
    } else {
      const PatchStore patches = read_patch_db(data, vocab);
      std::ifstream in(captions);
      require(in.good(), ErrorCode::kIoError, "cannot open " + captions.string());
      std::map<std::int64_t, ImageSize> sizes;
      std::map<std::int64_t, std::vector<std::string>> texts;
      try {
        const json j = json::parse(in);
        for (const auto& im : j.at("images")) {
          sizes[im.at("id").get<std::int64_t>()] = {im.at("width").get<int>(),
                                                    im.at("height").get<int>()};
        }
        for (const auto& a : j.at("annotations")) {
          texts[a.at("image_id").get<std::int64_t>()].push_back(a.at("caption").get<std::string>());
        }
      } catch (const json::exception& e) {
        fail(ErrorCode::kParseError, captions.string() + ": " + e.what());
      }
      examples = composite_examples(patches, sizes, texts, vocab);
    }
    std::set<std::int64_t> images;
    for (const auto& e : examples) images.insert(e.source_image);
    const std::size_t held = static_cast<std::size_t>(rc.kv.get_int(
        "preprocess.val_images", static_cast<std::int64_t>(images.size() / 10)));
    split = holdout_images(examples, std::min(held, images.size()));
  }
  require(!examples.empty(), ErrorCode::kInvalidArgument, "no usable examples in " + data.string());

  fs::create_directories(dir);
  const auto write = [&](const std::string& name, const std::vector<std::size_t>& idx) {
    SceneFile file;
    file.header = {task, rc.hash, rc.seed};
    for (std::size_t i : idx) {
      const auto& e = examples[i];
      SceneRecord r;
      r.id = e.id;
      r.caption = e.caption;
      r.tokens = tokenize(e.caption);
      r.scene = e.scene;
      file.records.push_back(std::move(r));
    }
    write_scene_file(dir / name, file, vocab);
    out << name << ": " << idx.size() << " scenes\n";
  };
  write("train.scn", split.train);
  write("val.scn", split.val);
  write("test.scn", split.test);
  write_run_info(dir / "run.json", rc, "preprocess");
  return kExitOk;
}

int cmd_train(const Options& o, std::ostream& out, std::ostream& err) {
  const RunConfig rc = make_config(o);
  const TaskKind task = require_task(rc);
  const fs::path data = require_path(rc, "data.path", "--data");
  const fs::path dir = require_key(rc, "output.dir", "--out");
  const auto val_path = optional_path(rc, "data.val", "--val");
  const Vocabulary vocab = Vocabulary::for_task(task);

  const std::vector<TrainingExample> train_set = load_examples(data, task);
  const std::vector<TrainingExample> val_set =
      val_path ? load_examples(*val_path, task) : std::vector<TrainingExample>{};
  require(!train_set.empty(), ErrorCode::kInvalidArgument, "training data is empty");

  ModelConfig model_config = ModelConfig::read(rc.kv, task);
  WordVocabulary words = caption_vocabulary(train_set);
  std::optional<WordEmbeddings> embeddings;
  if (const auto path = optional_path(rc, "data.embeddings", "--embeddings")) {
    embeddings = load_embeddings(*path, words.words());
    model_config.word_dim = embeddings->dim;
  }
  Text2SceneModel model(model_config, vocab, std::move(words), rc.seed);
  if (embeddings) model.text_encoder().load_embeddings(*embeddings);

  std::shared_ptr<const PatchStore> patches;
  if (task == TaskKind::kComposite) {
    patches = std::make_shared<const PatchStore>(
        read_patch_db(require_path(rc, "data.patch_db", "--patch-db"), vocab));
  }
  TrainingContext context{make_builder(model_config, vocab, rc, patches), patches};

  TrainConfig tc;
  tc.weights = LossWeights::read(rc.kv, task);
  tc.optimizer = OptimizerConfig::read(rc.kv);
  tc.epochs = static_cast<int>(rc.kv.get_int("train.epochs", tc.epochs));
  tc.batch_size = static_cast<int>(rc.kv.get_int("train.batch_size", tc.batch_size));
  tc.patience = static_cast<int>(rc.kv.get_int("train.patience", tc.patience));
  tc.max_steps = rc.kv.get_int("train.max_steps", 0);
  tc.shuffle = rc.kv.get_bool("train.shuffle", true);
  tc.seed = rc.seed;
  tc.config_hash = rc.hash;
  tc.output_dir = dir;
  tc.config_snapshot = rc.kv.serialize();
  tc.log = [&err](const std::string& line) { err << line << "\n"; };

  fs::create_directories(dir);
  std::ofstream(dir / "config.txt") << "# config_hash " << rc.hash << "\n" << rc.kv.serialize();
  const TrainResult result = train(model, train_set, val_set, context, tc);
  out << "trained " << result.epochs.size() << " epochs, "
      << result.step_losses.size() << " steps; best epoch " << result.best_epoch
      << " loss " << result.best_val_loss << "\n";
  out << "checkpoint " << result.best_checkpoint.string() << "\n";
  return kExitOk;
}

std::vector<std::string> read_lines(const fs::path& path) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::kIoError, "cannot open " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") != std::string::npos) lines.push_back(line);
  }
  return lines;
}

int cmd_generate(const Options& o, std::ostream& out, std::ostream& /*err*/) {
  RunConfig rc = make_config(o);
  const fs::path ckpt_path = require_path(rc, "checkpoint", "--checkpoint");
  const fs::path input = require_path(rc, "data.input", "--input");
  const fs::path dir = require_key(rc, "output.dir", "--out");
  const std::vector<std::string> lines = read_lines(input);
  if (lines.empty()) throw UsageError("input file " + input.string() + " has no descriptions");

  LoadedCheckpoint ckpt = load_checkpoint(ckpt_path);
  const Text2SceneModel& model = *ckpt.model;
  const TaskKind task = model.config().task;
  if (const auto t = rc.kv.get("task"); t && parse_task(*t) != task) {
    throw UsageError("--task " + *t + " does not match the checkpoint");
  }
  // Chain the training run into this run's hash and keep its seed unless
  // one is given.
  rc.kv.set("checkpoint.config_hash", ckpt.meta.config_hash);
  if (!rc.explicit_seed) {
    rc.seed = ckpt.meta.seed;
    rc.kv.set("seed", std::to_string(rc.seed));
  }
  rc.hash = fnv1a_hex(rc.kv.serialize());

  const Vocabulary& vocab = model.vocab();
  std::shared_ptr<const PatchStore> patches;
  std::shared_ptr<const PatchIndex> index;
  if (task == TaskKind::kComposite) {
    patches = std::make_shared<const PatchStore>(
        read_patch_db(require_path(rc, "data.patch_db", "--patch-db"), vocab));
    if (const auto p = optional_path(rc, "data.patch_index", "--patch-index")) {
      index = std::make_shared<const PatchIndex>(PatchIndex::load(*p, vocab));
    } else {
      index = std::make_shared<const PatchIndex>(build_patch_index(*model.patch_net(), *patches));
    }
  }
  const auto builder = make_builder(model.config(), vocab, rc, patches);
  const SceneGenerator generator(model, builder, index);
  GenerateOptions options;
  options.max_objects = static_cast<int>(rc.kv.get_int("generate.max_objects", 0));
  const bool render = !rc.kv.get_bool("generate.no_render", false);
  const int render_size = static_cast<int>(rc.kv.get_int("generate.render_size", 0));

  fs::create_directories(dir);
  std::ofstream attention;
  if (const auto a = rc.kv.get("output.attention"); a && !a->empty()) {
    attention.open(*a);
    require(attention.good(), ErrorCode::kIoError, "cannot write " + *a);
  }
  std::ofstream provenance;
  if (task == TaskKind::kComposite && render) {
    provenance.open(dir / "provenance.jsonl");
    provenance << json{{"format", "text2scene.provenance"}, {"config_hash", rc.hash},
                       {"seed", rc.seed}}
                      .dump()
               << "\n";
  }
  SceneFile file;
  file.header = {task, rc.hash, rc.seed};
  int truncated = 0;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    std::ostringstream id;
    id << "gen-" << std::setw(4) << std::setfill('0') << i;
    const Generation g = generator.generate(lines[i], options);
    truncated += g.truncated;
    SceneRecord r;
    r.id = id.str();
    r.caption = lines[i];
    r.tokens = g.words;
    r.truncated = g.truncated;
    r.scene = g.scene;
    file.records.push_back(r);
    if (attention.is_open()) {
      write_attention_record(attention, attention_record(r.id, r.caption, g, vocab));
    }
    if (render) {
      const Rendering img = render_output(g.scene, *builder, render_size, render_size);
      write_png(dir / (r.id + ".png"), img.image);
      if (provenance.is_open()) {
        json list = json::array();
        std::set<std::int64_t> sources;
        for (const auto& p : img.provenance) {
          list.push_back({{"patch", p.patch_id}, {"source_image", p.source_image}});
          sources.insert(p.source_image);
        }
        provenance << json{{"id", r.id}, {"patches", list}, {"source_images", sources.size()}}
                          .dump()
                   << "\n";
      }
    }
  }
  write_scene_file(dir / "scenes.scn", file, vocab);
  out << "generated " << lines.size() << " scenes into " << (dir / "scenes.scn").string();
  if (truncated) out << " (" << truncated << " truncated)";
  out << "\n";
  return kExitOk;
}

int cmd_evaluate(const Options& o, std::ostream& out, std::ostream& /*err*/) {
  if (o.positional.size() != 2) throw UsageError("evaluate expects GENERATED and REFERENCE files");
  const RunConfig rc = make_config(o);
  for (const auto& p : o.positional) {
    if (!fs::is_regular_file(p)) throw UsageError("no such file: " + p);
  }
  const SceneFile gen = read_scene_file(o.positional[0]);
  const SceneFile ref = read_scene_file(o.positional[1]);
  const TaskKind task = gen.header.task;
  require(ref.header.task == task, ErrorCode::kInvalidArgument,
          "generated and reference files hold different tasks");
  require(task != TaskKind::kComposite, ErrorCode::kInvalidArgument,
          "scene metrics are defined for abstract and layout scenes");
  const Vocabulary vocab = Vocabulary::for_task(task);
  const BoxProvider boxes =
      task == TaskKind::kAbstract
          ? abstract_boxes(load_assets(optional_path(rc, "data.assets", "--assets"), vocab), vocab)
          : layout_boxes(task);

  // Records pair by id when every generated id has a reference, otherwise
  // by position.
  std::map<std::string, const SceneRecord*> by_id;
  for (const auto& r : ref.records) by_id[r.id] = &r;
  const bool match_ids = std::all_of(gen.records.begin(), gen.records.end(),
                                     [&](const SceneRecord& r) { return by_id.count(r.id); });
  require(match_ids || gen.records.size() == ref.records.size(), ErrorCode::kInvalidArgument,
          "generated and reference files cannot be paired by id or by position");

  std::ofstream file;
  if (!o.out.empty()) {
    file.open(o.out);
    require(file.good(), ErrorCode::kIoError, "cannot write " + o.out);
  }
  std::ostream& report = file.is_open() ? file : out;
  report << "# text2scene.metrics config_hash=" << rc.hash << " seed=" << rc.seed
         << " generated=" << gen.header.config_hash << " reference=" << ref.header.config_hash
         << "\n";
  report << std::fixed << std::setprecision(6);
  std::vector<MetricsReport> reports;
  for (std::size_t i = 0; i < gen.records.size(); ++i) {
    const SceneRecord& g = gen.records[i];
    const SceneRecord& r = match_ids ? *by_id.at(g.id) : ref.records[i];
    const MetricsReport m = evaluate_scene(g.scene, r.scene, vocab, boxes);
    reports.push_back(m);
    report << "scene id=" << g.id;
    const auto values = m.values();
    for (std::size_t k = 0; k < values.size(); ++k) {
      report << " " << MetricsReport::field_names()[k] << "=" << values[k];
    }
    report << " no_persons=" << (m.no_persons ? 1 : 0) << "\n";
  }
  const MetricsReport mean = corpus_mean(reports);
  report << "corpus scenes=" << reports.size();
  const auto values = mean.values();
  for (std::size_t k = 0; k < values.size(); ++k) {
    report << " " << MetricsReport::field_names()[k] << "=" << values[k];
  }
  report << "\n";
  if (file.is_open()) out << "wrote " << o.out << "\n";
  return kExitOk;
}

// Manifest rows: id<TAB>color.png<TAB>stuff.png or '-'<TAB>category=mask.png;...
std::vector<PatchSourceImage> read_image_manifest(const fs::path& path, const Vocabulary& vocab) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::kIoError, "cannot open " + path.string());
  const fs::path base = path.parent_path();
  std::vector<PatchSourceImage> images;
  std::string line;
  int number = 0;
  const auto bad = [&](const std::string& what) {
    fail(ErrorCode::kParseError, path.string() + ":" + std::to_string(number) + ": " + what);
  };
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cols;
    std::stringstream s(line);
    for (std::string c; std::getline(s, c, '\t');) cols.push_back(c);
    if (cols.size() < 3 || cols.size() > 4) bad("expected 3 or 4 tab-separated columns");
    PatchSourceImage im;
    try {
      im.id = std::stoll(cols[0]);
    } catch (const std::exception&) {
      bad("non-numeric image id");
    }
    im.color = read_png(base / cols[1], 3);
    if (cols[2] != "-") im.stuff_labels = read_png(base / cols[2], 1);
    if (cols.size() == 4) {
      std::stringstream list(cols[3]);
      for (std::string item; std::getline(list, item, ';');) {
        if (item.empty()) continue;
        const auto eq = item.find('=');
        if (eq == std::string::npos) bad("instance '" + item + "' is not category=mask.png");
        const auto cat = vocab.find(item.substr(0, eq));
        if (!cat || !vocab.is_category(*cat) || vocab.is_stuff(*cat)) {
          bad("unknown object category '" + item.substr(0, eq) + "'");
        }
        im.instances.push_back({*cat, read_png(base / item.substr(eq + 1), 1)});
      }
    }
    images.push_back(std::move(im));
  }
  return images;
}

int cmd_build_patch_db(const Options& o, std::ostream& out, std::ostream& err) {
  const RunConfig rc = make_config(o);
  const fs::path manifest = require_path(rc, "data.images", "--images");
  const fs::path dir = require_key(rc, "output.dir", "--out");
  const Vocabulary vocab = Vocabulary::for_task(TaskKind::kComposite);
  const PatchDbResult db = build_patch_db(read_image_manifest(manifest, vocab), vocab);
  for (const auto& w : db.warnings) err << "warning: " << w << "\n";
  write_patch_db(dir, db.records, vocab);
  write_run_info(dir / "run.json", rc, "patch-db");
  out << "wrote " << db.records.size() << " patches to " << dir.string() << "\n";
  if (const auto ckpt = optional_path(rc, "checkpoint", "--checkpoint")) {
    const LoadedCheckpoint loaded = load_checkpoint(*ckpt);
    require(loaded.model->patch_net() != nullptr, ErrorCode::kInvalidArgument,
            "checkpoint has no patch embedding network");
    const PatchIndex index = build_patch_index(*loaded.model->patch_net(), PatchStore(db.records));
    index.save(dir / "index.tsv", vocab);
    out << "wrote index of " << index.size() << " patches\n";
  }
  return kExitOk;
}

std::vector<double> parse_vector(const std::string& text) {
  std::vector<double> v;
  std::stringstream s(text);
  for (std::string item; std::getline(s, item, ',');) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError("--vector: '" + item + "' is not a number");
    }
  }
  if (v.empty()) throw UsageError("--vector is empty");
  return v;
}

int cmd_retrieve(const Options& o, std::ostream& out, std::ostream& /*err*/) {
  const RunConfig rc = make_config(o);
  const fs::path path = require_path(rc, "data.patch_index", "--index");
  const Vocabulary vocab = Vocabulary::for_task(TaskKind::kComposite);
  const PatchIndex index = PatchIndex::load(path, vocab);
  if (o.patch.has_value() == !o.vector.empty()) {
    throw UsageError("give exactly one of --patch and --vector");
  }
  int category = 0;
  std::vector<double> query;
  if (o.patch) {
    if (!index.contains(*o.patch)) throw UsageError("patch " + std::to_string(*o.patch) + " is not indexed");
    query = index.vector(*o.patch);
    category = index.category(*o.patch);
  }
  if (!o.category.empty()) {
    const auto c = vocab.find(o.category);
    if (!c || !vocab.is_category(*c)) throw UsageError("unknown category '" + o.category + "'");
    category = *c;
  } else if (!o.patch) {
    throw UsageError("--vector needs --category");
  }
  if (!o.vector.empty()) query = parse_vector(o.vector);
  const std::int64_t id = index.retrieve(query, category);
  out << "# config_hash=" << rc.hash << " seed=" << rc.seed << "\n";
  out << "retrieved " << id << " category " << vocab.name(category) << "\n";
  return kExitOk;
}

int cmd_inspect(const Options& o, std::ostream& out, std::ostream& /*err*/) {
  if (o.positional.size() != 1) throw UsageError("inspect expects one attention dump");
  if (!fs::is_regular_file(o.positional[0])) throw UsageError("no such file: " + o.positional[0]);
  if (o.top_k < 1) throw UsageError("--top-k must be positive");
  std::ifstream in(o.positional[0]);
  const auto records = read_attention_dump(in);
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (i) out << "\n";
    print_attention_table(out, records[i], o.top_k);
  }
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Text-to-scene generation: preprocess data, train, generate and evaluate scenes",
               "text2scene"};
  app.require_subcommand(1);
  Options o;

  const auto common = [&o](CLI::App* cmd) {
    cmd->add_option("--config", o.config, "Key-value configuration file");
    cmd->add_option("--set", o.sets, "Override one configuration key (KEY=VALUE)");
    cmd->add_option("--seed", o.seed, "Random seed");
  };
  const auto task = [&o](CLI::App* cmd) {
    cmd->add_option("--task", o.task, "abstract, layout or composite");
  };

  auto* preprocess = app.add_subcommand("preprocess", "Convert a raw dataset into scene files");
  common(preprocess);
  task(preprocess);
  preprocess->add_option("--data", o.data,
                         "Abstract dataset dir, COCO instances JSON or patch database dir");
  preprocess->add_option("--captions", o.captions, "COCO captions JSON (layout, composite)");
  preprocess->add_option("--out", o.out, "Output directory");

  auto* train_cmd = app.add_subcommand("train", "Train a model with teacher forcing");
  common(train_cmd);
  task(train_cmd);
  train_cmd->add_option("--data", o.data, "Training scene file or abstract dataset dir");
  train_cmd->add_option("--val", o.val, "Validation scene file");
  train_cmd->add_option("--out", o.out, "Checkpoint directory");
  train_cmd->add_option("--assets", o.assets, "Clip-art asset manifest (abstract)");
  train_cmd->add_option("--patch-db", o.patch_db, "Patch database dir (composite)");
  train_cmd->add_option("--embeddings", o.embeddings, "Word vectors, one 'word v1 v2 ...' per line");
  train_cmd->add_option("--epochs", o.epochs);
  train_cmd->add_option("--batch-size", o.batch_size);
  train_cmd->add_option("--max-steps", o.max_steps);
  train_cmd->add_option("--lr", o.learning_rate, "Initial learning rate");

  auto* generate = app.add_subcommand("generate", "Generate scenes from descriptions");
  common(generate);
  task(generate);
  generate->add_option("--checkpoint", o.checkpoint)->required();
  generate->add_option("--input", o.input, "Text file, one description per line")->required();
  generate->add_option("--out", o.out, "Output directory")->required();
  generate->add_option("--attention", o.attention, "Write an attention dump (JSON lines)");
  generate->add_option("--max-objects", o.max_objects);
  generate->add_option("--assets", o.assets, "Clip-art asset manifest (abstract)");
  generate->add_option("--patch-db", o.patch_db, "Patch database dir (composite)");
  generate->add_option("--patch-index", o.patch_index, "Patch index file (composite)");
  generate->add_flag("--no-render", o.no_render, "Skip PNG renders");

  auto* evaluate = app.add_subcommand("evaluate", "Score generated scenes against references");
  common(evaluate);
  evaluate->add_option("files", o.positional, "GENERATED REFERENCE")->expected(2);
  evaluate->add_option("--assets", o.assets, "Clip-art asset manifest (abstract boxes)");
  evaluate->add_option("--out", o.out, "Write the report here instead of stdout");

  auto* build_db = app.add_subcommand("build-patch-db", "Cut segment patches from source images");
  common(build_db);
  build_db->add_option("--images", o.images, "Image manifest (TSV)");
  build_db->add_option("--out", o.out, "Patch database dir");
  build_db->add_option("--checkpoint", o.checkpoint, "Also embed and index the patches");

  auto* retrieve = app.add_subcommand("retrieve", "Nearest patch lookup in a patch index");
  common(retrieve);
  retrieve->add_option("--index", o.patch_index, "Patch index file");
  retrieve->add_option("--category", o.category, "Category name");
  retrieve->add_option("--patch", o.patch, "Query with an indexed patch's vector");
  retrieve->add_option("--vector", o.vector, "Query vector, comma separated");

  auto* inspect = app.add_subcommand("inspect", "Print attended words per decoding step");
  inspect->add_option("dump", o.positional, "Attention dump")->expected(1);
  inspect->add_option("--top-k", o.top_k, "Words shown per step");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << (e.get_name() == "CallForVersion" ? "" : app.help());
      return kExitOk;
    }
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  // Dedicated flags land in config keys so they take part in the hash.
  if (!o.input.empty()) o.sets.insert(o.sets.begin(), "data.input=" + o.input);
  if (!o.attention.empty()) o.sets.insert(o.sets.begin(), "output.attention=" + o.attention);
  if (o.no_render) o.sets.insert(o.sets.begin(), "generate.no_render=true");

  try {
    if (preprocess->parsed()) return cmd_preprocess(o, out, err);
    if (train_cmd->parsed()) return cmd_train(o, out, err);
    if (generate->parsed()) return cmd_generate(o, out, err);
    if (evaluate->parsed()) return cmd_evaluate(o, out, err);
    if (build_db->parsed()) return cmd_build_patch_db(o, out, err);
    if (retrieve->parsed()) return cmd_retrieve(o, out, err);
    if (inspect->parsed()) return cmd_inspect(o, out, err);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << "error [" << to_string(e.code()) << "]: " << e.what() << "\n";
    return kExitFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace text2scene::cli
