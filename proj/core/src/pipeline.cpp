/* Copyright 2026 The ascprobe Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "ascprobe/pipeline.hpp"

#include <fmt/chrono.h>
#include <fmt/format.h>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include "ascprobe/errors.hpp"
#include "ascprobe/hash.hpp"

#ifndef ASCPROBE_VERSION
#define ASCPROBE_VERSION "0.0.0"
#endif

namespace ascprobe::pipeline {

using nlohmann::ordered_json;
using probe::LayerId;

namespace {

constexpr std::uint64_t kShuffleSalt = 0x9E3779B97F4A7C15ULL;

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

std::string timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  return fmt::format("{:%Y-%m-%dT%H:%M:%SZ}", fmt::gmtime(now));
}

std::string_view methods_name(MethodSet m) {
  switch (m) {
    case MethodSet::Mds: return "mds";
    case MethodSet::Tsne: return "tsne";
    case MethodSet::Both: return "both";
  }
  return "both";
}

MethodSet parse_methods(std::string_view s) {
  if (s == "mds") return MethodSet::Mds;
  if (s == "tsne") return MethodSet::Tsne;
  if (s == "both") return MethodSet::Both;
  throw InvalidConfig("unknown method '" + std::string(s) + "' (mds|tsne|both)");
}

std::vector<geometry::Method> methods_of(MethodSet m) {
  switch (m) {
    case MethodSet::Mds: return {geometry::Method::Mds};
    case MethodSet::Tsne: return {geometry::Method::Tsne};
    case MethodSet::Both: return {geometry::Method::Mds, geometry::Method::Tsne};
  }
  return {};
}

// ---- config serialization ---------------------------------------------------

ordered_json generate_json(const GenerateOptions& g) {
  ordered_json j;
  j["seed"] = g.seed;
  j["n_per_class"] = g.n_per_class;
  j["grammar"] = g.grammar ? ordered_json(g.grammar->string()) : ordered_json(nullptr);
  if (g.grammar_spec) j["grammar_spec"] = ordered_json::parse(corpus::grammar_to_json(*g.grammar_spec));
  return j;
}

ordered_json train_json(const TrainOptions& t) {
  ordered_json j;
  j["seed"] = t.seed;
  j["embedding_dim"] = t.embedding_dim;
  j["hidden1"] = t.hidden1;
  j["hidden2"] = t.hidden2;
  j["init_scale"] = t.init_scale;
  j["epochs"] = t.train.epochs;
  j["batch_size"] = t.train.batch_size;
  j["learning_rate"] = t.train.learning_rate;
  j["optimizer"] = t.train.optimizer == rnn::Optimizer::Adam ? "adam" : "sgd";
  j["beta1"] = t.train.beta1;
  j["beta2"] = t.train.beta2;
  j["epsilon"] = t.train.epsilon;
  j["clip_norm"] = t.train.clip_norm;
  j["train_fraction"] = t.train_fraction;
  j["split_seed"] = t.split_seed;
  j["padding"] = t.padding == corpus::PaddingSide::Post ? "post" : "pre";
  j["untrained"] = t.untrained;
  return j;
}

ordered_json tsne_json(const geometry::TsneConfig& c) {
  ordered_json j;
  j["perplexity"] = c.perplexity;
  j["out_dims"] = c.out_dims;
  j["iterations"] = c.iterations;
  j["learning_rate"] = c.learning_rate;
  j["early_exaggeration"] = c.early_exaggeration;
  j["exaggeration_iters"] = c.exaggeration_iters;
  j["initial_momentum"] = c.initial_momentum;
  j["final_momentum"] = c.final_momentum;
  j["momentum_switch_iter"] = c.momentum_switch_iter;
  j["min_gain"] = c.min_gain;
  j["seed"] = c.seed;
  j["init"] = c.init == geometry::TsneInit::Random ? "random" : "mds";
  j["init_sigma"] = c.init_sigma;
  j["kl_every"] = c.kl_every;
  return j;
}

ordered_json analyze_json(const AnalyzeOptions& a) {
  ordered_json j;
  ordered_json pooling;
  for (LayerId layer : probe::kAllLayers) {
    pooling[std::string(probe::layer_name(layer))] = probe::pooling_name(a.pooling.at(layer));
  }
  j["pooling"] = pooling;
  j["methods"] = methods_name(a.methods);
  j["mds_zscore"] = a.mds_zscore;
  j["tsne"] = tsne_json(a.tsne);
  return j;
}

template <typename T>
void read_field(const ordered_json& j, const char* key, T& out) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return;
  try {
    out = it->get<T>();
  } catch (const nlohmann::json::exception&) {
    throw InvalidConfig(fmt::format("bad value for '{}'", key));
  }
}

void reject_unknown(const ordered_json& j, std::initializer_list<std::string_view> known,
                    std::string_view section) {
  for (const auto& [key, value] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw InvalidConfig(fmt::format("unknown key '{}' in {}", key, section));
    }
  }
}

void apply_generate(const ordered_json& j, GenerateOptions& g) {
  if (!j.is_object()) throw InvalidConfig("generate must be an object");
  reject_unknown(j, {"seed", "n_per_class", "grammar", "grammar_spec"}, "generate");
  read_field(j, "seed", g.seed);
  read_field(j, "n_per_class", g.n_per_class);
  if (auto it = j.find("grammar"); it != j.end() && !it->is_null()) {
    if (!it->is_string()) throw InvalidConfig("bad value for 'grammar'");
    g.grammar = fs::path(it->get<std::string>());
  }
  if (auto it = j.find("grammar_spec"); it != j.end() && !it->is_null()) {
    g.grammar_spec = corpus::grammar_from_json(it->dump());
  }
}

void apply_train(const ordered_json& j, TrainOptions& t) {
  if (!j.is_object()) throw InvalidConfig("train must be an object");
  reject_unknown(j,
                 {"seed", "embedding_dim", "hidden1", "hidden2", "init_scale", "epochs",
                  "batch_size", "learning_rate", "optimizer", "beta1", "beta2", "epsilon",
                  "clip_norm", "train_fraction", "split_seed", "padding", "untrained"},
                 "train");
  read_field(j, "seed", t.seed);
  read_field(j, "embedding_dim", t.embedding_dim);
  read_field(j, "hidden1", t.hidden1);
  read_field(j, "hidden2", t.hidden2);
  read_field(j, "init_scale", t.init_scale);
  read_field(j, "epochs", t.train.epochs);
  read_field(j, "batch_size", t.train.batch_size);
  read_field(j, "learning_rate", t.train.learning_rate);
  read_field(j, "beta1", t.train.beta1);
  read_field(j, "beta2", t.train.beta2);
  read_field(j, "epsilon", t.train.epsilon);
  read_field(j, "clip_norm", t.train.clip_norm);
  read_field(j, "train_fraction", t.train_fraction);
  read_field(j, "split_seed", t.split_seed);
  read_field(j, "untrained", t.untrained);
  std::string s;
  read_field(j, "optimizer", s);
  if (!s.empty()) t.train.optimizer = parse_optimizer(s);
  s.clear();
  read_field(j, "padding", s);
  if (!s.empty()) t.padding = parse_padding(s);
}

void apply_tsne(const ordered_json& j, geometry::TsneConfig& c) {
  if (!j.is_object()) throw InvalidConfig("tsne must be an object");
  reject_unknown(j,
                 {"perplexity", "out_dims", "iterations", "learning_rate", "early_exaggeration",
                  "exaggeration_iters", "initial_momentum", "final_momentum",
                  "momentum_switch_iter", "min_gain", "seed", "init", "init_sigma", "kl_every"},
                 "tsne");
  read_field(j, "perplexity", c.perplexity);
  read_field(j, "out_dims", c.out_dims);
  read_field(j, "iterations", c.iterations);
  read_field(j, "learning_rate", c.learning_rate);
  read_field(j, "early_exaggeration", c.early_exaggeration);
  read_field(j, "exaggeration_iters", c.exaggeration_iters);
  read_field(j, "initial_momentum", c.initial_momentum);
  read_field(j, "final_momentum", c.final_momentum);
  read_field(j, "momentum_switch_iter", c.momentum_switch_iter);
  read_field(j, "min_gain", c.min_gain);
  read_field(j, "seed", c.seed);
  read_field(j, "init_sigma", c.init_sigma);
  read_field(j, "kl_every", c.kl_every);
  std::string init;
  read_field(j, "init", init);
  if (init == "random") {
    c.init = geometry::TsneInit::Random;
  } else if (init == "mds") {
    c.init = geometry::TsneInit::Mds;
  } else if (!init.empty()) {
    throw InvalidConfig("unknown t-SNE init '" + init + "'");
  }
}

void apply_analyze(const ordered_json& j, AnalyzeOptions& a) {
  if (!j.is_object()) throw InvalidConfig("analyze must be an object");
  reject_unknown(j, {"pooling", "methods", "mds_zscore", "tsne"}, "analyze");
  if (auto it = j.find("pooling"); it != j.end() && !it->is_null()) {
    if (it->is_string()) {
      a.pooling = probe::PoolingScheme::uniform(probe::parse_pooling(it->get<std::string>()));
    } else if (it->is_object()) {
      for (const auto& [key, value] : it->items()) {
        if (!value.is_string()) throw InvalidConfig("bad pooling for " + key);
        a.pooling.at(probe::parse_layer(key)) = probe::parse_pooling(value.get<std::string>());
      }
    } else {
      throw InvalidConfig("bad value for 'pooling'");
    }
  }
  std::string methods;
  read_field(j, "methods", methods);
  if (!methods.empty()) a.methods = parse_methods(methods);
  read_field(j, "mds_zscore", a.mds_zscore);
  if (auto it = j.find("tsne"); it != j.end() && !it->is_null()) apply_tsne(*it, a.tsne);
}

// ---- manifest ---------------------------------------------------------------

ordered_json load_manifest(const fs::path& dir) {
  const fs::path path = dir / "manifest.json";
  if (!fs::exists(path)) return ordered_json::object();
  try {
    auto j = ordered_json::parse(read_text(path));
    if (j.is_object()) return j;
  } catch (const nlohmann::json::exception&) {
  }
  return ordered_json::object();
}

void store_stage(const fs::path& dir, std::string_view stage, const ordered_json& config_section,
                 const ordered_json& record) {
  ordered_json manifest = load_manifest(dir);
  manifest["tool"] = "ascprobe";
  manifest["tool_version"] = tool_version();
  if (!manifest.contains("config") || !manifest["config"].is_object()) {
    manifest["config"] = ordered_json::object();
  }
  if (!manifest.contains("stages") || !manifest["stages"].is_object()) {
    manifest["stages"] = ordered_json::object();
  }
  manifest["config"][std::string(stage)] = config_section;
  manifest["stages"][std::string(stage)] = record;
  write_text(dir / "manifest.json", manifest.dump(2) + "\n");
}

ordered_json counts_json(const std::array<std::size_t, corpus::kNumConstructions>& counts) {
  ordered_json j;
  for (auto c : corpus::kAllConstructions) j[std::string(corpus::label_name(c))] = counts[corpus::index_of(c)];
  return j;
}

ordered_json metrics_json(const rnn::Metrics& m) {
  ordered_json j;
  j["loss"] = m.loss;
  j["accuracy"] = m.accuracy;
  j["perplexity"] = m.perplexity;
  j["positions"] = m.positions;
  return j;
}

std::string file_stem(geometry::Method m, LayerId layer) {
  return fmt::format("{}_{}", geometry::method_name(m), probe::layer_name(layer));
}

geometry::LabeledPointSet point_set(const probe::ActivationTable& table) {
  std::vector<std::size_t> labels;
  labels.reserve(table.labels.size());
  for (auto c : table.labels) labels.push_back(corpus::index_of(c));
  return geometry::LabeledPointSet::make(table.values, std::move(labels));
}

std::string fmt_double(double v) { return fmt::format("{:.6f}", v); }

}  // namespace

rnn::Optimizer parse_optimizer(std::string_view s) {
  if (s == "adam") return rnn::Optimizer::Adam;
  if (s == "sgd") return rnn::Optimizer::Sgd;
  throw InvalidConfig("unknown optimizer '" + std::string(s) + "' (adam|sgd)");
}

corpus::PaddingSide parse_padding(std::string_view s) {
  if (s == "post") return corpus::PaddingSide::Post;
  if (s == "pre") return corpus::PaddingSide::Pre;
  throw InvalidConfig("unknown padding '" + std::string(s) + "' (post|pre)");
}

MethodSet parse_method_set(std::string_view s) { return parse_methods(s); }

std::string_view tool_version() { return ASCPROBE_VERSION; }

std::string config_to_json(const RunConfig& config) {
  ordered_json j;
  j["generate"] = generate_json(config.generate);
  j["train"] = train_json(config.train);
  j["analyze"] = analyze_json(config.analyze);
  return j.dump(2);
}

RunConfig config_from_json(std::string_view json_text, RunConfig base) {
  ordered_json j;
  try {
    j = ordered_json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidConfig(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw InvalidConfig("config must be a JSON object");
  if (j.contains("config")) {
    j = j["config"];
    if (!j.is_object()) throw InvalidConfig("manifest config must be an object");
  }
  reject_unknown(j, {"generate", "train", "analyze"}, "config");
  if (j.contains("generate")) apply_generate(j["generate"], base.generate);
  if (j.contains("train")) apply_train(j["train"], base.train);
  if (j.contains("analyze")) apply_analyze(j["analyze"], base.analyze);
  return base;
}

RunConfig load_config(const fs::path& path, RunConfig base) {
  return config_from_json(read_text(path), std::move(base));
}

corpus::GrammarSpec resolve_grammar(const GenerateOptions& options) {
  if (options.grammar_spec) return *options.grammar_spec;
  if (options.grammar) return corpus::read_grammar_json(*options.grammar);
  return corpus::default_grammar();
}

void ensure_directory(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw IoError(fmt::format("cannot create directory {}: {}", dir.string(),
                              ec ? ec.message() : "not a directory"));
  }
}

// ---- generate ---------------------------------------------------------------

GenerateOutputs run_generate(const RunConfig& config, const fs::path& out_dir) {
  const corpus::GrammarSpec grammar = resolve_grammar(config.generate);
  grammar.validate();
  const corpus::Corpus corp =
      corpus::generate_corpus(grammar, config.generate.seed, config.generate.n_per_class);

  ensure_directory(out_dir);
  GenerateOutputs out;
  out.corpus_file = out_dir / "corpus.jsonl";
  corpus::write_corpus_jsonl(out.corpus_file, corp);
  out.corpus_hash = sha256_file(out.corpus_file);
  out.counts = corp.counts();

  ordered_json record;
  record["timestamp"] = timestamp();
  record["corpus"] = {{"file", "corpus.jsonl"}, {"sha256", out.corpus_hash}};
  if (!corp.empty()) {
    const corpus::Vocabulary vocab = corpus::build_vocab(corp);
    out.vocab_file = out_dir / "vocab.json";
    corpus::write_vocab_json(out.vocab_file, vocab);
    out.vocab_size = vocab.size();
    record["vocab"] = {{"file", "vocab.json"},
                       {"sha256", sha256_file(out.vocab_file)},
                       {"size", out.vocab_size}};
  } else {
    std::error_code ec;
    fs::remove(out_dir / "vocab.json", ec);
  }
  record["grammar_sha256"] = sha256_hex(corpus::grammar_to_json(grammar));
  record["counts"] = counts_json(out.counts);

  GenerateOptions recorded = config.generate;
  if (recorded.grammar) recorded.grammar_spec = grammar;
  store_stage(out_dir, "generate", generate_json(recorded), record);
  return out;
}

// ---- train ------------------------------------------------------------------

TrainOutputs run_train(const RunConfig& config, const fs::path& corpus_dir,
                       const fs::path& out_dir, const rnn::EpochCallback& on_epoch) {
  const TrainOptions& opt = config.train;
  rnn::TrainConfig train_cfg = opt.train;
  train_cfg.shuffle_seed = opt.seed ^ kShuffleSalt;
  train_cfg.validate();

  const fs::path corpus_file = corpus_dir / "corpus.jsonl";
  const fs::path vocab_file = corpus_dir / "vocab.json";
  if (!fs::exists(corpus_file)) throw MissingInput(corpus_file.string());
  const corpus::Corpus corp = corpus::read_corpus_jsonl(corpus_file);
  if (corp.empty()) throw EmptyCorpus(corpus_file.string() + " has no sentences");
  if (!fs::exists(vocab_file)) throw MissingInput(vocab_file.string());
  auto vocab = std::make_shared<const corpus::Vocabulary>(corpus::read_vocab_json(vocab_file));
  const std::string fingerprint = sha256_file(vocab_file);

  const corpus::EncodedCorpus encoded = corpus::encode(corp, vocab, opt.padding);
  if (encoded.unk_count > 0) {
    throw VocabMismatch(fmt::format("{} corpus tokens are missing from {}", encoded.unk_count,
                                    vocab_file.string()));
  }
  auto [train_part, val_part] = corpus::split(encoded, opt.train_fraction, opt.split_seed);

  rnn::ModelConfig model_cfg;
  model_cfg.vocab_size = vocab->size();
  model_cfg.embedding_dim = opt.embedding_dim;
  model_cfg.hidden1 = opt.hidden1;
  model_cfg.hidden2 = opt.hidden2;
  model_cfg.max_seq_len = encoded.max_len;
  model_cfg.init_scale = opt.init_scale;
  model_cfg.seed = opt.seed;
  rnn::ModelParams params = rnn::init_params(model_cfg);
  params.vocab_fingerprint = fingerprint;

  ensure_directory(out_dir);
  TrainOutputs out;
  if (!opt.untrained) {
    rnn::TrainResult result = rnn::train(std::move(params), train_part, train_cfg, &val_part,
                                         on_epoch);
    params = std::move(result.params);
    out.history = std::move(result.history);
  }
  out.validation = rnn::evaluate(params, val_part);
  out.chance_accuracy = 1.0 / static_cast<double>(vocab->words().size());

  out.checkpoint = out_dir / "model.ckpt";
  rnn::save_checkpoint(out.checkpoint, params);
  out.checkpoint_hash = sha256_file(out.checkpoint);

  std::string log = "epoch,train_loss,val_loss,val_accuracy\n";
  for (const auto& rec : out.history) {
    const rnn::Metrics v = rec.validation.value_or(rnn::Metrics{});
    log += fmt::format("{},{},{},{}\n", rec.epoch, rec.train_loss, v.loss, v.accuracy);
  }
  out.log = out_dir / "train_log.csv";
  write_text(out.log, log);

  ordered_json record;
  record["timestamp"] = timestamp();
  record["corpus_sha256"] = sha256_file(corpus_file);
  record["vocab_sha256"] = fingerprint;
  record["checkpoint"] = {{"file", "model.ckpt"}, {"sha256", out.checkpoint_hash}};
  record["log"] = {{"file", "train_log.csv"}, {"sha256", sha256_hex(log)}};
  record["train_rows"] = train_part.rows;
  record["validation_rows"] = val_part.rows;
  record["parameters"] = params.parameter_count();
  record["validation"] = metrics_json(out.validation);
  record["chance_accuracy"] = out.chance_accuracy;
  store_stage(out_dir, "train", train_json(opt), record);
  return out;
}

// ---- analyze ----------------------------------------------------------------

OrdinalSummary summarize(const std::map<LayerId, double>& gdv_by_layer) {
  OrdinalSummary s;
  for (const auto& [layer, value] : gdv_by_layer) s.ranking.push_back(layer);
  std::stable_sort(s.ranking.begin(), s.ranking.end(), [&](LayerId a, LayerId b) {
    return gdv_by_layer.at(a) < gdv_by_layer.at(b);
  });
  if (s.ranking.empty()) return s;
  s.best = s.ranking.front();
  s.all_negative = std::all_of(gdv_by_layer.begin(), gdv_by_layer.end(),
                               [](const auto& kv) { return kv.second < 0.0; });
  s.best_is_lstm2 = s.best == LayerId::Lstm2;
  const auto out_it = gdv_by_layer.find(LayerId::Output);
  const auto l2_it = gdv_by_layer.find(LayerId::Lstm2);
  s.output_less_negative_than_lstm2 =
      out_it != gdv_by_layer.end() && l2_it != gdv_by_layer.end() && out_it->second > l2_it->second;
  return s;
}

std::map<LayerId, geometry::GdvResult> layer_gdvs(
    const std::map<LayerId, probe::ActivationTable>& tables) {
  std::map<LayerId, geometry::GdvResult> out;
  for (const auto& [layer, table] : tables) out.emplace(layer, geometry::gdv(point_set(table)));
  return out;
}

std::string gdv_json(const std::map<LayerId, geometry::GdvResult>& results) {
  ordered_json arr = ordered_json::array();
  for (const auto& [layer, r] : results) {
    ordered_json j;
    j["layer"] = probe::layer_name(layer);
    j["gdv"] = r.gdv;
    j["intra"] = std::vector<double>(r.intra.data(), r.intra.data() + r.intra.size());
    ordered_json inter = ordered_json::array();
    for (Eigen::Index i = 0; i < r.inter.rows(); ++i) {
      ordered_json row = ordered_json::array();
      for (Eigen::Index k = 0; k < r.inter.cols(); ++k) row.push_back(r.inter(i, k));
      inter.push_back(std::move(row));
    }
    j["inter"] = std::move(inter);
    j["d_eff"] = r.d_eff;
    j["dropped_dims"] = r.dropped_dims;
    arr.push_back(std::move(j));
  }
  return arr.dump(2) + "\n";
}

std::vector<fs::path> declared_analysis_files(MethodSet methods) {
  std::vector<fs::path> files = {"gdv.json", "summary.json"};
  for (geometry::Method m : methods_of(methods)) {
    for (LayerId layer : probe::kAllLayers) {
      files.emplace_back(file_stem(m, layer) + ".csv");
      files.emplace_back(file_stem(m, layer) + ".svg");
    }
  }
  for (LayerId layer : probe::kAllLayers) {
    files.push_back(fs::path("activations") / (std::string(probe::layer_name(layer)) + ".bin"));
    files.push_back(fs::path("activations") / (std::string(probe::layer_name(layer)) + ".json"));
  }
  return files;
}

namespace {

ordered_json summary_json(const OrdinalSummary& s, const std::map<LayerId, double>& gdvs) {
  ordered_json j;
  ordered_json ranking = ordered_json::array();
  for (LayerId layer : s.ranking) {
    ranking.push_back({{"layer", probe::layer_name(layer)}, {"gdv", gdvs.at(layer)}});
  }
  j["ranking"] = std::move(ranking);
  j["best"] = probe::layer_name(s.best);
  j["all_negative"] = s.all_negative;
  j["best_is_lstm2"] = s.best_is_lstm2;
  j["output_less_negative_than_lstm2"] = s.output_less_negative_than_lstm2;
  j["matches_paper"] = s.matches_paper();
  return j;
}

}  // namespace

AnalysisReport run_analyze(const RunConfig& config, const fs::path& checkpoint,
                           const fs::path& corpus_dir, const fs::path& out_dir) {
  const AnalyzeOptions& opt = config.analyze;
  if (!fs::exists(checkpoint)) throw MissingInput(checkpoint.string());
  const fs::path corpus_file = corpus_dir / "corpus.jsonl";
  const fs::path vocab_file = corpus_dir / "vocab.json";
  if (!fs::exists(corpus_file)) throw MissingInput(corpus_file.string());
  if (!fs::exists(vocab_file)) throw MissingInput(vocab_file.string());

  const rnn::ModelParams params = rnn::load_checkpoint(checkpoint);
  const std::string checkpoint_hash = sha256_file(checkpoint);
  const corpus::Corpus corp = corpus::read_corpus_jsonl(corpus_file);
  if (corp.empty()) throw EmptyCorpus(corpus_file.string() + " has no sentences");
  auto vocab = std::make_shared<const corpus::Vocabulary>(corpus::read_vocab_json(vocab_file));
  const std::string fingerprint = sha256_file(vocab_file);
  const corpus::EncodedCorpus encoded = corpus::encode(corp, vocab, corpus::PaddingSide::Post);

  const auto tables = probe::extract_all(params, encoded, opt.pooling, fingerprint, checkpoint_hash);
  if (opt.methods != MethodSet::Mds) opt.tsne.validate(encoded.rows);

  // Everything is computed before the first analysis file is written.
  AnalysisReport report;
  std::map<LayerId, geometry::GdvResult> gdvs;
  std::map<LayerId, double> gdv_values;
  for (const auto& [layer, table] : tables) {
    LayerAnalysis la;
    la.layer = layer;
    la.gdv = geometry::gdv(point_set(table));
    for (geometry::Method m : methods_of(opt.methods)) {
      if (m == geometry::Method::Mds) {
        const geometry::Matrix& input =
            opt.mds_zscore ? geometry::zscore_half(table.values).scaled : table.values;
        la.projections.emplace(m, geometry::classical_mds(geometry::pairwise_distances(input), 2));
      } else {
        la.projections.emplace(m, geometry::tsne(table.values, opt.tsne));
      }
    }
    gdvs.emplace(layer, la.gdv);
    gdv_values.emplace(layer, la.gdv.gdv);
    report.layers.push_back(std::move(la));
  }
  report.summary = summarize(gdv_values);

  ensure_directory(out_dir);
  ensure_directory(out_dir / "activations");
  std::vector<std::pair<fs::path, std::string>> outputs;
  outputs.emplace_back("gdv.json", gdv_json(gdvs));
  for (const auto& la : report.layers) {
    const auto& labels = tables.at(la.layer).labels;
    for (const auto& [m, proj] : la.projections) {
      const std::string stem = file_stem(m, la.layer);
      outputs.emplace_back(stem + ".csv", projection_csv(proj, labels));
      outputs.emplace_back(stem + ".svg",
                           projection_svg(proj, labels,
                                          fmt::format("{} {} (GDV {:.4f})", geometry::method_name(m),
                                                      probe::layer_name(la.layer), la.gdv.gdv)));
    }
  }
  for (const auto& [path, text] : outputs) {
    write_text(out_dir / path, text);
    report.files.push_back(path);
  }
  for (const auto& [layer, table] : tables) {
    const fs::path stem = fs::path("activations") / std::string(probe::layer_name(layer));
    probe::write_table(out_dir / stem, table);
    report.files.push_back(fs::path(stem).concat(".bin"));
    report.files.push_back(fs::path(stem).concat(".json"));
  }

  ordered_json summary = summary_json(report.summary, gdv_values);
  summary["methods"] = methods_name(opt.methods);
  summary["pooling"] = analyze_json(opt)["pooling"];
  summary["checkpoint_sha256"] = checkpoint_hash;
  summary["sentences"] = encoded.rows;
  const ordered_json train_manifest = load_manifest(checkpoint.parent_path());
  if (train_manifest.contains("stages") && train_manifest["stages"].contains("train")) {
    const auto& t = train_manifest["stages"]["train"];
    summary["training"] = {{"validation", t.value("validation", ordered_json(nullptr))},
                           {"chance_accuracy", t.value("chance_accuracy", 0.0)}};
  } else {
    summary["training"] = nullptr;
  }
  ordered_json diagnostics = ordered_json::object();
  for (const auto& la : report.layers) {
    ordered_json d;
    for (const auto& [m, proj] : la.projections) {
      if (proj.mds) {
        d["mds"] = {{"top_eigenvalues", std::vector<double>(proj.mds->top_eigenvalues.data(),
                                                              proj.mds->top_eigenvalues.data() +
                                                                  proj.mds->top_eigenvalues.size())},
                    {"residual", proj.mds->residual},
                    {"nonpositive_axis", proj.mds->nonpositive_axis}};
      }
      if (proj.tsne) {
        d["tsne"] = {{"final_kl", proj.tsne->final_kl},
                     {"iterations", proj.tsne->iterations},
                     {"max_entropy_error", proj.tsne->max_entropy_error},
                     {"calibration_failures", proj.tsne->calibration_failures}};
      }
    }
    diagnostics[std::string(probe::layer_name(la.layer))] = std::move(d);
  }
  summary["projections"] = std::move(diagnostics);
  report.files.emplace_back("summary.json");
  ordered_json files = ordered_json::array();
  for (const auto& f : report.files) files.push_back(f.generic_string());
  summary["files"] = files;
  write_text(out_dir / "summary.json", summary.dump(2) + "\n");

  ordered_json record;
  record["timestamp"] = timestamp();
  record["checkpoint_sha256"] = checkpoint_hash;
  record["corpus_sha256"] = sha256_file(corpus_file);
  ordered_json hashes = ordered_json::object();
  for (const auto& f : report.files) hashes[f.generic_string()] = sha256_file(out_dir / f);
  record["files"] = std::move(hashes);
  store_stage(out_dir, "analyze", analyze_json(opt), record);
  return report;
}

// ---- report -----------------------------------------------------------------

RunReport load_report(const fs::path& run_dir) {
  const fs::path gdv_path = run_dir / "gdv.json";
  const fs::path summary_path = run_dir / "summary.json";
  for (const auto& p : {gdv_path, summary_path}) {
    if (!fs::exists(p)) throw MissingInput("missing " + p.string());
  }
  ordered_json gdv_doc;
  ordered_json summary;
  try {
    gdv_doc = ordered_json::parse(read_text(gdv_path));
    summary = ordered_json::parse(read_text(summary_path));
  } catch (const nlohmann::json::exception& e) {
    throw MissingInput(std::string("unreadable analysis output: ") + e.what());
  }
  MethodSet methods = MethodSet::Both;
  if (summary.contains("methods") && summary["methods"].is_string()) {
    methods = parse_methods(summary["methods"].get<std::string>());
  }
  for (const auto& f : declared_analysis_files(methods)) {
    if (!fs::exists(run_dir / f)) throw MissingInput("missing " + (run_dir / f).string());
  }

  RunReport report;
  std::map<LayerId, double> values;
  try {
    for (const auto& entry : gdv_doc) {
      ReportRow row;
      row.layer = probe::parse_layer(entry.at("layer").get<std::string>());
      row.gdv = entry.at("gdv").get<double>();
      values[row.layer] = row.gdv;
      report.rows.push_back(row);
    }
  } catch (const nlohmann::json::exception& e) {
    throw MissingInput(std::string("malformed gdv.json: ") + e.what());
  }
  for (LayerId layer : probe::kAllLayers) {
    if (!values.count(layer)) {
      throw MissingInput(fmt::format("gdv.json has no entry for {}", probe::layer_name(layer)));
    }
  }
  std::sort(report.rows.begin(), report.rows.end(),
            [](const ReportRow& a, const ReportRow& b) { return a.layer < b.layer; });
  report.summary = summarize(values);
  return report;
}

std::string format_report_text(const RunReport& report) {
  std::string out = fmt::format("{:<10} {:>12}\n", "layer", "gdv");
  for (const auto& row : report.rows) {
    out += fmt::format("{:<10} {:>12}{}\n", probe::layer_name(row.layer), fmt_double(row.gdv),
                       row.layer == report.summary.best ? "  <- min" : "");
  }
  out += fmt::format("ranking: ");
  for (std::size_t i = 0; i < report.summary.ranking.size(); ++i) {
    out += (i ? " < " : "") + std::string(probe::layer_name(report.summary.ranking[i]));
  }
  out += "\n";
  out += fmt::format("all layers negative: {}\n", report.summary.all_negative ? "yes" : "no");
  out += fmt::format("min at lstm2: {}\n", report.summary.best_is_lstm2 ? "yes" : "no");
  out += fmt::format("output less negative than lstm2: {}\n",
                     report.summary.output_less_negative_than_lstm2 ? "yes" : "no");
  out += fmt::format("matches paper: {}\n", report.summary.matches_paper() ? "yes" : "no");
  return out;
}

std::string format_report_json(const RunReport& report) {
  ordered_json j;
  ordered_json layers = ordered_json::array();
  std::map<LayerId, double> values;
  for (const auto& row : report.rows) {
    layers.push_back({{"layer", probe::layer_name(row.layer)},
                      {"gdv", row.gdv},
                      {"argmin", row.layer == report.summary.best}});
    values[row.layer] = row.gdv;
  }
  j["layers"] = std::move(layers);
  const ordered_json s = summary_json(report.summary, values);
  for (const auto& [key, value] : s.items()) j[key] = value;
  return j.dump(2) + "\n";
}

}  // namespace ascprobe::pipeline
