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

#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ascprobe/corpus.hpp"
#include "ascprobe/geometry.hpp"
#include "ascprobe/probe.hpp"
#include "ascprobe/rnn.hpp"

namespace ascprobe::pipeline {

namespace fs = std::filesystem;

inline constexpr int kExitOk = 0;
inline constexpr int kExitIo = 1;
inline constexpr int kExitDomain = 2;

std::string_view tool_version();

struct GenerateOptions {
  std::optional<fs::path> grammar;  // built-in grammar when empty
  /// Grammar recorded in a manifest; takes precedence over `grammar`.
  std::optional<corpus::GrammarSpec> grammar_spec;
  std::uint64_t seed = 7;
  std::size_t n_per_class = 500;
};

struct TrainOptions {
  std::uint64_t seed = 1;  // weight init and batch order
  std::size_t embedding_dim = 32;
  std::size_t hidden1 = 64;
  std::size_t hidden2 = 64;
  double init_scale = 0.1;
  rnn::TrainConfig train;
  double train_fraction = 0.9;
  std::uint64_t split_seed = 1;
  corpus::PaddingSide padding = corpus::PaddingSide::Post;
  bool untrained = false;  // write the initialized model without training
};

enum class MethodSet : std::uint8_t { Mds, Tsne, Both };
MethodSet parse_method_set(std::string_view s);
rnn::Optimizer parse_optimizer(std::string_view s);
corpus::PaddingSide parse_padding(std::string_view s);

struct AnalyzeOptions {
  probe::PoolingScheme pooling = probe::PoolingScheme::standard();
  MethodSet methods = MethodSet::Both;
  bool mds_zscore = false;  // MDS on half-z-scored activations instead of raw
  geometry::TsneConfig tsne;
};

/// Effective configuration of a run. Serialized into manifest.json; a
/// manifest can be passed back as --config to reproduce the run.
struct RunConfig {
  GenerateOptions generate;
  TrainOptions train;
  AnalyzeOptions analyze;
};

std::string config_to_json(const RunConfig& config);
/// Overrides the fields present in `json_text` on top of `base`. Accepts a
/// bare config or a manifest (uses its "config" member).
RunConfig config_from_json(std::string_view json_text, RunConfig base = {});
RunConfig load_config(const fs::path& path, RunConfig base = {});

corpus::GrammarSpec resolve_grammar(const GenerateOptions& options);

// ---- stages ------------------------------------------------------------------

struct GenerateOutputs {
  fs::path corpus_file;
  fs::path vocab_file;
  std::string corpus_hash;
  std::array<std::size_t, corpus::kNumConstructions> counts{};
  std::size_t vocab_size = 0;
};

/// Writes corpus.jsonl, vocab.json (omitted for an empty corpus) and the
/// manifest's generate section.
GenerateOutputs run_generate(const RunConfig& config, const fs::path& out_dir);

struct TrainOutputs {
  fs::path checkpoint;
  fs::path log;
  std::string checkpoint_hash;
  rnn::Metrics validation;
  double chance_accuracy = 0.0;
  std::vector<rnn::EpochRecord> history;
};

/// Reads corpus_dir/{corpus.jsonl,vocab.json}; writes model.ckpt and
/// train_log.csv (epoch,train_loss,val_loss,val_accuracy) into out_dir.
TrainOutputs run_train(const RunConfig& config, const fs::path& corpus_dir,
                       const fs::path& out_dir,
                       const rnn::EpochCallback& on_epoch = {});

struct LayerAnalysis {
  probe::LayerId layer;
  geometry::GdvResult gdv;
  std::map<geometry::Method, geometry::ProjectionResult> projections;
};

struct OrdinalSummary {
  std::vector<probe::LayerId> ranking;  // most negative GDV first
  probe::LayerId best = probe::LayerId::Lstm2;
  bool all_negative = false;
  bool best_is_lstm2 = false;
  bool output_less_negative_than_lstm2 = false;
  bool matches_paper() const { return best_is_lstm2 && output_less_negative_than_lstm2; }
};

OrdinalSummary summarize(const std::map<probe::LayerId, double>& gdv_by_layer);

struct AnalysisReport {
  std::vector<LayerAnalysis> layers;
  OrdinalSummary summary;
  std::vector<fs::path> files;  // every file written, relative to out_dir
};

/// Per-layer GDV for extracted tables (the analysis core, without files).
std::map<probe::LayerId, geometry::GdvResult> layer_gdvs(
    const std::map<probe::LayerId, probe::ActivationTable>& tables);

/// Writes gdv.json, summary.json, <method>_<layer>.csv/.svg for each chosen
/// method, and activations/<layer>.{bin,json}. Either every declared file is
/// written or an exception is thrown.
AnalysisReport run_analyze(const RunConfig& config, const fs::path& checkpoint,
                           const fs::path& corpus_dir, const fs::path& out_dir);

/// File names analyze declares for a method set.
std::vector<fs::path> declared_analysis_files(MethodSet methods);

struct ReportRow {
  probe::LayerId layer;
  double gdv = 0.0;
};

struct RunReport {
  std::vector<ReportRow> rows;
  OrdinalSummary summary;
};

/// Reads gdv.json + summary.json and checks every declared coordinate file.
/// Throws MissingInput naming the first missing file.
RunReport load_report(const fs::path& run_dir);
std::string format_report_text(const RunReport& report);
std::string format_report_json(const RunReport& report);

// ---- files -------------------------------------------------------------------

/// "index,label,x,y" rows.
std::string projection_csv(const geometry::ProjectionResult& projection,
                           const std::vector<corpus::Construction>& labels);
/// Deterministic scatter plot colored by construction.
std::string projection_svg(const geometry::ProjectionResult& projection,
                           const std::vector<corpus::Construction>& labels,
                           const std::string& title);
/// {layer, gdv, intra, inter, d_eff, dropped_dims}
std::string gdv_json(const std::map<probe::LayerId, geometry::GdvResult>& results);

/// Creates the directory (and parents); IoError naming the path on failure.
void ensure_directory(const fs::path& dir);

}  // namespace ascprobe::pipeline
