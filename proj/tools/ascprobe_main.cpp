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

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "ascprobe/errors.hpp"
#include "ascprobe/pipeline.hpp"

namespace {

namespace fs = std::filesystem;
namespace pl = ascprobe::pipeline;
using nlohmann::ordered_json;

struct Flags {
  std::optional<std::string> config;
  std::string out = ".";
  bool json = false;

  // generate
  std::optional<std::uint64_t> corpus_seed;
  std::optional<std::size_t> n_per_class;
  std::optional<std::string> grammar;
  std::optional<std::string> dump_grammar;

  // train
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> epochs;
  std::optional<std::size_t> batch_size;
  std::optional<double> lr;
  std::optional<std::size_t> embedding_dim;
  std::optional<std::size_t> hidden1;
  std::optional<std::size_t> hidden2;
  std::optional<double> init_scale;
  std::optional<std::string> optimizer;
  std::optional<double> clip_norm;
  std::optional<double> train_fraction;
  std::optional<std::uint64_t> split_seed;
  std::optional<std::string> padding;
  bool untrained = false;
  std::optional<std::string> corpus_dir;

  // analyze
  std::optional<std::string> checkpoint;
  std::optional<std::string> pooling;
  std::optional<std::string> embedding_pooling;
  std::optional<double> perplexity;
  std::optional<std::string> method;
  std::optional<std::size_t> tsne_iterations;
  std::optional<std::uint64_t> tsne_seed;
  bool mds_zscore = false;
};

template <typename T, typename U>
void apply(const std::optional<T>& flag, U& target) {
  if (flag) target = static_cast<U>(*flag);
}

pl::RunConfig effective_config(const Flags& f) {
  pl::RunConfig cfg;
  if (f.config) cfg = pl::load_config(*f.config, cfg);

  auto& g = cfg.generate;
  apply(f.corpus_seed, g.seed);
  apply(f.n_per_class, g.n_per_class);
  if (f.grammar) {
    g.grammar = fs::path(*f.grammar);
    g.grammar_spec.reset();
  }

  auto& t = cfg.train;
  apply(f.seed, t.seed);
  apply(f.epochs, t.train.epochs);
  apply(f.batch_size, t.train.batch_size);
  apply(f.lr, t.train.learning_rate);
  apply(f.embedding_dim, t.embedding_dim);
  apply(f.hidden1, t.hidden1);
  apply(f.hidden2, t.hidden2);
  apply(f.init_scale, t.init_scale);
  if (f.optimizer) t.train.optimizer = pl::parse_optimizer(*f.optimizer);
  apply(f.clip_norm, t.train.clip_norm);
  apply(f.train_fraction, t.train_fraction);
  apply(f.split_seed, t.split_seed);
  if (f.padding) t.padding = pl::parse_padding(*f.padding);
  if (f.untrained) t.untrained = true;

  auto& a = cfg.analyze;
  if (f.pooling) {
    a.pooling = ascprobe::probe::PoolingScheme::uniform(ascprobe::probe::parse_pooling(*f.pooling));
  }
  if (f.embedding_pooling) {
    a.pooling.at(ascprobe::probe::LayerId::Embedding) =
        ascprobe::probe::parse_pooling(*f.embedding_pooling);
  }
  apply(f.perplexity, a.tsne.perplexity);
  if (f.method) a.methods = pl::parse_method_set(*f.method);
  apply(f.tsne_iterations, a.tsne.iterations);
  apply(f.tsne_seed, a.tsne.seed);
  if (f.mds_zscore) a.mds_zscore = true;
  return cfg;
}

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("--out", f.out, "Output directory")->capture_default_str();
  cmd->add_option("--config", f.config, "JSON config or manifest.json to start from");
  cmd->add_flag("--json", f.json, "Machine-readable output");
}

void add_generate(CLI::App* cmd, Flags& f, bool prefixed) {
  cmd->add_option(prefixed ? "--corpus-seed" : "--seed", f.corpus_seed, "Corpus sampling seed");
  cmd->add_option("--n-per-class", f.n_per_class, "Sentences per construction");
  cmd->add_option("--grammar", f.grammar, "Grammar JSON file (built-in grammar otherwise)");
}

void add_train(CLI::App* cmd, Flags& f) {
  cmd->add_option("--seed", f.seed, "Weight init and batch order seed");
  cmd->add_option("--epochs", f.epochs);
  cmd->add_option("--batch-size", f.batch_size);
  cmd->add_option("--lr", f.lr, "Learning rate");
  cmd->add_option("--embedding-dim", f.embedding_dim);
  cmd->add_option("--hidden1", f.hidden1);
  cmd->add_option("--hidden2", f.hidden2);
  cmd->add_option("--init-scale", f.init_scale);
  cmd->add_option("--optimizer", f.optimizer)->check(CLI::IsMember({"adam", "sgd"}));
  cmd->add_option("--clip-norm", f.clip_norm, "Global gradient norm limit");
  cmd->add_option("--train-fraction", f.train_fraction);
  cmd->add_option("--split-seed", f.split_seed);
  cmd->add_option("--padding", f.padding)->check(CLI::IsMember({"post", "pre"}));
  cmd->add_flag("--untrained", f.untrained, "Save the initialized model without training");
}

void add_analyze(CLI::App* cmd, Flags& f) {
  cmd->add_option("--pooling", f.pooling, "Pooling for every layer")
      ->check(CLI::IsMember({"last", "mean"}));
  cmd->add_option("--embedding-pooling", f.embedding_pooling)
      ->check(CLI::IsMember({"last", "mean"}));
  cmd->add_option("--perplexity", f.perplexity, "t-SNE perplexity (default 100)");
  cmd->add_option("--method", f.method)->check(CLI::IsMember({"mds", "tsne", "both"}));
  cmd->add_option("--tsne-iterations", f.tsne_iterations);
  cmd->add_option("--tsne-seed", f.tsne_seed);
  cmd->add_flag("--mds-zscore", f.mds_zscore, "MDS on half-z-scored activations");
}

void print_json(const ordered_json& j) { std::cout << j.dump(2) << "\n"; }

ordered_json counts_json(const pl::GenerateOutputs& g) {
  ordered_json j;
  for (auto c : ascprobe::corpus::kAllConstructions) {
    j[std::string(ascprobe::corpus::label_name(c))] = g.counts[ascprobe::corpus::index_of(c)];
  }
  return j;
}

void do_generate(const Flags& f, const pl::RunConfig& cfg, const fs::path& out) {
  if (f.dump_grammar) {
    const auto grammar = pl::resolve_grammar(cfg.generate);
    grammar.validate();
    std::FILE* fp = std::fopen(f.dump_grammar->c_str(), "wb");
    if (!fp) throw ascprobe::IoError("cannot write " + *f.dump_grammar);
    const std::string text = ascprobe::corpus::grammar_to_json(grammar);
    const bool ok = std::fwrite(text.data(), 1, text.size(), fp) == text.size();
    std::fclose(fp);
    if (!ok) throw ascprobe::IoError("write failed for " + *f.dump_grammar);
    return;
  }
  const auto g = pl::run_generate(cfg, out);
  if (f.json) {
    print_json({{"corpus", g.corpus_file.string()},
                {"sha256", g.corpus_hash},
                {"vocab_size", g.vocab_size},
                {"counts", counts_json(g)}});
  } else {
    std::size_t total = 0;
    for (auto c : ascprobe::corpus::kAllConstructions) {
      const auto n = g.counts[ascprobe::corpus::index_of(c)];
      total += n;
      fmt::print("{:<14} {}\n", ascprobe::corpus::label_name(c), n);
    }
    fmt::print("{:<14} {}\n", "total", total);
    fmt::print("wrote {}\n", g.corpus_file.string());
  }
}

void do_train(const Flags& f, const pl::RunConfig& cfg, const fs::path& corpus_dir,
              const fs::path& out) {
  ascprobe::rnn::EpochCallback progress;
  if (!f.json) {
    progress = [](const ascprobe::rnn::EpochRecord& r) {
      if (r.validation) {
        fmt::print("epoch {:>3}  train_loss {:.4f}  val_loss {:.4f}  val_acc {:.4f}\n", r.epoch,
                   r.train_loss, r.validation->loss, r.validation->accuracy);
      } else {
        fmt::print("epoch {:>3}  train_loss {:.4f}\n", r.epoch, r.train_loss);
      }
      std::fflush(stdout);
    };
  }
  const auto t = pl::run_train(cfg, corpus_dir, out, progress);
  if (f.json) {
    print_json({{"checkpoint", t.checkpoint.string()},
                {"sha256", t.checkpoint_hash},
                {"epochs", t.history.size()},
                {"val_accuracy", t.validation.accuracy},
                {"val_perplexity", t.validation.perplexity},
                {"val_loss", t.validation.loss},
                {"chance_accuracy", t.chance_accuracy}});
  } else {
    fmt::print("val accuracy {:.4f} (chance {:.4f})  val perplexity {:.3f}\n",
               t.validation.accuracy, t.chance_accuracy, t.validation.perplexity);
    fmt::print("wrote {}\n", t.checkpoint.string());
  }
}

void do_analyze(const Flags& f, const pl::RunConfig& cfg, const fs::path& checkpoint,
                const fs::path& corpus_dir, const fs::path& out) {
  const auto report = pl::run_analyze(cfg, checkpoint, corpus_dir, out);
  if (f.json) {
    ordered_json layers = ordered_json::array();
    for (const auto& la : report.layers) {
      layers.push_back({{"layer", ascprobe::probe::layer_name(la.layer)}, {"gdv", la.gdv.gdv}});
    }
    print_json({{"layers", layers},
                {"best", ascprobe::probe::layer_name(report.summary.best)},
                {"files", report.files.size()}});
  } else {
    for (const auto& la : report.layers) {
      fmt::print("{:<10} gdv {:.6f}\n", ascprobe::probe::layer_name(la.layer), la.gdv.gdv);
    }
    fmt::print("wrote {} files to {}\n", report.files.size(), out.string());
  }
}

void do_report(const Flags& f, const fs::path& run_dir) {
  const auto report = pl::load_report(run_dir);
  std::cout << (f.json ? pl::format_report_json(report) : pl::format_report_text(report));
}

int run_cli(int argc, char** argv) {
  CLI::App app{"Construction-probing pipeline: generate, train, analyze, report"};
  app.set_version_flag("--version", std::string(pl::tool_version()));
  app.require_subcommand(1);

  Flags f;
  auto* gen = app.add_subcommand("generate", "Write corpus.jsonl and vocab.json");
  add_common(gen, f);
  add_generate(gen, f, false);
  gen->add_option("--dump-grammar", f.dump_grammar, "Write the grammar as JSON and exit");

  auto* trn = app.add_subcommand("train", "Train the LSTM language model");
  add_common(trn, f);
  add_train(trn, f);
  trn->add_option("--corpus", f.corpus_dir, "Directory with corpus.jsonl/vocab.json (default --out)");

  auto* ana = app.add_subcommand("analyze", "Extract activations, GDV and projections");
  add_common(ana, f);
  add_analyze(ana, f);
  ana->add_option("--checkpoint", f.checkpoint, "Model checkpoint (default <out>/model.ckpt)");
  ana->add_option("--corpus", f.corpus_dir, "Corpus directory (default: the checkpoint's)");

  auto* rep = app.add_subcommand("report", "Summarize an analyzed run");
  std::optional<std::string> run_dir;
  rep->add_option("run_dir", run_dir, "Run directory (default --out)");
  rep->add_option("--out", f.out, "Run directory")->capture_default_str();
  rep->add_flag("--json", f.json, "Machine-readable output");

  auto* all = app.add_subcommand("run", "generate, train, analyze and report into one directory");
  add_common(all, f);
  add_generate(all, f, true);
  add_train(all, f);
  add_analyze(all, f);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return pl::kExitDomain;
  }

  const fs::path out = f.out;
  if (*rep) {
    do_report(f, run_dir ? fs::path(*run_dir) : out);
    return pl::kExitOk;
  }
  const pl::RunConfig cfg = effective_config(f);
  if (*gen) {
    do_generate(f, cfg, out);
  } else if (*trn) {
    do_train(f, cfg, f.corpus_dir ? fs::path(*f.corpus_dir) : out, out);
  } else if (*ana) {
    const fs::path ckpt = f.checkpoint ? fs::path(*f.checkpoint) : out / "model.ckpt";
    fs::path corpus_dir = f.corpus_dir ? fs::path(*f.corpus_dir) : ckpt.parent_path();
    if (corpus_dir.empty()) corpus_dir = ".";
    do_analyze(f, cfg, ckpt, corpus_dir, out);
  } else if (*all) {
    do_generate(f, cfg, out);
    do_train(f, cfg, out, out);
    do_analyze(f, cfg, out / "model.ckpt", out, out);
    if (!f.json) do_report(f, out);
  }
  return pl::kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run_cli(argc, argv);
  } catch (const ascprobe::DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return pl::kExitDomain;
  } catch (const ascprobe::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return pl::kExitIo;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return pl::kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return pl::kExitIo;
  }
}
