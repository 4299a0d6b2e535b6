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

#include "ascprobe/probe.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "ascprobe/errors.hpp"
#include "ascprobe/parallel.hpp"

namespace ascprobe::probe {

using Eigen::Index;
using nlohmann::ordered_json;

std::string_view layer_name(LayerId layer) {
  switch (layer) {
    case LayerId::Embedding: return "embedding";
    case LayerId::Lstm1: return "lstm1";
    case LayerId::Lstm2: return "lstm2";
    case LayerId::Output: return "output";
  }
  return "?";
}

LayerId parse_layer(std::string_view name) {
  for (LayerId l : kAllLayers) {
    if (layer_name(l) == name) return l;
  }
  throw DomainError("unknown layer '" + std::string(name) + "'");
}

std::string_view pooling_name(Pooling p) { return p == Pooling::Last ? "last" : "mean"; }

Pooling parse_pooling(std::string_view name) {
  if (name == "last") return Pooling::Last;
  if (name == "mean") return Pooling::Mean;
  throw DomainError("unknown pooling '" + std::string(name) + "'");
}

PoolingScheme PoolingScheme::standard() {
  PoolingScheme s = uniform(Pooling::Last);
  s.at(LayerId::Embedding) = Pooling::Mean;
  return s;
}

PoolingScheme PoolingScheme::uniform(Pooling p) {
  PoolingScheme s;
  s.per_layer.fill(p);
  return s;
}

std::array<std::size_t, corpus::kNumConstructions> ActivationTable::label_histogram() const {
  std::array<std::size_t, corpus::kNumConstructions> h{};
  for (auto l : labels) ++h[corpus::index_of(l)];
  return h;
}

Index layer_dim(const rnn::ModelConfig& config, LayerId layer) {
  switch (layer) {
    case LayerId::Embedding: return static_cast<Index>(config.embedding_dim);
    case LayerId::Lstm1: return static_cast<Index>(config.hidden1);
    case LayerId::Lstm2: return static_cast<Index>(config.hidden2);
    case LayerId::Output: return static_cast<Index>(config.vocab_size);
  }
  return 0;
}

namespace {

const Eigen::MatrixXd& layer_values(const rnn::LayerActivations& acts, LayerId layer) {
  switch (layer) {
    case LayerId::Embedding: return acts.embedding;
    case LayerId::Lstm1: return acts.h1;
    case LayerId::Lstm2: return acts.h2;
    case LayerId::Output: break;
  }
  return acts.probs;
}

}  // namespace

Eigen::VectorXd sentence_representation(const rnn::LayerActivations& acts,
                                        std::span<const std::uint8_t> mask, LayerId layer,
                                        Pooling pooling) {
  const auto& values = layer_values(acts, layer);
  Index last = -1;
  std::size_t real = 0;
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(values.rows());
  for (std::size_t t = 0; t < mask.size(); ++t) {
    if (!mask[t]) continue;
    last = static_cast<Index>(t);
    sum += values.col(last);
    ++real;
  }
  if (real == 0) throw EmptySentence("sentence has no real timesteps");
  if (pooling == Pooling::Last) return values.col(last);
  return sum / static_cast<double>(real);
}

std::map<LayerId, ActivationTable> extract_all(const rnn::ModelParams& params,
                                               const corpus::EncodedCorpus& encoded,
                                               const PoolingScheme& pooling,
                                               const std::string& vocab_fingerprint,
                                               const std::string& checkpoint_hash) {
  if (encoded.vocab && encoded.vocab->size() != params.config.vocab_size) {
    throw VocabMismatch("model vocabulary has " + std::to_string(params.config.vocab_size) +
                        " ids, corpus vocabulary has " + std::to_string(encoded.vocab->size()));
  }
  if (!vocab_fingerprint.empty() && !params.vocab_fingerprint.empty() &&
      vocab_fingerprint != params.vocab_fingerprint) {
    throw VocabMismatch("checkpoint was trained with a different vocabulary file");
  }

  const auto N = static_cast<Index>(encoded.rows);
  std::map<LayerId, ActivationTable> tables;
  for (LayerId layer : kAllLayers) {
    auto& table = tables[layer];
    table.layer = layer;
    table.values.resize(N, layer_dim(params.config, layer));
    table.labels = encoded.labels;
    table.pooling = pooling.at(layer);
    table.checkpoint_hash = checkpoint_hash;
  }
  parallel_for(encoded.rows, [&](std::size_t i) {
    const auto mask = encoded.mask_row(i);
    const auto acts = rnn::forward(params, encoded.token_row(i), mask);
    for (LayerId layer : kAllLayers) {
      auto& table = tables.at(layer);
      table.values.row(static_cast<Index>(i)) =
          sentence_representation(acts, mask, layer, table.pooling).transpose();
    }
  });
  return tables;
}

namespace {

constexpr char kMagic[8] = {'A', 'S', 'C', 'P', 'A', 'C', 'T', 'S'};
constexpr std::uint32_t kTableVersion = 1;

std::filesystem::path with_ext(std::filesystem::path stem, const char* ext) {
  stem += ext;
  return stem;
}

ordered_json manifest_json(const ActivationTable& table) {
  ordered_json j;
  j["layer"] = std::string(layer_name(table.layer));
  j["policy"] = std::string(pooling_name(table.pooling));
  j["N"] = table.values.rows();
  j["D"] = table.values.cols();
  ordered_json hist = ordered_json::object();
  const auto h = table.label_histogram();
  for (auto c : corpus::kAllConstructions) {
    hist[std::string(corpus::label_name(c))] = h[corpus::index_of(c)];
  }
  j["label_histogram"] = std::move(hist);
  j["checkpoint_hash"] = table.checkpoint_hash;
  return j;
}

}  // namespace

void write_table(const std::filesystem::path& stem, const ActivationTable& table) {
  ordered_json header = manifest_json(table);
  header["version"] = kTableVersion;
  ordered_json labels = ordered_json::array();
  for (auto l : table.labels) labels.push_back(std::string(corpus::label_name(l)));
  header["labels"] = std::move(labels);
  const std::string header_text = header.dump();

  std::string bytes(kMagic, sizeof(kMagic));
  auto put = [&bytes](const auto& v) {
    char raw[sizeof(v)];
    std::memcpy(raw, &v, sizeof(v));
    bytes.append(raw, sizeof(v));
  };
  put(kTableVersion);
  put(static_cast<std::uint64_t>(header_text.size()));
  bytes += header_text;
  for (Index r = 0; r < table.values.rows(); ++r) {
    for (Index c = 0; c < table.values.cols(); ++c) put(table.values(r, c));
  }

  std::ofstream bin(with_ext(stem, ".bin"), std::ios::binary | std::ios::trunc);
  if (!bin) throw IoError("cannot write " + with_ext(stem, ".bin").string());
  bin.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  std::ofstream side(with_ext(stem, ".json"), std::ios::binary | std::ios::trunc);
  if (!side) throw IoError("cannot write " + with_ext(stem, ".json").string());
  side << manifest_json(table).dump(2) << "\n";
  if (!bin || !side) throw IoError("write failed for " + stem.string());
}

ActivationTable read_table(const std::filesystem::path& stem) {
  std::ifstream in(with_ext(stem, ".bin"), std::ios::binary);
  if (!in) throw IoError("cannot read " + with_ext(stem, ".bin").string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  const std::string bytes = buffer.str();

  std::size_t offset = 0;
  auto take = [&](auto& v) {
    if (offset + sizeof(v) > bytes.size()) throw DomainError("truncated activation table");
    std::memcpy(&v, bytes.data() + offset, sizeof(v));
    offset += sizeof(v);
  };
  if (bytes.size() < sizeof(kMagic) || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw DomainError("not an activation table: " + stem.string());
  }
  offset = sizeof(kMagic);
  std::uint32_t version = 0;
  std::uint64_t header_len = 0;
  take(version);
  take(header_len);
  if (version != kTableVersion) throw DomainError("unsupported activation table version");
  if (offset + header_len > bytes.size()) throw DomainError("truncated activation table");
  const auto header = ordered_json::parse(bytes.substr(offset, header_len));
  offset += header_len;

  ActivationTable table;
  table.layer = parse_layer(header.at("layer").get<std::string>());
  table.pooling = parse_pooling(header.at("policy").get<std::string>());
  table.checkpoint_hash = header.at("checkpoint_hash").get<std::string>();
  table.values.resize(header.at("N").get<Index>(), header.at("D").get<Index>());
  for (const auto& l : header.at("labels")) {
    table.labels.push_back(corpus::parse_label(l.get<std::string>()));
  }
  for (Index r = 0; r < table.values.rows(); ++r) {
    for (Index c = 0; c < table.values.cols(); ++c) take(table.values(r, c));
  }
  return table;
}

}  // namespace ascprobe::probe
