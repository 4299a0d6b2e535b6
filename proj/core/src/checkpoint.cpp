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

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "ascprobe/errors.hpp"
#include "ascprobe/rnn.hpp"

namespace ascprobe::rnn {

using Eigen::Index;
using nlohmann::ordered_json;

namespace {

constexpr char kMagic[8] = {'A', 'S', 'C', 'P', 'C', 'K', 'P', 'T'};

static_assert(std::endian::native == std::endian::little,
              "checkpoint writer assumes a little-endian host");

template <typename T>
void put(std::string& out, T value) {
  char raw[sizeof(T)];
  std::memcpy(raw, &value, sizeof(T));
  out.append(raw, sizeof(T));
}

template <typename T>
T take(std::string_view bytes, std::size_t& offset) {
  if (offset + sizeof(T) > bytes.size()) throw CheckpointMismatch("truncated file");
  T value;
  std::memcpy(&value, bytes.data() + offset, sizeof(T));
  offset += sizeof(T);
  return value;
}

ordered_json config_json(const ModelConfig& c) {
  ordered_json j;
  j["vocab_size"] = c.vocab_size;
  j["embedding_dim"] = c.embedding_dim;
  j["hidden1"] = c.hidden1;
  j["hidden2"] = c.hidden2;
  j["max_seq_len"] = c.max_seq_len;
  j["init_scale"] = c.init_scale;
  j["seed"] = c.seed;
  return j;
}

ModelConfig config_from_json(const ordered_json& j) {
  ModelConfig c;
  c.vocab_size = j.at("vocab_size").get<std::size_t>();
  c.embedding_dim = j.at("embedding_dim").get<std::size_t>();
  c.hidden1 = j.at("hidden1").get<std::size_t>();
  c.hidden2 = j.at("hidden2").get<std::size_t>();
  c.max_seq_len = j.at("max_seq_len").get<std::size_t>();
  c.init_scale = j.at("init_scale").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

}  // namespace

std::string checkpoint_bytes(const ModelParams& params) {
  ordered_json header;
  header["format"] = "ascprobe-checkpoint";
  header["version"] = kCheckpointVersion;
  header["config"] = config_json(params.config);
  header["vocab_fingerprint"] = params.vocab_fingerprint;
  ordered_json manifest = ordered_json::array();
  params.for_each([&](std::string_view name, const auto& t) {
    manifest.push_back({{"name", name}, {"rows", t.rows()}, {"cols", t.cols()}});
  });
  header["tensors"] = std::move(manifest);
  const std::string header_text = header.dump();

  std::string out(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint64_t>(out, header_text.size());
  out += header_text;
  params.for_each([&](std::string_view, const auto& t) {
    for (Index r = 0; r < t.rows(); ++r) {
      for (Index c = 0; c < t.cols(); ++c) put<double>(out, t(r, c));
    }
  });
  return out;
}

void save_checkpoint(const std::filesystem::path& path, const ModelParams& params) {
  const auto bytes = checkpoint_bytes(params);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

ModelParams checkpoint_from_bytes(std::string_view bytes) {
  if (bytes.size() < sizeof(kMagic) || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw CheckpointMismatch("not an ascprobe checkpoint");
  }
  std::size_t offset = sizeof(kMagic);
  const auto version = take<std::uint32_t>(bytes, offset);
  if (version != kCheckpointVersion) {
    throw CheckpointMismatch("unsupported version " + std::to_string(version));
  }
  const auto header_len = take<std::uint64_t>(bytes, offset);
  if (offset + header_len > bytes.size()) throw CheckpointMismatch("truncated header");
  ordered_json header;
  ModelParams params;
  try {
    header = ordered_json::parse(bytes.substr(offset, header_len));
    if (header.at("version").get<std::uint32_t>() != kCheckpointVersion) {
      throw CheckpointMismatch("header version mismatch");
    }
    params.config = config_from_json(header.at("config"));
    params.vocab_fingerprint = header.at("vocab_fingerprint").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointMismatch(std::string("bad header: ") + e.what());
  }
  offset += header_len;

  // Shapes come from the config; the manifest must agree with them exactly.
  static_cast<Tensors&>(params) = init_params(params.config).zeros_like();
  const auto& manifest = header.at("tensors");
  std::size_t k = 0;
  params.for_each([&](std::string_view name, auto& t) {
    if (k >= manifest.size()) throw CheckpointMismatch("tensor manifest is short");
    const auto& entry = manifest[k++];
    if (entry.value("name", std::string()) != name ||
        entry.value("rows", Index{-1}) != t.rows() || entry.value("cols", Index{-1}) != t.cols()) {
      throw CheckpointMismatch("tensor manifest disagrees with config at " + std::string(name));
    }
    for (Index r = 0; r < t.rows(); ++r) {
      for (Index c = 0; c < t.cols(); ++c) t(r, c) = take<double>(bytes, offset);
    }
  });
  if (k != manifest.size()) throw CheckpointMismatch("tensor manifest has extra entries");
  if (offset != bytes.size()) throw CheckpointMismatch("trailing bytes after tensors");
  return params;
}

ModelParams load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return checkpoint_from_bytes(buffer.str());
}

}  // namespace ascprobe::rnn
