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

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "ascprobe/corpus.hpp"
#include "ascprobe/errors.hpp"

namespace ascprobe::corpus {

using nlohmann::ordered_json;

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

ordered_json parse_or_throw(std::string_view text, const std::string& what) {
  try {
    return ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DomainError(what + ": " + e.what());
  }
}

}  // namespace

std::string corpus_to_jsonl(const Corpus& corpus) {
  std::string out;
  for (const auto& s : corpus.sentences) {
    ordered_json line;
    line["text"] = join_words(s.words);
    line["label"] = std::string(label_name(s.label));
    out += line.dump();
    out.push_back('\n');
  }
  return out;
}

void write_corpus_jsonl(const std::filesystem::path& path, const Corpus& corpus) {
  write_text(path, corpus_to_jsonl(corpus));
}

Corpus read_corpus_jsonl(const std::filesystem::path& path) {
  std::istringstream in(read_text(path));
  Corpus corpus;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto where = path.string() + ":" + std::to_string(line_no);
    const auto obj = parse_or_throw(line, where);
    if (!obj.is_object() || !obj.contains("text") || !obj.contains("label")) {
      throw DomainError(where + ": expected {\"text\", \"label\"}");
    }
    corpus.sentences.push_back(Sentence{tokenize(obj["text"].get<std::string>()),
                                        parse_label(obj["label"].get<std::string>())});
  }
  return corpus;
}

std::string vocab_to_json(const Vocabulary& vocab) {
  ordered_json j;
  j["pad_id"] = Vocabulary::kPadId;
  j["unk_id"] = Vocabulary::kUnkId;
  j["words"] = vocab.words();
  return j.dump(1) + "\n";
}

void write_vocab_json(const std::filesystem::path& path, const Vocabulary& vocab) {
  write_text(path, vocab_to_json(vocab));
}

Vocabulary read_vocab_json(const std::filesystem::path& path) {
  const auto j = parse_or_throw(read_text(path), path.string());
  if (j.value("pad_id", -1) != Vocabulary::kPadId || j.value("unk_id", -1) != Vocabulary::kUnkId) {
    throw DomainError(path.string() + ": reserved ids must be pad_id=0, unk_id=1");
  }
  auto words = j.at("words").get<std::vector<std::string>>();
  Vocabulary vocab(words);
  if (vocab.words() != words) {
    throw DomainError(path.string() + ": words must be sorted and unique");
  }
  return vocab;
}

std::string grammar_to_json(const GrammarSpec& spec) {
  ordered_json j;
  j["determiner_policy"] =
      spec.determiner_policy == DeterminerPolicy::Literal ? "literal" : "definite";
  j["determiner"] = spec.determiner;
  j["shared_verbs"] = spec.shared_verbs;
  ordered_json constructions = ordered_json::object();
  for (Construction c : kAllConstructions) {
    ordered_json tmpl;
    ordered_json order = ordered_json::array();
    ordered_json slots = ordered_json::object();
    for (const auto& s : spec.at(c).slots) {
      order.push_back(std::string(slot_name(s.slot)));
      slots[std::string(slot_name(s.slot))] = s.fillers;
    }
    tmpl["template"] = std::move(order);
    tmpl["slots"] = std::move(slots);
    constructions[std::string(label_name(c))] = std::move(tmpl);
  }
  j["constructions"] = std::move(constructions);
  return j.dump(2) + "\n";
}

GrammarSpec grammar_from_json(std::string_view text) {
  const auto j = parse_or_throw(text, "grammar");
  GrammarSpec spec;
  try {
    const auto policy = j.value("determiner_policy", std::string("literal"));
    if (policy == "literal") {
      spec.determiner_policy = DeterminerPolicy::Literal;
    } else if (policy == "definite") {
      spec.determiner_policy = DeterminerPolicy::Definite;
    } else {
      throw InvalidGrammar("determiner_policy must be 'literal' or 'definite'");
    }
    spec.determiner = j.value("determiner", std::string("the"));
    spec.shared_verbs = j.value("shared_verbs", std::vector<std::string>{});
    const auto& constructions = j.at("constructions");
    if (constructions.size() != kNumConstructions) {
      throw InvalidGrammar("exactly four constructions are required");
    }
    for (Construction c : kAllConstructions) {
      const auto& tmpl = constructions.at(std::string(label_name(c)));
      auto& out = spec.at(c);
      for (const auto& name : tmpl.at("template")) {
        const auto slot_key = name.get<std::string>();
        out.slots.push_back(SlotFillers{
            parse_slot(slot_key),
            tmpl.at("slots").at(slot_key).get<std::vector<std::string>>()});
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw InvalidGrammar(e.what());
  }
  spec.validate();
  return spec;
}

GrammarSpec read_grammar_json(const std::filesystem::path& path) {
  return grammar_from_json(read_text(path));
}

}  // namespace ascprobe::corpus
