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

#include <algorithm>
#include <cctype>
#include <initializer_list>
#include <limits>
#include <map>
#include <set>
#include <string>

#include "ascprobe/corpus.hpp"
#include "ascprobe/errors.hpp"

namespace ascprobe::corpus {

std::string_view label_name(Construction c) {
  switch (c) {
    case Construction::Transitive: return "transitive";
    case Construction::Ditransitive: return "ditransitive";
    case Construction::CausedMotion: return "caused_motion";
    case Construction::Resultative: return "resultative";
  }
  return "?";
}

Construction parse_label(std::string_view name) {
  for (Construction c : kAllConstructions) {
    if (label_name(c) == name) return c;
  }
  throw DomainError("unknown construction label '" + std::string(name) + "'");
}

std::string_view slot_name(Slot s) {
  switch (s) {
    case Slot::Subject: return "subject";
    case Slot::Verb: return "verb";
    case Slot::Object: return "object";
    case Slot::Recipient: return "recipient";
    case Slot::Path: return "path";
    case Slot::State: return "state";
  }
  return "?";
}

Slot parse_slot(std::string_view name) {
  for (Slot s : {Slot::Subject, Slot::Verb, Slot::Object, Slot::Recipient,
                 Slot::Path, Slot::State}) {
    if (slot_name(s) == name) return s;
  }
  throw InvalidGrammar("unknown slot '" + std::string(name) + "'");
}

std::uint64_t ConstructionTemplate::combination_count() const {
  std::uint64_t total = 1;
  for (const auto& slot : slots) {
    const std::uint64_t n = slot.fillers.size();
    if (n == 0) return 0;
    if (total > std::numeric_limits<std::uint64_t>::max() / n) {
      return std::numeric_limits<std::uint64_t>::max();
    }
    total *= n;
  }
  return total;
}

const std::vector<std::string>* ConstructionTemplate::fillers_for(Slot s) const {
  for (const auto& slot : slots) {
    if (slot.slot == s) return &slot.fillers;
  }
  return nullptr;
}

namespace {

// Table of the structure each construction must realize.
std::vector<Slot> required_structure(Construction c) {
  switch (c) {
    case Construction::Transitive:
      return {Slot::Subject, Slot::Verb, Slot::Object};
    case Construction::Ditransitive:
      return {Slot::Subject, Slot::Verb, Slot::Recipient, Slot::Object};
    case Construction::CausedMotion:
      return {Slot::Subject, Slot::Verb, Slot::Object, Slot::Path};
    case Construction::Resultative:
      return {Slot::Subject, Slot::Verb, Slot::Object, Slot::State};
  }
  return {};
}

SlotFillers fill(Slot slot, std::vector<std::string> words) {
  return SlotFillers{slot, std::move(words)};
}

}  // namespace

void GrammarSpec::validate() const {
  std::map<std::string, std::vector<Construction>> verb_owners;
  for (Construction c : kAllConstructions) {
    const auto& tmpl = at(c);
    std::vector<Slot> got;
    for (const auto& s : tmpl.slots) got.push_back(s.slot);
    if (got != required_structure(c)) {
      throw InvalidGrammar(std::string(label_name(c)) +
                           " template does not match its construction structure");
    }
    for (const auto& s : tmpl.slots) {
      if (s.fillers.empty()) {
        throw InvalidGrammar(std::string(label_name(c)) + "." +
                             std::string(slot_name(s.slot)) + " is empty");
      }
      std::set<std::string> seen;
      for (const auto& f : s.fillers) {
        if (tokenize(f).empty()) {
          throw InvalidGrammar(std::string(label_name(c)) + "." +
                               std::string(slot_name(s.slot)) + " has a blank filler");
        }
        if (!seen.insert(join_words(tokenize(f))).second) {
          throw InvalidGrammar(std::string(label_name(c)) + "." +
                               std::string(slot_name(s.slot)) + " repeats '" + f + "'");
        }
        if (s.slot == Slot::Verb) verb_owners[join_words(tokenize(f))].push_back(c);
      }
    }
  }
  std::set<std::string> shared;
  for (const auto& v : shared_verbs) shared.insert(join_words(tokenize(v)));
  for (const auto& [verb, owners] : verb_owners) {
    if (owners.size() > 1 && !shared.contains(verb)) {
      throw InvalidGrammar("verb '" + verb +
                           "' appears in several constructions but is not declared shared");
    }
  }
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> words;
  std::string current;
  auto flush = [&] {
    while (!current.empty() && std::ispunct(static_cast<unsigned char>(current.back()))) {
      current.pop_back();
    }
    if (!current.empty()) words.push_back(std::move(current));
    current.clear();
  };
  for (char ch : text) {
    const auto uch = static_cast<unsigned char>(ch);
    if (std::isspace(uch)) {
      flush();
    } else {
      current.push_back(static_cast<char>(std::tolower(uch)));
    }
  }
  flush();
  return words;
}

std::string join_words(std::span<const std::string> words) {
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) out.push_back(' ');
    out += words[i];
  }
  return out;
}

std::array<std::string, kNumConstructions> reference_examples() {
  return {"the baker baked a cake", "the teacher gave students homework",
          "the cat chased the mouse into the garden", "the chef cut the cake into slices"};
}

GrammarSpec default_grammar() {
  const std::vector<std::string> subjects = {
      "the baker", "the teacher", "the cat",    "the chef",   "she",
      "he",        "the farmer",  "the girl",   "the boy",    "the doctor",
      "the artist", "the student", "the worker", "the driver", "my neighbor",
      "the child"};

  GrammarSpec spec;
  spec.determiner_policy = DeterminerPolicy::Literal;
  spec.shared_verbs = {"kicked", "threw", "pushed", "rolled",
                       "slid",   "tossed", "carried", "passed"};
  auto verbs = [&](std::initializer_list<std::string> own) {
    std::vector<std::string> out = spec.shared_verbs;
    out.insert(out.end(), own);
    return out;
  };

  spec.at(Construction::Transitive).slots = {
      fill(Slot::Subject, subjects),
      fill(Slot::Verb, verbs({"baked", "read", "watched", "fixed", "found", "built"})),
      fill(Slot::Object, {"a cake", "the mouse", "the book", "the car", "the letter",
                          "the door", "the table", "the window", "a song", "the bread",
                          "the house", "the box", "the bike", "a picture"}),
  };
  spec.at(Construction::Ditransitive).slots = {
      fill(Slot::Subject, subjects),
      fill(Slot::Verb, verbs({"gave", "sent", "handed", "offered", "showed", "lent"})),
      fill(Slot::Recipient, {"students", "him", "her", "the children", "the boy",
                             "the girl", "his friend", "the teacher", "the manager",
                             "the customer", "me", "us"}),
      fill(Slot::Object, {"homework", "a book", "a letter", "the keys", "a gift",
                          "the money", "a story", "a ticket", "the ball",
                          "some flowers", "the news", "a map"}),
  };
  spec.at(Construction::CausedMotion).slots = {
      fill(Slot::Subject, subjects),
      fill(Slot::Verb, verbs({"pulled", "dragged", "moved", "lifted", "sneezed", "chased"})),
      fill(Slot::Object, {"the mouse", "the cart", "the ball", "the box", "the napkin",
                          "the chair", "the bag", "the boat", "the table", "the stone",
                          "the barrel", "the sheep"}),
      fill(Slot::Path, {"into the garden", "into the garage", "across the room",
                        "off the table", "onto the shelf", "out of the house",
                        "down the hill", "through the door", "up the stairs",
                        "into the river", "toward the gate", "under the bed"}),
  };
  spec.at(Construction::Resultative).slots = {
      fill(Slot::Subject, subjects),
      fill(Slot::Verb, verbs({"painted", "cut", "wiped", "hammered", "broke", "washed"})),
      fill(Slot::Object, {"the wall", "the cake", "the table", "the metal", "the door",
                          "the shirt", "the fence", "the floor", "the window",
                          "the pan", "the paper", "the eggs"}),
      fill(Slot::State, {"red", "into slices", "clean", "flat", "open", "shut",
                         "smooth", "dry", "blue", "white", "solid", "to pieces",
                         "awake", "black"}),
  };
  return spec;
}

}  // namespace ascprobe::corpus
