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

#include <stdexcept>
#include <string>

namespace ascprobe {

// Two families: DomainError (bad input, unsatisfiable request; CLI exit 2)
// and IoError (filesystem/environment; CLI exit 1).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

#define ASCPROBE_DOMAIN_ERROR(Name)            \
  class Name : public DomainError {            \
   public:                                     \
    explicit Name(const std::string& what_arg) \
        : DomainError(#Name ": " + what_arg) {} \
  }

// corpus
ASCPROBE_DOMAIN_ERROR(InsufficientCombinations);
ASCPROBE_DOMAIN_ERROR(EmptyCorpus);
ASCPROBE_DOMAIN_ERROR(DegenerateSplit);
ASCPROBE_DOMAIN_ERROR(InvalidGrammar);
// rnn
ASCPROBE_DOMAIN_ERROR(InvalidConfig);
ASCPROBE_DOMAIN_ERROR(TokenOutOfRange);
ASCPROBE_DOMAIN_ERROR(NonFiniteLoss);
ASCPROBE_DOMAIN_ERROR(CheckpointMismatch);
// probe
ASCPROBE_DOMAIN_ERROR(EmptySentence);
ASCPROBE_DOMAIN_ERROR(VocabMismatch);
// geometry
ASCPROBE_DOMAIN_ERROR(InvalidPointSet);
ASCPROBE_DOMAIN_ERROR(AllDimensionsConstant);
ASCPROBE_DOMAIN_ERROR(UndefinedIntraClass);
ASCPROBE_DOMAIN_ERROR(EigenFailure);
ASCPROBE_DOMAIN_ERROR(PerplexityTooHigh);
ASCPROBE_DOMAIN_ERROR(NonFiniteGradient);
// pipeline
ASCPROBE_DOMAIN_ERROR(MissingInput);

#undef ASCPROBE_DOMAIN_ERROR

}  // namespace ascprobe
