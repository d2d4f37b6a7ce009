// include/crossemo/base/error.h

// Copyright 2026  The crossemo Authors
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

#ifndef CROSSEMO_BASE_ERROR_H_
#define CROSSEMO_BASE_ERROR_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace crossemo {

/// Every failure the library reports carries one of these codes. Callers
/// (tests, the CLI) dispatch on the code; the message is for humans.
enum class ErrorCode {
  // audio
  kMalformedHeader,
  kUnsupportedEncoding,
  kEmptyAudio,
  kIoFailure,
  kNonPositiveFactor,
  kResultTooShort,
  kGainOutOfRange,
  // frontend
  kSampleRateMismatch,
  kCacheMismatch,
  // corpus
  kDuplicateId,
  kMissingField,
  kUnknownStyle,
  kTooFewSpeakers,
  kMissingSession,
  kClassTooSmall,
  kNotEnoughUtterances,
  kInvalidFoldPlan,
  // augment
  kBadRange,
  kUnknownRecipe,
  kTestLeakage,
  // model
  kShapeMismatch,
  kBatchTooSmall,
  kBadRate,
  kLabelOutOfRange,
  kBadConfig,
  kCheckpointMismatch,
  // train
  kTooFewPerClass,
  kEmptyTrainSet,
  kDivergedLoss,
  // eval
  kUnknownLabel,
  kEmptyMatrix,
  kMissingFold,
  kClassSetMismatch,
};

std::string_view ErrorCodeName(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string &message)
      : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

  /// True for input-validation failures (CLI exit code 2), false for
  /// runtime failures such as I/O or divergence (exit code 3).
  bool IsValidation() const noexcept;

 private:
  ErrorCode code_;
};

}  // namespace crossemo

#endif  // CROSSEMO_BASE_ERROR_H_
