// src/base/error.cc

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

#include "crossemo/base/error.h"

namespace crossemo {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMalformedHeader: return "MalformedHeader";
    case ErrorCode::kUnsupportedEncoding: return "UnsupportedEncoding";
    case ErrorCode::kEmptyAudio: return "EmptyAudio";
    case ErrorCode::kIoFailure: return "IoFailure";
    case ErrorCode::kNonPositiveFactor: return "NonPositiveFactor";
    case ErrorCode::kResultTooShort: return "ResultTooShort";
    case ErrorCode::kGainOutOfRange: return "GainOutOfRange";
    case ErrorCode::kSampleRateMismatch: return "SampleRateMismatch";
    case ErrorCode::kCacheMismatch: return "CacheMismatch";
    case ErrorCode::kDuplicateId: return "DuplicateId";
    case ErrorCode::kMissingField: return "MissingField";
    case ErrorCode::kUnknownStyle: return "UnknownStyle";
    case ErrorCode::kTooFewSpeakers: return "TooFewSpeakers";
    case ErrorCode::kMissingSession: return "MissingSession";
    case ErrorCode::kClassTooSmall: return "ClassTooSmall";
    case ErrorCode::kNotEnoughUtterances: return "NotEnoughUtterances";
    case ErrorCode::kInvalidFoldPlan: return "InvalidFoldPlan";
    case ErrorCode::kBadRange: return "BadRange";
    case ErrorCode::kUnknownRecipe: return "UnknownRecipe";
    case ErrorCode::kTestLeakage: return "TestLeakage";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kBatchTooSmall: return "BatchTooSmall";
    case ErrorCode::kBadRate: return "BadRate";
    case ErrorCode::kLabelOutOfRange: return "LabelOutOfRange";
    case ErrorCode::kBadConfig: return "BadConfig";
    case ErrorCode::kCheckpointMismatch: return "CheckpointMismatch";
    case ErrorCode::kTooFewPerClass: return "TooFewPerClass";
    case ErrorCode::kEmptyTrainSet: return "EmptyTrainSet";
    case ErrorCode::kDivergedLoss: return "DivergedLoss";
    case ErrorCode::kUnknownLabel: return "UnknownLabel";
    case ErrorCode::kEmptyMatrix: return "EmptyMatrix";
    case ErrorCode::kMissingFold: return "MissingFold";
    case ErrorCode::kClassSetMismatch: return "ClassSetMismatch";
  }
  return "Unknown";
}

bool Error::IsValidation() const noexcept {
  switch (code_) {
    case ErrorCode::kIoFailure:
    case ErrorCode::kDivergedLoss:
      return false;
    default:
      return true;
  }
}

}  // namespace crossemo
