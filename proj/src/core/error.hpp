// Copyright 2026 The idroute Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace idr {

// Stable numeric values: the C API forwards them as status codes.
enum class ErrorCode : int {
  kDimension = 1,
  kDegenerate = 2,
  kAllBlocked = 3,
  kChannelParity = 4,
  kRank = 5,
  kDeterminism = 6,
  kNonFinite = 7,
  kArity = 8,
  kProjectionSpace = 9,
  kParameter = 10,
  kMaskConsistency = 11,
  kChunking = 12,
  kOrdering = 13,
  kTeacherForcing = 14,
  kSchedule = 15,
  kStep = 16,
  kContract = 17,
  kGeneration = 18,
  kLayout = 19,
  kFormat = 20,
  kCorruption = 21,
  kSchema = 22,
  kEvaluation = 23,
  kConfig = 24,
  kIo = 25,
};

const char* error_code_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace idr
