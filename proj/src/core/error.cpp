// Copyright 2026 The idroute Authors
// SPDX-License-Identifier: Apache-2.0

#include "core/error.hpp"

namespace idr {

const char* error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kDimension: return "dimension error";
    case ErrorCode::kDegenerate: return "degenerate input";
    case ErrorCode::kAllBlocked: return "all-blocked attention row";
    case ErrorCode::kChannelParity: return "channel parity error";
    case ErrorCode::kRank: return "rank error";
    case ErrorCode::kDeterminism: return "determinism error";
    case ErrorCode::kNonFinite: return "non-finite value";
    case ErrorCode::kArity: return "arity error";
    case ErrorCode::kProjectionSpace: return "projection-space error";
    case ErrorCode::kParameter: return "parameter error";
    case ErrorCode::kMaskConsistency: return "mask consistency error";
    case ErrorCode::kChunking: return "chunking error";
    case ErrorCode::kOrdering: return "ordering error";
    case ErrorCode::kTeacherForcing: return "teacher-forcing error";
    case ErrorCode::kSchedule: return "schedule error";
    case ErrorCode::kStep: return "step error";
    case ErrorCode::kContract: return "contract error";
    case ErrorCode::kGeneration: return "generation error";
    case ErrorCode::kLayout: return "layout error";
    case ErrorCode::kFormat: return "format error";
    case ErrorCode::kCorruption: return "corruption error";
    case ErrorCode::kSchema: return "schema error";
    case ErrorCode::kEvaluation: return "evaluation error";
    case ErrorCode::kConfig: return "config error";
    case ErrorCode::kIo: return "io error";
  }
  return "unknown error";
}

}  // namespace idr
