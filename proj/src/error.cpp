// Copyright 2026 The SHED Authors
// SPDX-License-Identifier: Apache-2.0

#include "shed/error.hpp"

namespace shed {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::MagicMismatch: return "MagicMismatch";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::RecordCountMismatch: return "RecordCountMismatch";
    case ErrorCode::NonFiniteEmbedding: return "NonFiniteEmbedding";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::MalformedRecord: return "MalformedRecord";
    case ErrorCode::UnknownId: return "UnknownId";
    case ErrorCode::TooManyClusters: return "TooManyClusters";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::CommandFailed: return "CommandFailed";
    case ErrorCode::MalformedScore: return "MalformedScore";
    case ErrorCode::Timeout: return "Timeout";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::MissingGroupLabel: return "MissingGroupLabel";
    case ErrorCode::MissingParameter: return "MissingParameter";
    case ErrorCode::TooLargeForExact: return "TooLargeForExact";
    case ErrorCode::InvalidGroupSize: return "InvalidGroupSize";
    case ErrorCode::EmptyActiveSet: return "EmptyActiveSet";
    case ErrorCode::TargetTooLarge: return "TargetTooLarge";
    case ErrorCode::InfeasibleBudget: return "InfeasibleBudget";
    case ErrorCode::InvalidParams: return "InvalidParams";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& detail)
    : std::runtime_error(std::string(to_string(code)) + ": " + detail),
      code_(code),
      detail_(detail) {}

StageError::StageError(std::string stage, const Error& cause)
    : Error(cause.code(), "[" + stage + "] " + cause.detail()), stage_(std::move(stage)) {}

}  // namespace shed
