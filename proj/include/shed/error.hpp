// Copyright 2026 The SHED Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace shed {

enum class ErrorCode {
  // dataset-store
  IoFailure,
  MagicMismatch,
  DimensionMismatch,
  RecordCountMismatch,
  NonFiniteEmbedding,
  DuplicateId,
  MalformedRecord,
  UnknownId,
  // clustering
  TooManyClusters,
  InvalidConfig,
  // valuation
  CommandFailed,
  MalformedScore,
  Timeout,
  NonFiniteValue,
  MissingGroupLabel,
  MissingParameter,
  TooLargeForExact,
  InvalidGroupSize,
  // sampling
  EmptyActiveSet,
  TargetTooLarge,
  // planner
  InfeasibleBudget,
  InvalidParams,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every failure raised by the library. `code()` identifies the condition;
/// `what()` carries the human-readable detail, prefixed with the code name.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail);

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

/// An Error annotated with the pipeline stage that raised it.
class StageError : public Error {
 public:
  StageError(std::string stage, const Error& cause);

  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

}  // namespace shed
