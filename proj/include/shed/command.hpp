// Copyright 2026 The SHED Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <span>
#include <string>
#include <vector>

namespace shed {

/// Environment variable carrying a unique token for each value-command run.
inline constexpr const char* kRunIdVariable = "SHED_RUN_ID";

struct CommandOutput {
  int exit_status = 0;
  std::string standard_output;
};

/// Spawns `argv` (PATH lookup), feeds `input` on stdin, collects stdout.
/// stderr is inherited. Throws CommandFailed if the program cannot be
/// started or dies from a signal, Timeout if it outlives `timeout` (the
/// child is killed).
CommandOutput run_command(const std::vector<std::string>& argv, const std::string& input,
                          std::chrono::milliseconds timeout);

/// The value-function protocol: one id per line (LF) on stdin, one decimal
/// real on stdout, exit status 0. Throws CommandFailed, MalformedScore, Timeout.
double invoke_value_command(const std::vector<std::string>& argv, std::span<const std::string> ids,
                            std::chrono::milliseconds timeout);

}  // namespace shed
